// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/transaction.hpp"

#include "specchain/wire.hpp"

namespace specchain::ledger {

namespace {

void write_location(ByteWriter& w, const Location& loc) {
  w.i64(loc.x_mm);
  w.i64(loc.y_mm);
}

Location read_location(ByteReader& r) {
  Location loc;
  loc.x_mm = r.i64();
  loc.y_mm = r.i64();
  return loc;
}

void write_digest(ByteWriter& w, const Digest& d) { w.raw(d); }

Digest read_digest(ByteReader& r) {
  Digest d;
  auto raw = r.raw(d.size());
  std::copy(raw.begin(), raw.end(), d.begin());
  return d;
}

void write_grant(ByteWriter& w, const GenesisGrantData& g) {
  w.str(g.grant_id);
  w.str(g.holder_id);
  w.u16(g.radio.channel);
  write_location(w, g.location);
  w.i32(g.radio.tx_power_mdb);
  w.u8(g.tier);
  w.u32(g.weight);
  w.u8(g.active ? 1 : 0);
}

GenesisGrantData read_grant(ByteReader& r) {
  GenesisGrantData g;
  g.grant_id = r.str();
  g.holder_id = r.str();
  g.radio.channel = r.u16();
  g.location = read_location(r);
  g.radio.tx_power_mdb = r.i32();
  g.tier = r.u8();
  g.weight = r.u32();
  g.active = r.u8() != 0;
  return g;
}

void write_payload(ByteWriter& w, const TradeData& t) {
  w.str(t.seller_grant_id);
  w.str(t.buyer_id);
  write_location(w, t.new_location);
  w.i32(t.new_radio.tx_power_mdb);
  w.u16(t.new_radio.channel);
  w.u64(t.price);
}

void write_payload(ByteWriter& w, const BudgetAdjustData& b) {
  w.str(b.donor_grant_id);
  w.str(b.recipient_grant_id);
  w.str(b.point_id);
  w.u64(b.delta_aw);
}

void write_payload(ByteWriter& w, const GenesisData& g) {
  w.u8(static_cast<uint8_t>(g.index()));
  std::visit(
      [&](const auto& rec) {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, GenesisNodeData>) {
          w.str(rec.node_id);
          write_location(w, rec.location);
          w.u64(rec.balance);
          w.i32(rec.tolerance_mdb);
        } else if constexpr (std::is_same_v<T, GenesisPointData>) {
          w.str(rec.point_id);
          write_location(w, rec.location);
          w.i32(rec.threshold_mdb);
        } else if constexpr (std::is_same_v<T, GenesisGrantData>) {
          write_grant(w, rec);
        } else {
          w.u8(static_cast<uint8_t>(rec.policy));
          w.u8(rec.tier_count);
        }
      },
      g);
}

void write_payload(ByteWriter& w, const LockData& l) {
  w.str(l.grant_id);
  w.str(l.trade_id);
  w.str(l.dest_chain_id);
  w.u64(l.expiry_tick);
}

void write_payload(ByteWriter& w, const UnlockData& u) {
  w.str(u.grant_id);
  w.str(u.trade_id);
}

void write_payload(ByteWriter& w, const CrossRetireData& c) {
  w.str(c.grant_id);
  w.str(c.trade_id);
  write_digest(w, c.decision_ref);
}

void write_payload(ByteWriter& w, const CrossMintData& c) {
  w.str(c.trade_id);
  write_digest(w, c.decision_ref);
  write_grant(w, c.grant);
}

void write_payload(ByteWriter& w, const DecisionData& d) {
  w.str(d.trade_id);
  w.u8(static_cast<uint8_t>(d.phase));
  w.u32(static_cast<uint32_t>(d.notary_ids.size()));
  for (const auto& id : d.notary_ids) w.str(id);
}

}  // namespace

const char* to_string(DecisionPhase phase) {
  switch (phase) {
    case DecisionPhase::kLocked: return "locked";
    case DecisionPhase::kAttested: return "attested";
    case DecisionPhase::kCommitted: return "committed";
    case DecisionPhase::kAborted: return "aborted";
  }
  return "?";
}

std::vector<uint8_t> serialize_tx(const Transaction& tx) {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(tx.kind()));
  w.u64(tx.timestamp);
  w.str(tx.auth_id);
  std::visit([&](const auto& payload) { write_payload(w, payload); }, tx.data);
  return w.take();
}

Transaction parse_tx(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  Transaction tx;
  auto kind = r.u8();
  tx.timestamp = r.u64();
  tx.auth_id = r.str();
  switch (static_cast<TxKind>(kind)) {
    case TxKind::kTrade: {
      TradeData t;
      t.seller_grant_id = r.str();
      t.buyer_id = r.str();
      t.new_location = read_location(r);
      t.new_radio.tx_power_mdb = r.i32();
      t.new_radio.channel = r.u16();
      t.price = r.u64();
      tx.data = std::move(t);
      break;
    }
    case TxKind::kBudgetAdjust: {
      BudgetAdjustData b;
      b.donor_grant_id = r.str();
      b.recipient_grant_id = r.str();
      b.point_id = r.str();
      b.delta_aw = r.u64();
      tx.data = std::move(b);
      break;
    }
    case TxKind::kGenesis: {
      auto sub = r.u8();
      switch (static_cast<GenesisRecordKind>(sub)) {
        case GenesisRecordKind::kNode: {
          GenesisNodeData n;
          n.node_id = r.str();
          n.location = read_location(r);
          n.balance = r.u64();
          n.tolerance_mdb = r.i32();
          tx.data = GenesisData{std::move(n)};
          break;
        }
        case GenesisRecordKind::kPoint: {
          GenesisPointData p;
          p.point_id = r.str();
          p.location = read_location(r);
          p.threshold_mdb = r.i32();
          tx.data = GenesisData{std::move(p)};
          break;
        }
        case GenesisRecordKind::kGrant:
          tx.data = GenesisData{read_grant(r)};
          break;
        case GenesisRecordKind::kConfig: {
          GenesisConfigData c;
          auto policy = r.u8();
          if (policy > 1) throw WireError("bad allocation policy");
          c.policy = static_cast<AllocationPolicy>(policy);
          c.tier_count = r.u8();
          tx.data = GenesisData{c};
          break;
        }
        default:
          throw WireError("unknown genesis record kind");
      }
      break;
    }
    case TxKind::kLock: {
      LockData l;
      l.grant_id = r.str();
      l.trade_id = r.str();
      l.dest_chain_id = r.str();
      l.expiry_tick = r.u64();
      tx.data = std::move(l);
      break;
    }
    case TxKind::kUnlock: {
      UnlockData u;
      u.grant_id = r.str();
      u.trade_id = r.str();
      tx.data = std::move(u);
      break;
    }
    case TxKind::kCrossRetire: {
      CrossRetireData c;
      c.grant_id = r.str();
      c.trade_id = r.str();
      c.decision_ref = read_digest(r);
      tx.data = std::move(c);
      break;
    }
    case TxKind::kCrossMint: {
      CrossMintData c;
      c.trade_id = r.str();
      c.decision_ref = read_digest(r);
      c.grant = read_grant(r);
      tx.data = std::move(c);
      break;
    }
    case TxKind::kDecision: {
      DecisionData d;
      d.trade_id = r.str();
      auto phase = r.u8();
      if (phase > 3) throw WireError("bad decision phase");
      d.phase = static_cast<DecisionPhase>(phase);
      auto n = r.u32();
      d.notary_ids.reserve(n);
      for (uint32_t i = 0; i < n; ++i) d.notary_ids.push_back(r.str());
      tx.data = std::move(d);
      break;
    }
    default:
      throw WireError("unknown tx kind");
  }
  if (!r.done()) throw WireError("trailing bytes after tx");
  return tx;
}

std::string minted_grant_id(const Digest& trade_tx_id) {
  return "g" + to_hex(trade_tx_id).substr(0, 16);
}

}  // namespace specchain::ledger
