// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/state.hpp"

#include <algorithm>
#include <stdexcept>

namespace specchain::ledger {
namespace {

std::optional<ApplyError> fail(std::string reason) {
  return ApplyError{std::move(reason)};
}

std::optional<ApplyError> apply_genesis(LedgerState& state, const Transaction& tx) {
  const auto& record = std::get<GenesisData>(tx.data);
  if (std::holds_alternative<GenesisConfigData>(record)) {
    const auto& config = std::get<GenesisConfigData>(record);
    if (config.tier_count < 1) return fail("tier count must be at least 1");
    state.policy = config.policy;
    state.tier_count = config.tier_count;
    return std::nullopt;
  }
  if (std::holds_alternative<GenesisNodeData>(record)) {
    const auto& node = std::get<GenesisNodeData>(record);
    if (node.node_id.empty()) return fail("empty node id");
    auto [it, inserted] = state.nodes.emplace(
        node.node_id,
        NodeRecord{node.location, node.balance, node.tolerance_mdb});
    (void)it;
    if (!inserted) return fail("duplicate node id " + node.node_id);
    return std::nullopt;
  }
  if (std::holds_alternative<GenesisPointData>(record)) {
    const auto& point = std::get<GenesisPointData>(record);
    if (point.point_id.empty()) return fail("empty point id");
    auto [it, inserted] = state.points.emplace(
        point.point_id, PointRecord{point.location, point.threshold_mdb});
    (void)it;
    if (!inserted) return fail("duplicate point id " + point.point_id);
    return std::nullopt;
  }
  const auto& grant = std::get<GenesisGrantData>(record);
  if (grant.grant_id.empty()) return fail("empty grant id");
  if (state.grants.count(grant.grant_id)) {
    return fail("duplicate grant id " + grant.grant_id);
  }
  if (!state.nodes.count(grant.holder_id)) {
    return fail("grant holder " + grant.holder_id + " is not a node");
  }
  if (grant.tier < 1 || grant.tier > state.tier_count) {
    return fail("grant tier out of range");
  }
  GrantRecord rec;
  rec.id = grant.grant_id;
  rec.holder = grant.holder_id;
  rec.radio = grant.radio;
  rec.location = grant.location;
  rec.tier = grant.tier;
  rec.weight = grant.weight;
  rec.active = grant.active;
  state.grants.emplace(grant.grant_id, std::move(rec));
  return std::nullopt;
}

std::optional<ApplyError> apply_trade(LedgerState& state, const Transaction& tx) {
  const auto& trade = std::get<TradeData>(tx.data);
  auto grant_it = state.grants.find(trade.seller_grant_id);
  if (grant_it == state.grants.end()) {
    return fail("unknown grant " + trade.seller_grant_id);
  }
  const GrantRecord& sold = grant_it->second;
  if (sold.locked) return fail("grant " + sold.id + " is locked");
  if (sold.holder != tx.auth_id) {
    return fail("authorizer " + tx.auth_id + " does not hold " + sold.id);
  }
  auto buyer_it = state.nodes.find(trade.buyer_id);
  if (buyer_it == state.nodes.end()) {
    return fail("unknown buyer " + trade.buyer_id);
  }
  if (buyer_it->second.balance < trade.price) {
    return fail("buyer balance below price");
  }
  std::string minted_id = minted_grant_id(tx_id(tx));
  if (state.grants.count(minted_id)) return fail("minted grant id collision");

  buyer_it->second.balance -= trade.price;
  state.nodes.at(sold.holder).balance += trade.price;

  GrantRecord minted;
  minted.id = minted_id;
  minted.holder = trade.buyer_id;
  minted.radio = trade.new_radio;
  minted.location = trade.new_location;
  minted.tier = sold.tier;
  minted.weight = sold.weight;
  minted.active = sold.active;
  for (auto& [point_id, per_grant] : state.allowances) {
    auto entry = per_grant.find(sold.id);
    if (entry == per_grant.end()) continue;
    per_grant.emplace(minted_id, entry->second);
    per_grant.erase(entry);
  }
  state.grants.erase(grant_it);
  state.grants.emplace(minted_id, std::move(minted));
  return std::nullopt;
}

std::optional<ApplyError> apply_budget_adjust(LedgerState& state,
                                              const Transaction& tx) {
  const auto& adj = std::get<BudgetAdjustData>(tx.data);
  if (adj.delta_aw == 0) return fail("zero budget delta");
  auto donor_it = state.grants.find(adj.donor_grant_id);
  if (donor_it == state.grants.end()) {
    return fail("unknown donor grant " + adj.donor_grant_id);
  }
  if (!state.grants.count(adj.recipient_grant_id)) {
    return fail("unknown recipient grant " + adj.recipient_grant_id);
  }
  if (adj.donor_grant_id == adj.recipient_grant_id) {
    return fail("donor and recipient are the same grant");
  }
  if (!state.points.count(adj.point_id)) {
    return fail("unknown protection point " + adj.point_id);
  }
  if (donor_it->second.holder != tx.auth_id) {
    return fail("authorizer does not hold the donor grant");
  }
  uint64_t donor_allowance = allowance_of(state, adj.point_id, adj.donor_grant_id);
  if (donor_allowance < adj.delta_aw) return fail("insufficient donor budget");
  auto& per_grant = state.allowances[adj.point_id];
  per_grant[adj.donor_grant_id] = donor_allowance - adj.delta_aw;
  per_grant[adj.recipient_grant_id] += adj.delta_aw;
  return std::nullopt;
}

std::optional<ApplyError> apply_lock(LedgerState& state, const Transaction& tx) {
  const auto& lock = std::get<LockData>(tx.data);
  if (lock.trade_id.empty()) return fail("empty trade id");
  auto it = state.grants.find(lock.grant_id);
  if (it == state.grants.end()) return fail("unknown grant " + lock.grant_id);
  GrantRecord& grant = it->second;
  if (grant.locked) return fail("grant " + grant.id + " is already locked");
  if (grant.holder != tx.auth_id) {
    return fail("authorizer does not hold the grant");
  }
  grant.locked = true;
  grant.lock_trade_id = lock.trade_id;
  grant.lock_dest_chain = lock.dest_chain_id;
  grant.lock_expiry_tick = lock.expiry_tick;
  return std::nullopt;
}

std::optional<ApplyError> apply_unlock(LedgerState& state, const Transaction& tx) {
  const auto& unlock = std::get<UnlockData>(tx.data);
  auto it = state.grants.find(unlock.grant_id);
  if (it == state.grants.end()) return fail("unknown grant " + unlock.grant_id);
  GrantRecord& grant = it->second;
  if (!grant.locked) return fail("grant " + grant.id + " is not locked");
  if (grant.lock_trade_id != unlock.trade_id) {
    return fail("unlock trade id does not match the lock");
  }
  if (grant.holder != tx.auth_id) {
    return fail("authorizer does not hold the grant");
  }
  grant.locked = false;
  grant.lock_trade_id.clear();
  grant.lock_dest_chain.clear();
  grant.lock_expiry_tick = 0;
  return std::nullopt;
}

std::optional<ApplyError> apply_cross_retire(LedgerState& state,
                                             const Transaction& tx) {
  const auto& retire = std::get<CrossRetireData>(tx.data);
  auto it = state.grants.find(retire.grant_id);
  if (it == state.grants.end()) return fail("unknown grant " + retire.grant_id);
  const GrantRecord& grant = it->second;
  if (!grant.locked) return fail("grant " + grant.id + " is not locked");
  if (grant.lock_trade_id != retire.trade_id) {
    return fail("retire trade id does not match the lock");
  }
  if (grant.holder != tx.auth_id) {
    return fail("authorizer does not hold the grant");
  }
  for (auto& [point_id, per_grant] : state.allowances) {
    per_grant.erase(retire.grant_id);
  }
  state.grants.erase(it);
  return std::nullopt;
}

std::optional<ApplyError> apply_cross_mint(LedgerState& state,
                                           const Transaction& tx) {
  const auto& mint = std::get<CrossMintData>(tx.data);
  const GenesisGrantData& grant = mint.grant;
  if (grant.grant_id.empty()) return fail("empty grant id");
  if (state.grants.count(grant.grant_id)) {
    return fail("grant " + grant.grant_id + " already exists");
  }
  if (!state.nodes.count(grant.holder_id)) {
    return fail("mint holder " + grant.holder_id + " is not a node");
  }
  if (grant.tier < 1 || grant.tier > state.tier_count) {
    return fail("minted grant tier out of range");
  }
  GrantRecord rec;
  rec.id = grant.grant_id;
  rec.holder = grant.holder_id;
  rec.radio = grant.radio;
  rec.location = grant.location;
  rec.tier = grant.tier;
  rec.weight = grant.weight;
  rec.active = grant.active;
  state.grants.emplace(grant.grant_id, std::move(rec));
  return std::nullopt;
}

std::optional<ApplyError> apply_decision(LedgerState& state,
                                         const Transaction& tx) {
  const auto& decision = std::get<DecisionData>(tx.data);
  if (decision.trade_id.empty()) return fail("empty trade id");
  auto it = state.decisions.find(decision.trade_id);
  if (it == state.decisions.end()) {
    if (decision.phase != DecisionPhase::kLocked) {
      return fail("first decision record must be Locked");
    }
    state.decisions.emplace(decision.trade_id, decision.phase);
    return std::nullopt;
  }
  DecisionPhase current = it->second;
  bool forward =
      (current == DecisionPhase::kLocked &&
       (decision.phase == DecisionPhase::kAttested ||
        decision.phase == DecisionPhase::kAborted)) ||
      (current == DecisionPhase::kAttested &&
       (decision.phase == DecisionPhase::kCommitted ||
        decision.phase == DecisionPhase::kAborted));
  if (!forward) return fail("decision phase may not regress");
  it->second = decision.phase;
  return std::nullopt;
}

}  // namespace

std::optional<ApplyError> LedgerState::apply(const Transaction& tx,
                                             uint64_t block_height) {
  if (tx.kind() == TxKind::kGenesis) {
    if (block_height != 0) return fail("genesis record outside block 0");
    return apply_genesis(*this, tx);
  }
  if (block_height == 0) return fail("non-genesis record in block 0");
  switch (tx.kind()) {
    case TxKind::kTrade:
      return apply_trade(*this, tx);
    case TxKind::kBudgetAdjust:
      return apply_budget_adjust(*this, tx);
    case TxKind::kLock:
      return apply_lock(*this, tx);
    case TxKind::kUnlock:
      return apply_unlock(*this, tx);
    case TxKind::kCrossRetire:
      return apply_cross_retire(*this, tx);
    case TxKind::kCrossMint:
      return apply_cross_mint(*this, tx);
    case TxKind::kDecision:
      return apply_decision(*this, tx);
    default:
      return fail("unhandled transaction kind");
  }
}

uint64_t allowance_of(const LedgerState& state, const std::string& point_id,
                      const std::string& grant_id) {
  auto point_it = state.allowances.find(point_id);
  if (point_it == state.allowances.end()) return 0;
  auto grant_it = point_it->second.find(grant_id);
  return grant_it == point_it->second.end() ? 0 : grant_it->second;
}

void derive_initial_allowances(LedgerState& state) {
  state.allowances.clear();
  if (state.grants.empty()) return;
  for (const auto& [point_id, point] : state.points) {
    uint64_t budget_aw = mw_to_aw_floor(dbm_to_mw(mdb_to_dbm(point.threshold_mdb)));
    auto& per_grant = state.allowances[point_id];
    if (state.policy == AllocationPolicy::kEqual) {
      uint64_t n = state.grants.size();
      uint64_t base = budget_aw / n;
      uint64_t remainder = budget_aw % n;
      for (const auto& [grant_id, grant] : state.grants) {
        per_grant[grant_id] = base + (remainder > 0 ? 1 : 0);
        if (remainder > 0) --remainder;
      }
    } else {
      uint64_t total_weight = 0;
      for (const auto& [grant_id, grant] : state.grants) {
        total_weight += grant.weight;
      }
      if (total_weight == 0) {
        throw std::invalid_argument("proportional allocation needs weights");
      }
      uint64_t assigned = 0;
      for (const auto& [grant_id, grant] : state.grants) {
        uint64_t share = static_cast<uint64_t>(
            static_cast<unsigned __int128>(budget_aw) * grant.weight /
            total_weight);
        per_grant[grant_id] = share;
        assigned += share;
      }
      // Division remainder goes to the first grants in id order so the
      // shares sum exactly to the quantized budget.
      uint64_t leftover = budget_aw - assigned;
      for (auto& [grant_id, share] : per_grant) {
        if (leftover == 0) break;
        ++share;
        --leftover;
      }
    }
  }
}

Block build_genesis_block(const GenesisSpec& spec) {
  auto nodes = spec.nodes;
  auto points = spec.points;
  auto grants = spec.grants;
  std::sort(nodes.begin(), nodes.end(),
            [](const auto& a, const auto& b) { return a.node_id < b.node_id; });
  std::sort(points.begin(), points.end(),
            [](const auto& a, const auto& b) { return a.point_id < b.point_id; });
  std::sort(grants.begin(), grants.end(),
            [](const auto& a, const auto& b) { return a.grant_id < b.grant_id; });

  std::vector<Transaction> txs;
  txs.push_back(Transaction{
      0, "",
      GenesisData{GenesisConfigData{spec.policy, spec.tier_count}}});
  for (const auto& node : nodes) txs.push_back(Transaction{0, "", GenesisData{node}});
  for (const auto& point : points) {
    txs.push_back(Transaction{0, "", GenesisData{point}});
  }
  for (const auto& grant : grants) {
    txs.push_back(Transaction{0, "", GenesisData{grant}});
  }
  std::vector<ZoneRecord> zones(txs.size());
  return make_block(0, kZeroDigest, std::move(txs), std::move(zones));
}

std::pair<Chain, LedgerState> make_genesis(const GenesisSpec& spec) {
  Block genesis = build_genesis_block(spec);
  LedgerState state;
  if (auto err = apply_block(state, genesis)) {
    throw std::invalid_argument("invalid genesis config: " + err->reason);
  }
  return {Chain::with_genesis(std::move(genesis)), std::move(state)};
}

std::optional<ApplyError> apply_block(LedgerState& state, const Block& block) {
  LedgerState scratch = state;
  for (const auto& tx : block.txs) {
    if (auto err = scratch.apply(tx, block.height)) return err;
  }
  if (block.height == 0) derive_initial_allowances(scratch);
  state = std::move(scratch);
  return std::nullopt;
}

LedgerState replay_chain(const Chain& chain) {
  LedgerState state;
  for (const auto& block : chain.blocks()) {
    if (auto err = apply_block(state, block)) {
      throw std::runtime_error("replay failed at height " +
                               std::to_string(block.height) + ": " + err->reason);
    }
  }
  return state;
}

}  // namespace specchain::ledger
