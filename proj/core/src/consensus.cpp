// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/consensus.hpp"

#include <algorithm>
#include <map>

namespace specchain::consensus {
namespace {

using ledger::GrantRecord;
using ledger::LedgerState;
using ledger::Transaction;
using ledger::TxKind;

Vote approve(const std::string& voter, const Digest& id) {
  return Vote{voter, id, Verdict::kApprove, Reason::kOk};
}

Vote reject(const std::string& voter, const Digest& id, Reason reason) {
  return Vote{voter, id, Verdict::kReject, reason};
}

/// The radio change a trade causes: the sold transmitter goes silent and the
/// minted one starts at the new location. An inactive grant changes nothing.
TradeDelta trade_delta(const ledger::TradeData& trade, const GrantRecord& sold,
                       const std::string& minted_id) {
  TradeDelta delta;
  if (!sold.active) return delta;
  delta.removed.push_back(sold.id);
  delta.added.push_back(
      EnvGrant{minted_id, trade.buyer_id, trade.new_location, trade.new_radio});
  return delta;
}

/// True when every protection point stays within its threshold under delta.
bool points_within_thresholds(const EnvView& env, const TradeDelta& delta) {
  for (const auto& point : env.points) {
    double agg = aggregate_dbm(env, point.location, delta);
    if (agg > mdb_to_dbm(point.threshold_mdb)) return false;
  }
  return true;
}

/// True when the voter's own receiver stays within its tolerance under delta.
bool voter_within_tolerance(const std::string& voter, const LedgerState& state,
                            const EnvView& env, const TradeDelta& delta) {
  auto it = state.nodes.find(voter);
  if (it == state.nodes.end()) return false;
  double agg = aggregate_dbm(env, it->second.location, delta, voter);
  return agg <= mdb_to_dbm(it->second.tolerance_mdb);
}

std::optional<Reason> check_trade(const Transaction& tx,
                                  const ledger::TradeData& trade,
                                  const LedgerState& state, const EnvView& env,
                                  std::span<const std::string> tolerance_voters) {
  auto grant_it = state.grants.find(trade.seller_grant_id);
  if (grant_it == state.grants.end()) return Reason::kOwnership;
  const GrantRecord& sold = grant_it->second;
  if (sold.locked) return Reason::kOwnership;
  if (sold.holder != tx.auth_id) return Reason::kOwnership;

  TradeDelta delta = trade_delta(trade, sold, ledger::minted_grant_id(tx_id(tx)));
  if (!points_within_thresholds(env, delta)) return Reason::kBudgetViolation;
  for (const auto& voter : tolerance_voters) {
    if (!voter_within_tolerance(voter, state, env, delta)) {
      return Reason::kOwnInterference;
    }
  }
  return std::nullopt;
}

std::optional<Reason> check_budget_adjust(const Transaction& tx,
                                          const ledger::BudgetAdjustData& adj,
                                          const LedgerState& state) {
  auto donor_it = state.grants.find(adj.donor_grant_id);
  if (donor_it == state.grants.end()) return Reason::kOwnership;
  if (donor_it->second.holder != tx.auth_id) return Reason::kOwnership;
  if (adj.delta_aw == 0) return Reason::kBudgetViolation;
  if (!state.grants.count(adj.recipient_grant_id)) return Reason::kBudgetViolation;
  if (adj.donor_grant_id == adj.recipient_grant_id) return Reason::kBudgetViolation;
  if (!state.points.count(adj.point_id)) return Reason::kBudgetViolation;
  uint64_t allowance = ledger::allowance_of(state, adj.point_id, adj.donor_grant_id);
  if (allowance < adj.delta_aw) return Reason::kBudgetViolation;
  return std::nullopt;
}

/// Authorization check shared by the lock lifecycle kinds.
std::optional<Reason> check_lock_lifecycle(const Transaction& tx,
                                           const LedgerState& state) {
  switch (tx.kind()) {
    case TxKind::kLock: {
      const auto& lock = std::get<ledger::LockData>(tx.data);
      auto it = state.grants.find(lock.grant_id);
      if (it == state.grants.end() || it->second.locked ||
          it->second.holder != tx.auth_id || lock.trade_id.empty()) {
        return Reason::kOwnership;
      }
      return std::nullopt;
    }
    case TxKind::kUnlock: {
      const auto& unlock = std::get<ledger::UnlockData>(tx.data);
      auto it = state.grants.find(unlock.grant_id);
      if (it == state.grants.end() || !it->second.locked ||
          it->second.lock_trade_id != unlock.trade_id ||
          it->second.holder != tx.auth_id) {
        return Reason::kOwnership;
      }
      return std::nullopt;
    }
    case TxKind::kCrossRetire: {
      const auto& retire = std::get<ledger::CrossRetireData>(tx.data);
      auto it = state.grants.find(retire.grant_id);
      if (it == state.grants.end() || !it->second.locked ||
          it->second.lock_trade_id != retire.trade_id ||
          it->second.holder != tx.auth_id) {
        return Reason::kOwnership;
      }
      return std::nullopt;
    }
    case TxKind::kCrossMint: {
      const auto& mint = std::get<ledger::CrossMintData>(tx.data);
      if (state.grants.count(mint.grant.grant_id) ||
          !state.nodes.count(mint.grant.holder_id)) {
        return Reason::kOwnership;
      }
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

}  // namespace

const char* to_string(Reason reason) {
  switch (reason) {
    case Reason::kOk:
      return "ok";
    case Reason::kOwnership:
      return "ownership";
    case Reason::kBudgetViolation:
      return "budget-violation";
    case Reason::kOwnInterference:
      return "own-interference";
  }
  return "unknown";
}

EnvView env_from_state(const LedgerState& state,
                       const radio::PropagationModel& prop) {
  EnvView env;
  env.prop = prop;
  for (const auto& [id, grant] : state.grants) {
    if (!grant.active) continue;
    env.grants.push_back(EnvGrant{id, grant.holder, grant.location, grant.radio});
  }
  for (const auto& [id, point] : state.points) {
    env.points.push_back(EnvPoint{id, point.location, point.threshold_mdb});
  }
  return env;
}

void merge_env(EnvView& dst, const EnvView& extra) {
  dst.grants.insert(dst.grants.end(), extra.grants.begin(), extra.grants.end());
  dst.points.insert(dst.points.end(), extra.points.begin(), extra.points.end());
}

double aggregate_dbm(const EnvView& env, const Location& rx,
                     const TradeDelta& delta, const std::string& exclude_holder) {
  std::vector<double> levels;
  levels.reserve(env.grants.size() + delta.added.size());
  auto removed = [&](const std::string& id) {
    return std::find(delta.removed.begin(), delta.removed.end(), id) !=
           delta.removed.end();
  };
  for (const auto& grant : env.grants) {
    if (removed(grant.id)) continue;
    if (!exclude_holder.empty() && grant.holder == exclude_holder) continue;
    levels.push_back(radio::received_power_at_dbm(
        env.prop, grant.location, grant.radio.tx_power_dbm(), rx));
  }
  for (const auto& grant : delta.added) {
    if (!exclude_holder.empty() && grant.holder == exclude_holder) continue;
    levels.push_back(radio::received_power_at_dbm(
        env.prop, grant.location, grant.radio.tx_power_dbm(), rx));
  }
  return radio::aggregate_interference_dbm(levels);
}

std::vector<PointMargin> point_margins(const EnvView& env) {
  std::vector<PointMargin> margins;
  margins.reserve(env.points.size());
  TradeDelta none;
  for (const auto& point : env.points) {
    PointMargin m;
    m.point_id = point.id;
    m.aggregate_dbm = aggregate_dbm(env, point.location, none);
    m.threshold_dbm = mdb_to_dbm(point.threshold_mdb);
    m.margin_db = m.aggregate_dbm - m.threshold_dbm;
    margins.push_back(std::move(m));
  }
  return margins;
}

ledger::ZoneRecord zone_for_tx(const Transaction& tx, const LedgerState& state,
                               const radio::PropagationModel& prop,
                               double sensitivity_dbm) {
  std::set<std::string> voters;
  std::set<std::string> points;
  switch (tx.kind()) {
    case TxKind::kTrade: {
      const auto& trade = std::get<ledger::TradeData>(tx.data);
      auto grant_it = state.grants.find(trade.seller_grant_id);
      if (grant_it == state.grants.end()) {
        // Unknown grant: no radio picture to derive a zone from. The
        // counterparties alone vote and reject on ownership.
        voters.insert(tx.auth_id);
        voters.insert(trade.buyer_id);
        break;
      }
      const GrantRecord& sold = grant_it->second;
      radio::ZoneQuery query;
      query.seller_id = sold.holder;
      query.buyer_id = trade.buyer_id;
      query.old_location = sold.location;
      query.old_tx_power_dbm = sold.radio.tx_power_dbm();
      query.new_location = trade.new_location;
      query.new_tx_power_dbm = trade.new_radio.tx_power_dbm();

      std::vector<radio::ZonePoint> node_locs;
      node_locs.reserve(state.nodes.size());
      for (const auto& [id, node] : state.nodes) {
        node_locs.push_back(radio::ZonePoint{id, node.location});
      }
      std::vector<radio::ZonePoint> point_locs;
      point_locs.reserve(state.points.size());
      for (const auto& [id, point] : state.points) {
        point_locs.push_back(radio::ZonePoint{id, point.location});
      }
      auto zone = radio::validation_zone(query, node_locs, point_locs, prop,
                                         sensitivity_dbm);
      voters = std::move(zone.voters);
      points = std::move(zone.protection_points);
      break;
    }
    case TxKind::kBudgetAdjust: {
      const auto& adj = std::get<ledger::BudgetAdjustData>(tx.data);
      voters.insert(tx.auth_id);
      if (auto it = state.grants.find(adj.donor_grant_id); it != state.grants.end()) {
        voters.insert(it->second.holder);
      }
      if (auto it = state.grants.find(adj.recipient_grant_id);
          it != state.grants.end()) {
        voters.insert(it->second.holder);
      }
      if (state.points.count(adj.point_id)) points.insert(adj.point_id);
      break;
    }
    case TxKind::kCrossMint:
      voters.insert(std::get<ledger::CrossMintData>(tx.data).grant.holder_id);
      break;
    case TxKind::kLock:
    case TxKind::kUnlock:
    case TxKind::kCrossRetire:
      voters.insert(tx.auth_id);
      break;
    case TxKind::kGenesis:
    case TxKind::kDecision:
      break;
  }
  ledger::ZoneRecord record;
  record.voter_ids.assign(voters.begin(), voters.end());
  record.protection_point_ids.assign(points.begin(), points.end());
  return record;
}

Vote node_vote(const std::string& voter, const Transaction& tx,
               const LedgerState& state, const EnvView& env,
               const ConsensusConfig& config) {
  (void)config;
  Digest id = tx_id(tx);
  switch (tx.kind()) {
    case TxKind::kTrade: {
      const auto& trade = std::get<ledger::TradeData>(tx.data);
      std::string tolerance_voters[] = {voter};
      if (auto failed = check_trade(tx, trade, state, env, tolerance_voters)) {
        return reject(voter, id, *failed);
      }
      return approve(voter, id);
    }
    case TxKind::kBudgetAdjust: {
      const auto& adj = std::get<ledger::BudgetAdjustData>(tx.data);
      if (auto failed = check_budget_adjust(tx, adj, state)) {
        return reject(voter, id, *failed);
      }
      return approve(voter, id);
    }
    case TxKind::kLock:
    case TxKind::kUnlock:
    case TxKind::kCrossRetire:
    case TxKind::kCrossMint: {
      if (auto failed = check_lock_lifecycle(tx, state)) {
        return reject(voter, id, *failed);
      }
      return approve(voter, id);
    }
    case TxKind::kGenesis:
    case TxKind::kDecision:
      return approve(voter, id);
  }
  return reject(voter, id, Reason::kOwnership);
}

Vote node_vote_incoming(const std::string& voter, const Digest& probe_id,
                        const GrantRecord& incoming, const LedgerState& state,
                        const EnvView& env, const ConsensusConfig& config) {
  (void)config;
  TradeDelta delta;
  delta.added.push_back(
      EnvGrant{incoming.id, incoming.holder, incoming.location, incoming.radio});
  if (!points_within_thresholds(env, delta)) {
    return reject(voter, probe_id, Reason::kBudgetViolation);
  }
  if (!voter_within_tolerance(voter, state, env, delta)) {
    return reject(voter, probe_id, Reason::kOwnInterference);
  }
  return approve(voter, probe_id);
}

bool finalize(const std::set<std::string>& zone_voters,
              std::span<const Vote> votes) {
  std::map<std::string, Verdict> recorded;
  for (const auto& vote : votes) {
    if (!zone_voters.count(vote.voter)) continue;
    auto [it, inserted] = recorded.emplace(vote.voter, vote.verdict);
    if (!inserted && it->second != vote.verdict) return false;
  }
  for (const auto& voter : zone_voters) {
    auto it = recorded.find(voter);
    if (it == recorded.end() || it->second != Verdict::kApprove) return false;
  }
  return true;
}

BlockFormation form_block(const LedgerState& tip_state,
                          const EnvView& external_env,
                          const radio::PropagationModel& prop,
                          const ConsensusConfig& config,
                          std::vector<PendingTx> pending, uint64_t next_height,
                          const Digest& prev_hash) {
  (void)config;
  std::stable_sort(pending.begin(), pending.end(),
                   [](const PendingTx& a, const PendingTx& b) {
                     if (a.tx.timestamp != b.tx.timestamp) {
                       return a.tx.timestamp < b.tx.timestamp;
                     }
                     return tx_id(a.tx) < tx_id(b.tx);
                   });

  BlockFormation result;
  LedgerState scratch = tip_state;
  for (auto& entry : pending) {
    LedgerState trial = scratch;
    if (trial.apply(entry.tx, next_height)) {
      result.dropped.push_back(std::move(entry));
      continue;
    }
    if (entry.tx.kind() == TxKind::kTrade) {
      EnvView env = env_from_state(scratch, prop);
      merge_env(env, external_env);
      const auto& trade = std::get<ledger::TradeData>(entry.tx.data);
      if (check_trade(entry.tx, trade, scratch, env, entry.zone.voter_ids)) {
        result.dropped.push_back(std::move(entry));
        continue;
      }
    }
    scratch = std::move(trial);
    result.included.push_back(std::move(entry));
  }

  result.next_state = std::move(scratch);
  if (result.included.empty()) return result;

  std::vector<Transaction> txs;
  std::vector<ledger::ZoneRecord> zones;
  txs.reserve(result.included.size());
  zones.reserve(result.included.size());
  for (const auto& entry : result.included) {
    txs.push_back(entry.tx);
    zones.push_back(entry.zone);
  }
  result.block = make_block(next_height, prev_hash, std::move(txs), std::move(zones));
  return result;
}

}  // namespace specchain::consensus
