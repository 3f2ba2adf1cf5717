// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/tiers.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace specchain::tiers {
namespace {

using ledger::GrantRecord;
using ledger::LedgerState;
using ledger::PointRecord;

/// An entrant fits when every protection point's allowance covers its
/// predicted contribution. All quantities are integer attowatts, so the
/// comparison is exact.
bool fits_allowances(const LedgerState& state, const GrantRecord& grant,
                     const radio::PropagationModel& prop) {
  for (const auto& [point_id, point] : state.points) {
    if (contribution_aw(grant, point, prop) >
        ledger::allowance_of(state, point_id, grant.id)) {
      return false;
    }
  }
  return true;
}

/// Runs one planned transaction through zone consensus against the evolving
/// state, mirroring what the live protocol would do, then applies it.
bool vote_and_apply(LedgerState& state, const radio::PropagationModel& prop,
                    const consensus::ConsensusConfig& config,
                    const ledger::Transaction& tx) {
  auto zone = consensus::zone_for_tx(tx, state, prop, config.sensitivity_dbm);
  auto env = consensus::env_from_state(state, prop);
  std::vector<consensus::Vote> votes;
  votes.reserve(zone.voter_ids.size());
  for (const auto& voter : zone.voter_ids) {
    votes.push_back(consensus::node_vote(voter, tx, state, env, config));
  }
  std::set<std::string> voters(zone.voter_ids.begin(), zone.voter_ids.end());
  if (!consensus::finalize(voters, votes)) return false;
  return !state.apply(tx, 1);
}

}  // namespace

double equal_allocation_dbm(double threshold_dbm, size_t n) {
  if (n == 0) throw std::invalid_argument("cannot allocate among zero devices");
  return threshold_dbm - 10.0 * std::log10(static_cast<double>(n));
}

std::vector<double> proportional_allocation_dbm(double threshold_dbm,
                                                std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("empty weight list");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("weights must be positive");
    total += w;
  }
  double budget_mw = dbm_to_mw(threshold_dbm);
  std::vector<double> out;
  out.reserve(weights.size());
  for (double w : weights) out.push_back(mw_to_dbm(w / total * budget_mw));
  return out;
}

uint64_t contribution_aw(const GrantRecord& grant, const PointRecord& point,
                         const radio::PropagationModel& prop) {
  double dbm = radio::received_power_at_dbm(
      prop, grant.location, grant.radio.tx_power_dbm(), point.location);
  return mw_to_aw_ceil(dbm_to_mw(dbm));
}

AdjustmentPlan request_budget_adjustment(const LedgerState& state,
                                         const radio::PropagationModel& prop,
                                         const std::string& requester_grant_id,
                                         uint64_t timestamp) {
  auto it = state.grants.find(requester_grant_id);
  if (it == state.grants.end()) {
    throw std::invalid_argument("unknown grant " + requester_grant_id);
  }
  const GrantRecord& requester = it->second;
  AdjustmentPlan plan;
  if (requester.tier <= 1) {
    plan.denial_reason = "requester is not in a lower tier";
    return plan;
  }

  for (const auto& [point_id, point] : state.points) {
    uint64_t have = ledger::allowance_of(state, point_id, requester.id);
    uint64_t want = contribution_aw(requester, point, prop);
    if (want <= have) continue;
    uint64_t need = want - have;

    // slack desc, grant id asc
    std::vector<std::pair<uint64_t, const GrantRecord*>> donors;
    for (const auto& [grant_id, grant] : state.grants) {
      if (!grant.active || grant.tier >= requester.tier) continue;
      uint64_t allowance = ledger::allowance_of(state, point_id, grant_id);
      uint64_t used = contribution_aw(grant, point, prop);
      if (allowance > used) donors.emplace_back(allowance - used, &grant);
    }
    std::sort(donors.begin(), donors.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second->id < b.second->id;
    });

    for (const auto& [slack, donor] : donors) {
      if (need == 0) break;
      uint64_t take = std::min(slack, need);
      ledger::Transaction tx;
      tx.timestamp = timestamp;
      tx.auth_id = donor->holder;
      tx.data = ledger::BudgetAdjustData{donor->id, requester.id, point_id, take};
      plan.txs.push_back(std::move(tx));
      need -= take;
    }
    if (need > 0) {
      plan.txs.clear();
      plan.denial_reason = "insufficient upper-tier slack at " + point_id;
      return plan;
    }
  }
  plan.granted = true;
  return plan;
}

AdmissionResult admitted_count(const LedgerState& start,
                               const radio::PropagationModel& prop,
                               const consensus::ConsensusConfig& config,
                               std::span<const std::string> entrants,
                               AdmissionPolicy policy) {
  AdmissionResult result;
  result.final_state = start;
  LedgerState& state = result.final_state;

  uint64_t arrival = 0;
  for (const auto& entrant_id : entrants) {
    ++arrival;
    auto it = state.grants.find(entrant_id);
    if (it == state.grants.end()) {
      throw std::invalid_argument("unknown entrant grant " + entrant_id);
    }
    if (it->second.active) {
      throw std::invalid_argument("entrant " + entrant_id + " already active");
    }

    bool admitted = fits_allowances(state, it->second, prop);
    if (!admitted && policy == AdmissionPolicy::kChainCoordinated) {
      auto plan = request_budget_adjustment(state, prop, entrant_id, arrival);
      if (plan.granted) {
        LedgerState trial = state;
        bool all_applied = true;
        for (const auto& tx : plan.txs) {
          if (!vote_and_apply(trial, prop, config, tx)) {
            all_applied = false;
            break;
          }
        }
        if (all_applied && fits_allowances(trial, trial.grants.at(entrant_id), prop)) {
          state = std::move(trial);
          admitted = true;
        }
      }
    }
    if (admitted) {
      state.grants.at(entrant_id).active = true;
      ++result.admitted;
      result.admitted_ids.push_back(entrant_id);
    }
  }
  return result;
}

}  // namespace specchain::tiers
