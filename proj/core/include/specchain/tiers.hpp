// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "specchain/consensus.hpp"
#include "specchain/radio.hpp"
#include "specchain/state.hpp"

namespace specchain::tiers {

/// threshold − 10·log10(n): n devices at the returned allowance aggregate to
/// exactly the threshold. Throws std::invalid_argument when n is zero.
double equal_allocation_dbm(double threshold_dbm, size_t n);

/// Linear shares weight_i / Σweights of the threshold budget, returned in
/// dBm. Throws std::invalid_argument on empty or nonpositive weights.
std::vector<double> proportional_allocation_dbm(double threshold_dbm,
                                                std::span<const double> weights);

/// A grant's predicted interference contribution at a protection point,
/// quantized upward to attowatts so budget comparisons never understate it.
uint64_t contribution_aw(const ledger::GrantRecord& grant,
                         const ledger::PointRecord& point,
                         const radio::PropagationModel& prop);

struct AdjustmentPlan {
  bool granted = false;
  std::vector<ledger::Transaction> txs;  // BudgetAdjust, in emission order
  std::string denial_reason;
};

/// Plans the budget transfers a lower-tier grant needs before it can transmit
/// within its allowances. For every deficient protection point, slack
/// (allowance − own predicted contribution) is collected from active
/// upper-tier grants in descending-slack order, ties broken by grant id.
/// All-or-nothing: if any point cannot be covered, no transactions at all.
/// The emitted transactions still pass consensus; safety is rechecked there.
AdjustmentPlan request_budget_adjustment(const ledger::LedgerState& state,
                                         const radio::PropagationModel& prop,
                                         const std::string& requester_grant_id,
                                         uint64_t timestamp);

enum class AdmissionPolicy : uint8_t { kStaticEqual = 0, kChainCoordinated = 1 };

struct AdmissionResult {
  uint32_t admitted = 0;
  std::vector<std::string> admitted_ids;  // in arrival order
  ledger::LedgerState final_state;
};

/// Replays the entrant arrival sequence against a copy of the state and
/// counts successful activations. Static policy: an entrant is admitted iff
/// its fixed allowance covers its predicted contribution at every protection
/// point. Coordinated policy: a deficient entrant may first request budget
/// adjustments; each planned transfer is voted through consensus and applied
/// before the allowance check is repeated. Activation itself is an
/// experiment-local flag, not a chain transaction.
AdmissionResult admitted_count(const ledger::LedgerState& start,
                               const radio::PropagationModel& prop,
                               const consensus::ConsensusConfig& config,
                               std::span<const std::string> entrants,
                               AdmissionPolicy policy);

}  // namespace specchain::tiers
