// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

namespace specchain::incentives {

/// A follower (service provider) with valuation v: tokens per unit of
/// log-bandwidth utility.
struct FollowerProfile {
  std::string id;
  double valuation = 0.0;  // v > 0

  friend bool operator==(const FollowerProfile&, const FollowerProfile&) = default;
};

struct LeaderOffer {
  double price = 0.0;     // tokens per bandwidth unit
  double capacity = 0.0;  // bandwidth units for sale, > 0
};

/// u(q) = v·ln(1+q) − p·q.
double follower_utility(double q, double price, double valuation);

/// argmax of u over q ≥ 0: max(0, v/p − 1). Throws std::invalid_argument for
/// p ≤ 0 (demand would be unbounded).
double follower_best_response(double price, double valuation);

struct PriceSolution {
  double price = 0.0;
  double revenue = 0.0;
};

/// Backward-induction grid search: maximizes p·min(Q, Σ best responses) over
/// p ∈ {δ, 2δ, ...} covering (0, max v]. Ties break toward the lower price.
/// A nonpositive grid_step selects the default δ = 0.001·max v. With no
/// followers the revenue is 0 at the grid minimum.
PriceSolution leader_optimal_price(std::span<const FollowerProfile> profiles,
                                   double capacity, double grid_step = 0.0);

struct FollowerOutcome {
  std::string id;
  double demand = 0.0;        // best response at the offer price
  double allocation = 0.0;    // after proportional rationing
  double compensation = 0.0;  // paid from leader revenue
  double utility = 0.0;       // post-transfer: u(allocation) + compensation
};

struct MarketOutcome {
  double price = 0.0;
  double revenue = 0.0;  // p · min(Q, total demand)
  double total_compensation = 0.0;
  double jain_index = 1.0;  // fairness over post-transfer utilities
  std::vector<FollowerOutcome> followers;
};

/// Clears the market at the offered price. When demand exceeds capacity,
/// allocations are rationed proportionally (q_i' = q_i·Q/Σq) and each
/// rationed follower is compensated with α·p·(q_i − q_i'), scaled down if
/// needed so the total payout never exceeds the leader's revenue.
MarketOutcome allocate_and_compensate(std::span<const FollowerProfile> profiles,
                                      const LeaderOffer& offer,
                                      double alpha = 0.5);

}  // namespace specchain::incentives
