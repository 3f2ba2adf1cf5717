// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/incentives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace specchain::incentives {
namespace {

double total_demand(std::span<const FollowerProfile> profiles, double price) {
  double total = 0.0;
  for (const auto& f : profiles) total += follower_best_response(price, f.valuation);
  return total;
}

}  // namespace

double follower_utility(double q, double price, double valuation) {
  return valuation * std::log1p(q) - price * q;
}

double follower_best_response(double price, double valuation) {
  if (price <= 0.0) throw std::invalid_argument("price must be positive");
  return std::max(0.0, valuation / price - 1.0);
}

PriceSolution leader_optimal_price(std::span<const FollowerProfile> profiles,
                                   double capacity, double grid_step) {
  if (capacity <= 0.0) throw std::invalid_argument("capacity must be positive");
  double max_v = 0.0;
  for (const auto& f : profiles) {
    if (!(f.valuation > 0.0)) {
      throw std::invalid_argument("valuations must be positive");
    }
    max_v = std::max(max_v, f.valuation);
  }
  if (grid_step <= 0.0) grid_step = 0.001 * std::max(max_v, 1.0);
  if (profiles.empty()) return PriceSolution{grid_step, 0.0};

  auto steps = static_cast<uint64_t>(std::ceil(max_v / grid_step));
  PriceSolution best{grid_step, -1.0};
  for (uint64_t k = 1; k <= steps; ++k) {
    double p = static_cast<double>(k) * grid_step;
    double revenue = p * std::min(capacity, total_demand(profiles, p));
    if (revenue > best.revenue) best = PriceSolution{p, revenue};
  }
  return best;
}

MarketOutcome allocate_and_compensate(std::span<const FollowerProfile> profiles,
                                      const LeaderOffer& offer, double alpha) {
  if (offer.capacity <= 0.0) throw std::invalid_argument("capacity must be positive");
  if (alpha < 0.0 || alpha > 1.0) {
    throw std::invalid_argument("compensation share must lie in [0, 1]");
  }
  MarketOutcome out;
  out.price = offer.price;
  if (profiles.empty()) return out;

  double demand_sum = total_demand(profiles, offer.price);
  out.revenue = offer.price * std::min(offer.capacity, demand_sum);
  bool rationed = demand_sum > offer.capacity;
  double ration = rationed ? offer.capacity / demand_sum : 1.0;

  out.followers.reserve(profiles.size());
  for (const auto& f : profiles) {
    FollowerOutcome fo;
    fo.id = f.id;
    fo.demand = follower_best_response(offer.price, f.valuation);
    fo.allocation = fo.demand * ration;
    fo.compensation = alpha * offer.price * (fo.demand - fo.allocation);
    out.total_compensation += fo.compensation;
    out.followers.push_back(std::move(fo));
  }
  // The α share bounds each follower's payout but not their sum; scale down
  // so the leader never pays out more than the revenue taken in.
  if (out.total_compensation > out.revenue && out.total_compensation > 0.0) {
    double scale = out.revenue / out.total_compensation;
    out.total_compensation = 0.0;
    for (auto& fo : out.followers) {
      fo.compensation *= scale;
      out.total_compensation += fo.compensation;
    }
  }

  double util_sum = 0.0;
  double util_sq_sum = 0.0;
  for (size_t i = 0; i < out.followers.size(); ++i) {
    FollowerOutcome& fo = out.followers[i];
    fo.utility =
        follower_utility(fo.allocation, offer.price, profiles[i].valuation) +
        fo.compensation;
    util_sum += fo.utility;
    util_sq_sum += fo.utility * fo.utility;
  }
  out.jain_index = util_sq_sum > 0.0
                       ? util_sum * util_sum /
                             (static_cast<double>(out.followers.size()) * util_sq_sum)
                       : 1.0;
  return out;
}

}  // namespace specchain::incentives
