// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

// Release gate. Each check prints one PASS/FAIL line with its key numbers;
// the binary exits nonzero if any check fails. Checks that sweep seeds carry
// a wall-clock budget so performance regressions fail loudly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "runner.hpp"
#include "specchain/chain.hpp"
#include "specchain/consensus.hpp"
#include "specchain/incentives.hpp"
#include "specchain/scenario.hpp"
#include "specchain/simnet.hpp"
#include "specchain/tiers.hpp"
#include "specchain/units.hpp"

using namespace specchain;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(bool ok, const char* name, const std::string& detail) {
  std::printf("%s  %-22s %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

runner::RunOptions quiet(uint64_t seed, protocol::Mode mode = protocol::Mode::kZone) {
  runner::RunOptions opts;
  opts.seed = seed;
  opts.mode = mode;
  opts.trace = false;
  return opts;
}

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  return buf;
}

// Every block of every seeded safety run must leave all protection points
// within threshold, confirmed by the independent brute-force audit.
void check_safety_audit() {
  auto start = std::chrono::steady_clock::now();
  constexpr int kSeeds = 100;
  constexpr double kBudgetSeconds = 120.0;

  bool shapes_ok = true;
  uint64_t blocks = 0, violations = 0;
  double worst_margin = -1e18;
  int bad_runs = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto s = scenario::synth_safety(static_cast<uint64_t>(seed));
    shapes_ok = shapes_ok && s.genesis.nodes.size() == 50 &&
                s.genesis.points.size() == 5 && s.genesis.tier_count == 3 &&
                s.random_workload && s.random_workload->count == 200;
    auto result = runner::run_one(s, quiet(static_cast<uint64_t>(seed)));
    auto audit = runner::audit_ledgers(result.ledgers, s.prop, 1e-6);
    if (!audit.replay_ok) ++bad_runs;
    blocks += audit.blocks_audited;
    violations += audit.margin_violations;
    worst_margin = std::max(worst_margin, audit.max_margin_db);
  }
  double elapsed = seconds_since(start);

  bool ok = shapes_ok && bad_runs == 0 && violations == 0 &&
            elapsed < kBudgetSeconds;
  report(ok, "safety-audit",
         format("%d seeds, %llu blocks audited, %llu violations, worst margin "
                "%.2f dB, %.1fs (budget %.0fs)",
                kSeeds, (unsigned long long)blocks,
                (unsigned long long)violations, worst_margin, elapsed,
                kBudgetSeconds));
}

// Zone consensus must beat flooding on commit latency for almost all seeds
// while keeping validation zones small.
void check_zone_latency() {
  auto start = std::chrono::steady_clock::now();
  constexpr int kSeeds = 100;
  constexpr double kBudgetSeconds = 60.0;

  int zone_wins = 0, comparable = 0;
  uint64_t zone_size_sum = 0, zone_rounds = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto s = scenario::synth_latency(static_cast<uint64_t>(seed));
    auto zone = runner::run_one(s, quiet(seed, protocol::Mode::kZone));
    auto flood = runner::run_one(s, quiet(seed, protocol::Mode::kFlood));
    for (const auto& m : zone.metrics) {
      zone_size_sum += m.zone_size;
      ++zone_rounds;
    }
    if (zone.median_latency && flood.median_latency) {
      ++comparable;
      if (*zone.median_latency < *flood.median_latency) ++zone_wins;
    }
  }
  double elapsed = seconds_since(start);
  double mean_zone = zone_rounds ? double(zone_size_sum) / double(zone_rounds) : 0.0;

  bool ok = comparable == kSeeds && zone_wins >= 95 && mean_zone <= 10.0 &&
            elapsed < kBudgetSeconds;
  report(ok, "zone-latency",
         format("zone median below flood on %d/%d seeds (need 95), mean zone "
                "size %.2f (cap 10), %.1fs (budget %.0fs)",
                zone_wins, kSeeds, mean_zone, elapsed, kBudgetSeconds));
}

// Exhaustive unanimity truth table for zones of up to five voters: finalize
// is the conjunction of all votes, and a missing voter rejects.
void check_vote_unanimity() {
  uint64_t cases = 0, wrong = 0;
  for (int n = 1; n <= 5; ++n) {
    std::set<std::string> zone;
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
      ids.push_back("v" + std::to_string(i));
      zone.insert(ids.back());
    }
    Digest tx{};
    tx.fill(0x5a);
    const uint32_t full = (1u << n) - 1;
    for (uint32_t mask = 0; mask <= full; ++mask) {
      std::vector<consensus::Vote> votes;
      for (int i = 0; i < n; ++i) {
        auto verdict = (mask >> i) & 1u ? consensus::Verdict::kApprove
                                        : consensus::Verdict::kReject;
        votes.push_back({ids[i], tx, verdict, consensus::Reason::kOk});
      }
      bool expect = mask == full;
      ++cases;
      if (consensus::finalize(zone, votes) != expect) ++wrong;
    }
    // Every strict subset of present voters, all approving: still a reject.
    for (uint32_t present = 0; present < full; ++present) {
      std::vector<consensus::Vote> votes;
      for (int i = 0; i < n; ++i) {
        if ((present >> i) & 1u) {
          votes.push_back({ids[i], tx, consensus::Verdict::kApprove,
                           consensus::Reason::kOk});
        }
      }
      ++cases;
      if (consensus::finalize(zone, votes) != false) ++wrong;
    }
  }
  report(wrong == 0, "vote-unanimity",
         format("%llu truth-table cases over zones of 1..5 voters, %llu wrong",
                (unsigned long long)cases, (unsigned long long)wrong));
}

// Flipping any single byte of a serialized ledger must be detected, and the
// reported first bad height may never exceed the tampered block's height.
void check_tamper_detection() {
  auto s = scenario::synth_safety(1);
  auto result = runner::run_one(s, quiet(1));
  auto chain = ledger::parse_chain(result.ledgers[0].second);
  if (chain.height() < 9) {
    report(false, "tamper-detection",
           format("golden run too short: height %llu",
                  (unsigned long long)chain.height()));
    return;
  }

  // Golden ledger: the first ten blocks, reframed. Block i owns the bytes of
  // frame i, so the expected bound for a flip there is height i.
  std::vector<uint8_t> golden;
  std::vector<uint64_t> height_of_byte;
  for (size_t i = 0; i < 10; ++i) {
    auto framed = ledger::serialize_block(chain.blocks()[i]);
    golden.insert(golden.end(), framed.begin(), framed.end());
    height_of_byte.insert(height_of_byte.end(), framed.size(),
                          chain.blocks()[i].height);
  }
  if (!ledger::verify_chain_bytes(golden).ok) {
    report(false, "tamper-detection", "golden ledger fails clean verification");
    return;
  }

  uint64_t positions = 0, missed = 0, late = 0;
  for (size_t pos = 0; pos < golden.size(); ++pos) {
    for (uint8_t mask : {uint8_t{0x01}, uint8_t{0x80}}) {
      auto copy = golden;
      copy[pos] ^= mask;
      auto verdict = ledger::verify_chain_bytes(copy);
      ++positions;
      if (verdict.ok) {
        ++missed;
      } else if (verdict.first_bad_height > height_of_byte[pos]) {
        ++late;
      }
    }
  }
  report(missed == 0 && late == 0, "tamper-detection",
         format("%zu-byte golden ledger, %llu tampered variants, %llu "
                "undetected, %llu localized past the tampered block",
                golden.size(), (unsigned long long)positions,
                (unsigned long long)missed, (unsigned long long)late));
}

// After a lossy cross-chain stress run quiesces, every genesis grant must
// live on exactly one chain: no duplicates, no losses.
void check_cross_custody() {
  auto s = scenario::synth_cross(7, 4, 1000, 0.2);
  auto result = runner::run_one(s, quiet(7));
  auto audit = runner::audit_ledgers(result.ledgers, s.prop);

  bool ok = audit.replay_ok && audit.custody_unique &&
            audit.grants_total == s.genesis.grants.size();
  report(ok, "cross-custody",
         format("1000 transfers over 4 chains at 20%% loss: %llu committed, "
                "%llu aborted, %llu grants (expected %zu), duplicates %zu",
                (unsigned long long)result.cross_committed,
                (unsigned long long)result.cross_aborted,
                (unsigned long long)audit.grants_total,
                s.genesis.grants.size(), audit.custody_duplicates.size()));
}

// Chain-coordinated admission must never do worse than static allocation,
// and the documented demo scenario shows it doing strictly better.
void check_coordinated_admission() {
  constexpr int kSeeds = 100;
  int dominated = 0, strict = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    auto s = scenario::synth_admission(static_cast<uint64_t>(seed));
    auto result = runner::run_one(s, quiet(static_cast<uint64_t>(seed)));
    if (result.admitted_coordinated >= result.admitted_static) ++dominated;
    if (result.admitted_coordinated > result.admitted_static) ++strict;
  }

  fs::path dir = SPECCHAIN_SCENARIO_DIR;
  auto demo = scenario::load_scenario_file(dir / "tiers_demo.json");
  auto demo_result = runner::run_one(demo, quiet(1));
  bool demo_strict =
      demo_result.admitted_coordinated > demo_result.admitted_static;

  bool ok = dominated == kSeeds && strict >= 1 && demo_strict;
  report(ok, "coordinated-admission",
         format("coordinated >= static on %d/%d seeds, strictly better on %d; "
                "demo scenario admits %u vs %u",
                dominated, kSeeds, strict, demo_result.admitted_coordinated,
                demo_result.admitted_static));
}

// Tier allocations must recombine to the exact linear budget, and the
// ten-way equal split must land exactly 10 dB under the threshold.
void check_allocation_sums() {
  simnet::Rng rng(0xA110CA7E);
  uint64_t trials = 0, bad = 0;
  for (int t = 0; t < 200; ++t) {
    double threshold = -120.0 + 0.1 * double(rng.below(801));  // [-120, -40]
    size_t n = 1 + rng.below(40);
    double budget = dbm_to_mw(threshold);

    double equal_sum = 0.0;
    double share = tiers::equal_allocation_dbm(threshold, n);
    for (size_t i = 0; i < n; ++i) equal_sum += dbm_to_mw(share);
    ++trials;
    if (std::abs(equal_sum - budget) > 1e-9 * budget) ++bad;

    std::vector<double> weights;
    for (size_t i = 0; i < n; ++i) weights.push_back(0.1 + rng.unit() * 9.9);
    auto shares = tiers::proportional_allocation_dbm(threshold, weights);
    double prop_sum = 0.0;
    for (double s : shares) prop_sum += dbm_to_mw(s);
    ++trials;
    if (std::abs(prop_sum - budget) > 1e-9 * budget) ++bad;
  }

  bool exact = tiers::equal_allocation_dbm(-80.0, 10) == -90.0 &&
               tiers::equal_allocation_dbm(-63.0, 10) == -73.0 &&
               tiers::equal_allocation_dbm(-100.0, 10) == -110.0;
  report(bad == 0 && exact, "allocation-sums",
         format("%llu random splits recombine within 1e-9 relative (%llu "
                "off), ten-way equal split lands threshold minus 10 dB "
                "exactly: %s",
                (unsigned long long)trials, (unsigned long long)bad,
                exact ? "yes" : "no"));
}

// The grid-searched leader price must match an independent brute-force scan
// on random follower sets, reproduce the worked example, and leave followers
// at a local best response.
void check_pricing_optimum() {
  simnet::Rng rng(0x0FF32D00);
  constexpr double kDelta = 0.001;
  int trials = 0, mismatched = 0;
  for (int t = 0; t < 50; ++t) {
    size_t n = 1 + rng.below(5);
    std::vector<incentives::FollowerProfile> profiles;
    double max_v = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double v = 0.5 + rng.unit() * 19.5;
      profiles.push_back({"f" + std::to_string(i), v});
      max_v = std::max(max_v, v);
    }
    double capacity = 1.0 + double(rng.below(10));

    auto solved = incentives::leader_optimal_price(profiles, capacity, kDelta);
    uint64_t steps = static_cast<uint64_t>(std::ceil(max_v / kDelta));
    double best_price = 0.0, best_revenue = 0.0;
    for (uint64_t k = 1; k <= steps; ++k) {
      double p = double(k) * kDelta;
      double demand = 0.0;
      for (const auto& f : profiles) {
        demand += incentives::follower_best_response(p, f.valuation);
      }
      double revenue = p * std::min(capacity, demand);
      if (revenue > best_revenue) {
        best_revenue = revenue;
        best_price = p;
      }
    }
    ++trials;
    if (solved.price != best_price || solved.revenue != best_revenue) {
      ++mismatched;
    }
  }

  std::vector<incentives::FollowerProfile> pair = {{"f1", 10.0}, {"f2", 20.0}};
  auto worked = incentives::leader_optimal_price(pair, 4.0, kDelta);
  bool worked_ok = std::abs(worked.price - 5.0) <= kDelta &&
                   std::abs(worked.revenue - 20.0) <= 0.1;

  // Finite-difference optimality of each best response at the solved price.
  bool responses_ok = true;
  for (const auto& f : pair) {
    double q = incentives::follower_best_response(worked.price, f.valuation);
    double here = incentives::follower_utility(q, worked.price, f.valuation);
    double eps = 1e-4;
    double up = incentives::follower_utility(q + eps, worked.price, f.valuation);
    responses_ok = responses_ok && here >= up - 1e-12;
    if (q > eps) {
      double down =
          incentives::follower_utility(q - eps, worked.price, f.valuation);
      responses_ok = responses_ok && here >= down - 1e-12;
    }
  }

  bool ok = mismatched == 0 && worked_ok && responses_ok;
  report(ok, "pricing-optimum",
         format("%d random follower sets match brute force exactly (%d off); "
                "worked pair yields p=%.3f revenue=%.3f; best responses "
                "locally optimal: %s",
                trials, mismatched, worked.price, worked.revenue,
                responses_ok ? "yes" : "no"));
}

// Two runs of the demo scenario with the same seed must write byte-identical
// ledger, trace, and metrics files.
void check_determinism() {
  fs::path dir = SPECCHAIN_SCENARIO_DIR;
  auto s = scenario::load_scenario_file(dir / "demo.json");

  auto out_a = fs::temp_directory_path() / "specchain_accept_a";
  auto out_b = fs::temp_directory_path() / "specchain_accept_b";
  fs::remove_all(out_a);
  fs::remove_all(out_b);
  runner::write_outputs(runner::run_one(s, runner::RunOptions{}), out_a);
  runner::write_outputs(runner::run_one(s, runner::RunOptions{}), out_b);

  std::set<std::string> names_a, names_b;
  for (const auto& entry : fs::directory_iterator(out_a)) {
    names_a.insert(entry.path().filename().string());
  }
  for (const auto& entry : fs::directory_iterator(out_b)) {
    names_b.insert(entry.path().filename().string());
  }

  size_t files = 0, differing = 0;
  bool same_set = names_a == names_b;
  if (same_set) {
    for (const auto& name : names_a) {
      ++files;
      if (ledger::read_file_bytes(out_a / name) !=
          ledger::read_file_bytes(out_b / name)) {
        ++differing;
      }
    }
  }
  fs::remove_all(out_a);
  fs::remove_all(out_b);

  bool ok = same_set && files > 0 && differing == 0;
  report(ok, "determinism",
         format("two seeded demo runs, %zu output files compared, %zu differ",
                files, differing));
}

}  // namespace

int main() {
  check_safety_audit();
  check_zone_latency();
  check_vote_unanimity();
  check_tamper_detection();
  check_cross_custody();
  check_coordinated_admission();
  check_allocation_sums();
  check_pricing_optimum();
  check_determinism();

  std::printf("%d/9 checks passed\n", 9 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
