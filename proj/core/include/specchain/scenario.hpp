// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "specchain/incentives.hpp"
#include "specchain/protocol.hpp"
#include "specchain/radio.hpp"
#include "specchain/simnet.hpp"
#include "specchain/state.hpp"

namespace specchain::scenario {

/// Configuration rejection: unknown keys, bad values, broken references.
/// The message carries file/path context for the user.
struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MarketSection {
  bool enabled = false;
  double capacity = 0.0;
  double alpha = 0.5;
  double grid_step = 0.0;  // 0: solver default
  std::vector<incentives::FollowerProfile> followers;
};

/// Seed-driven workload synthesis. Grant custody is tracked under the
/// assumption every trade succeeds, so a rejected trade makes later trades
/// of that lineage fail ownership checks: realistic churn, still replayable.
struct WorkloadRandom {
  uint64_t count = 0;
  double cross_fraction = 0.0;
  uint64_t start_tick = 1;
  uint64_t mean_spacing = 3;
  double max_move_m = 300.0;
  uint64_t price_max = 5;
};

/// Scripted trade. The seller grant is referenced by its genesis id; the
/// loader follows the predicted custody lineage, so one grant can be traded
/// repeatedly without knowing the minted ids in advance.
struct ScriptTrade {
  uint64_t tick = 0;
  std::string seller_grant;  // genesis grant id
  std::string buyer;
  Location new_location;
  radio::RadioParams new_radio;
  uint64_t price = 0;
};

struct Scenario {
  std::string name = "scenario";
  radio::PropagationModel prop;
  consensus::ConsensusConfig consensus;
  simnet::NetworkConfig net;
  uint32_t chain_count = 1;
  uint64_t notary_count = 3;
  uint64_t notary_quorum = 2;
  uint64_t form_block_delay = 1;
  uint64_t lock_expiry = 0;       // 0: derived from network timing
  uint64_t decision_timeout = 0;  // 0: derived
  uint64_t retry_interval = 0;    // 0: derived
  ledger::GenesisSpec genesis;    // whole plane; partitioned into regions
  std::vector<ScriptTrade> script;
  std::optional<WorkloadRandom> random_workload;
  std::vector<std::string> entrants;  // inactive grants, arrival order
  MarketSection market;
};

/// Parses and validates scenario text (versioned JSON, schema 1). Unknown
/// keys, malformed values, and dangling references throw ScenarioError; dBm
/// fields must carry at most one decimal place. `origin` prefixes messages.
Scenario parse_scenario_text(const std::string& text, const std::string& origin);

Scenario load_scenario_file(const std::filesystem::path& path);

/// The scenario plane partitioned into vertical regions, one chain each.
struct BuiltSetup {
  protocol::WorldConfig config;
  std::vector<protocol::ChainSetup> chains;
  std::map<std::string, std::string> node_chain;
  std::map<std::string, std::string> grant_chain;
};

/// Region partition plus runtime config. chains_override replaces the
/// scenario's chain count when nonzero; seed replaces the network seed.
/// Throws ScenarioError if a region ends up without nodes or a grant's
/// holder sits in a different region.
BuiltSetup build_setup(const Scenario& s, uint64_t seed, protocol::Mode mode,
                       uint32_t chains_override);

/// One workload entry, already routed: either an intra-chain trade proposal
/// or a cross-chain transfer request.
struct WorkloadItem {
  uint64_t tick = 0;
  bool cross = false;
  std::string seller_node;
  ledger::TradeData trade;        // valid when !cross
  protocol::StartCross transfer;  // valid when cross
};

/// Deterministic workload expansion (script first, then the random section).
std::vector<WorkloadItem> build_workload(const Scenario& s,
                                         const BuiltSetup& setup,
                                         uint64_t seed);

// Synthetic scenario families used by the experiment harness. Each is fully
// determined by its arguments.

/// 50 nodes, 3 tiers, 5 protection points, 200 trades on one chain.
Scenario synth_safety(uint64_t seed);

/// 100 nodes sized so the mean validation zone stays small; lossless
/// network with jitter, 40 trades. For zone-vs-flood latency comparisons.
Scenario synth_latency(uint64_t seed);

/// Multi-chain cross-trade stress: `chains` regions, `trades` transfers,
/// lossy network.
Scenario synth_cross(uint64_t seed, uint32_t chains, uint64_t trades,
                     double loss_prob);

/// Tiered entrant admission: active upper-tier grants with slack plus
/// inactive lower-tier candidates.
Scenario synth_admission(uint64_t seed);

}  // namespace specchain::scenario
