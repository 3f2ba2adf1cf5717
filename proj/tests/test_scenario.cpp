// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/scenario.hpp"

#include <set>
#include <string>
#include <vector>

#include "doctest.h"

using namespace specchain;
using namespace specchain::scenario;

namespace {

// Smallest configuration the loader accepts: two nodes, one grant.
const char* kMinimal = R"({
  "schema": 1,
  "name": "tiny",
  "nodes": [
    {"id": "n1", "x_m": 0.0, "y_m": 0.0, "balance": 10, "tolerance_dbm": -40.0},
    {"id": "n2", "x_m": 100.0, "y_m": 0.0, "balance": 10, "tolerance_dbm": -40.0}
  ],
  "points": [
    {"id": "p1", "x_m": 50.0, "y_m": 10.0, "threshold_dbm": -60.0}
  ],
  "grants": [
    {"id": "g1", "holder": "n1", "x_m": 0.0, "y_m": 0.0,
     "power_dbm": 20.0, "channel": 1}
  ]
})";

std::string error_of(const std::string& text) {
  try {
    parse_scenario_text(text, "cfg");
  } catch (const ScenarioError& e) {
    return e.what();
  }
  return "";
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_SUITE("scenario") {

TEST_CASE("a minimal scenario parses with defaults filled in") {
  Scenario s = parse_scenario_text(kMinimal, "cfg");
  CHECK(s.name == "tiny");
  CHECK(s.chain_count == 1);
  CHECK(s.genesis.nodes.size() == 2);
  CHECK(s.genesis.points.size() == 1);
  CHECK(s.genesis.grants.size() == 1);
  CHECK(s.genesis.grants[0].radio.tx_power_mdb == 20000);
  CHECK(s.genesis.nodes[1].location.x_mm == 100000);
  CHECK(s.script.empty());
  CHECK_FALSE(s.market.enabled);
}

TEST_CASE("unknown keys are rejected with their path") {
  std::string text = kMinimal;
  text.insert(text.rfind('}'), ", \"extra_knob\": 3");
  std::string err = error_of(text);
  CHECK(contains(err, "cfg"));
  CHECK(contains(err, "unknown key 'extra_knob'"));

  std::string nested = kMinimal;
  nested.insert(nested.find("\"balance\": 10, \"tolerance_dbm\": -40.0}"),
                "\"typo\": 1, ");
  CHECK(contains(error_of(nested), "unknown key 'typo'"));
}

TEST_CASE("the schema version is mandatory and checked") {
  CHECK(contains(error_of("{}"), "missing key 'schema'"));
  std::string v2 = kMinimal;
  v2.replace(v2.find("\"schema\": 1"), 11, "\"schema\": 2");
  CHECK(contains(error_of(v2), "unsupported schema version 2"));
}

TEST_CASE("broken json reports line and column") {
  std::string text = "{\n  \"schema\": 1,\n  \"name\": oops\n}";
  std::string err = error_of(text);
  CHECK(contains(err, "cfg:3:"));
}

TEST_CASE("dbm values carry at most one decimal place") {
  std::string text = kMinimal;
  text.replace(text.find("-60.0"), 5, "-60.05");
  std::string err = error_of(text);
  CHECK(contains(err, "one decimal place"));
  // One decimal is fine even when doubles cannot represent it exactly.
  std::string ok = kMinimal;
  ok.replace(ok.find("-60.0"), 5, "-60.1");
  CHECK(parse_scenario_text(ok, "cfg").genesis.points[0].threshold_mdb ==
        -60100);
}

TEST_CASE("references must resolve") {
  std::string orphan = kMinimal;
  orphan.replace(orphan.find("\"holder\": \"n1\""), 14, "\"holder\": \"nx\"");
  CHECK(contains(error_of(orphan), "nx"));

  std::string dup = kMinimal;
  dup.replace(dup.find("\"id\": \"n2\""), 10, "\"id\": \"n1\"");
  CHECK(contains(error_of(dup), "duplicate"));
}

TEST_CASE("entrants must exist and start inactive") {
  std::string text = kMinimal;
  text.insert(text.rfind('}'), ", \"entrants\": [\"g1\"]");
  // g1 is active at genesis, so it cannot be an entrant candidate.
  CHECK_FALSE(error_of(text).empty());

  std::string ghost = kMinimal;
  ghost.insert(ghost.rfind('}'), ", \"entrants\": [\"gz\"]");
  CHECK(contains(error_of(ghost), "gz"));
}

TEST_CASE("the region partition keeps holders and grants together") {
  Scenario s = synth_cross(3, 4, 10, 0.0);
  BuiltSetup setup = build_setup(s, 3, protocol::Mode::kZone, 0);
  REQUIRE(setup.chains.size() == 4);
  std::set<std::string> chain_ids;
  for (const auto& c : setup.chains) chain_ids.insert(c.chain_id);
  CHECK((chain_ids == std::set<std::string>{"r0", "r1", "r2", "r3"}));

  size_t nodes_total = 0, grants_total = 0;
  for (const auto& c : setup.chains) {
    nodes_total += c.genesis.nodes.size();
    grants_total += c.genesis.grants.size();
    CHECK_FALSE(c.genesis.nodes.empty());
    for (const auto& g : c.genesis.grants) {
      bool holder_here = false;
      for (const auto& n : c.genesis.nodes) {
        holder_here = holder_here || n.node_id == g.holder_id;
      }
      CHECK(holder_here);
    }
  }
  CHECK(nodes_total == s.genesis.nodes.size());
  CHECK(grants_total == s.genesis.grants.size());
  for (const auto& [node_id, chain_id] : setup.node_chain) {
    CHECK(chain_ids.count(chain_id) == 1);
  }
}

TEST_CASE("a chain override reshapes the partition") {
  Scenario s = synth_cross(3, 4, 10, 0.0);
  BuiltSetup setup = build_setup(s, 3, protocol::Mode::kZone, 2);
  CHECK(setup.chains.size() == 2);
  CHECK(setup.config.net.seed == 3);
}

TEST_CASE("the workload expands deterministically") {
  Scenario s = synth_safety(17);
  BuiltSetup setup = build_setup(s, 17, protocol::Mode::kZone, 0);
  auto w1 = build_workload(s, setup, 17);
  auto w2 = build_workload(s, setup, 17);
  REQUIRE(w1.size() == 200);
  REQUIRE(w1.size() == w2.size());
  for (size_t i = 0; i < w1.size(); ++i) {
    CHECK(w1[i].tick == w2[i].tick);
    CHECK(w1[i].seller_node == w2[i].seller_node);
    CHECK(w1[i].cross == w2[i].cross);
    if (!w1[i].cross) {
      CHECK((w1[i].trade == w2[i].trade));
    }
  }
  auto w3 = build_workload(s, setup, 18);
  bool differs = w1.size() != w3.size();
  for (size_t i = 0; !differs && i < w1.size(); ++i) {
    differs = w1[i].tick != w3[i].tick ||
              w1[i].seller_node != w3[i].seller_node;
  }
  CHECK(differs);
}

TEST_CASE("ticks never decrease across the workload") {
  Scenario s = synth_safety(5);
  BuiltSetup setup = build_setup(s, 5, protocol::Mode::kZone, 0);
  uint64_t last = 0;
  for (const auto& item : build_workload(s, setup, 5)) {
    CHECK(item.tick >= last);
    last = item.tick;
  }
}

TEST_CASE("scripted trades follow the custody lineage") {
  // demo.json resells the grant minted by its own first trade, which only
  // works if the loader predicts minted ids from the trade transactions.
  std::string path = std::string(SPECCHAIN_SCENARIO_DIR) + "/demo.json";
  Scenario s = load_scenario_file(path);
  BuiltSetup setup = build_setup(s, 1, protocol::Mode::kZone, 0);
  auto items = build_workload(s, setup, 1);
  REQUIRE(items.size() == 5);
  CHECK(items[3].trade.seller_grant_id != "g1");
  CHECK(items[3].trade.seller_grant_id.size() == 17);  // minted id
}

TEST_CASE("synthetic families have their advertised shape") {
  Scenario safety = synth_safety(2);
  CHECK(safety.genesis.nodes.size() == 50);
  CHECK(safety.genesis.points.size() == 5);
  CHECK(safety.genesis.tier_count == 3);
  REQUIRE(safety.random_workload.has_value());
  CHECK(safety.random_workload->count == 200);

  Scenario latency = synth_latency(2);
  CHECK(latency.genesis.nodes.size() == 100);
  CHECK(latency.net.loss_prob == 0.0);

  Scenario cross = synth_cross(2, 4, 100, 0.2);
  CHECK(cross.chain_count == 4);
  CHECK(cross.net.loss_prob == 0.2);
  REQUIRE(cross.random_workload.has_value());
  CHECK(cross.random_workload->count == 100);
  CHECK(cross.random_workload->cross_fraction == 1.0);

  Scenario admission = synth_admission(2);
  CHECK_FALSE(admission.entrants.empty());
  for (const auto& id : admission.entrants) {
    bool found_inactive = false;
    for (const auto& g : admission.genesis.grants) {
      found_inactive = found_inactive || (g.grant_id == id && !g.active);
    }
    CHECK(found_inactive);
  }
}

TEST_CASE("different seeds change the synthetic layout") {
  Scenario a = synth_safety(1);
  Scenario b = synth_safety(2);
  bool moved = false;
  for (size_t i = 0; i < a.genesis.nodes.size(); ++i) {
    moved = moved ||
            !(a.genesis.nodes[i].location == b.genesis.nodes[i].location);
  }
  CHECK(moved);
}

}  // TEST_SUITE
