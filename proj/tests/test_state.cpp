// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/state.hpp"

#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "specchain/chain.hpp"
#include "specchain/transaction.hpp"
#include "specchain/units.hpp"

using namespace specchain;
using namespace specchain::ledger;

namespace {

// Two nodes, one protection point at -80 dBm, `grant_count` grants held by n1.
GenesisSpec small_spec(size_t grant_count, AllocationPolicy policy) {
  GenesisSpec spec;
  spec.policy = policy;
  spec.tier_count = 3;
  spec.nodes.push_back({"n1", Location{0, 0}, 100, -40000});
  spec.nodes.push_back({"n2", Location{500000, 0}, 100, -40000});
  spec.points.push_back({"p1", Location{250000, 0}, -80000});
  for (size_t i = 0; i < grant_count; ++i) {
    GenesisGrantData g;
    g.grant_id = "g" + std::to_string(i + 1);
    g.holder_id = "n1";
    g.radio = radio::RadioParams{20000, 1};
    g.location = Location{0, 0};
    g.weight = static_cast<uint32_t>(i + 1);
    spec.grants.push_back(g);
  }
  return spec;
}

uint64_t point_budget_aw(const LedgerState& state, const std::string& point) {
  return mw_to_aw_floor(
      dbm_to_mw(mdb_to_dbm(state.points.at(point).threshold_mdb)));
}

uint64_t allowance_sum(const LedgerState& state, const std::string& point) {
  uint64_t sum = 0;
  for (const auto& [grant_id, aw] : state.allowances.at(point)) sum += aw;
  return sum;
}

Transaction trade_tx(uint64_t tick, const std::string& auth,
                     const std::string& grant, const std::string& buyer,
                     uint64_t price = 1) {
  Transaction tx;
  tx.timestamp = tick;
  tx.auth_id = auth;
  tx.data = TradeData{grant, buyer, Location{10000, 10000},
                      radio::RadioParams{18000, 1}, price};
  return tx;
}

}  // namespace

TEST_SUITE("state") {

TEST_CASE("genesis registers every record") {
  auto [chain, state] = make_genesis(small_spec(3, AllocationPolicy::kEqual));
  CHECK(chain.height() == 0);
  CHECK(state.nodes.size() == 2);
  CHECK(state.points.size() == 1);
  CHECK(state.grants.size() == 3);
  CHECK(state.tier_count == 3);
  CHECK(state.grants.at("g2").weight == 2);
}

TEST_CASE("equal allowances conserve the quantized budget exactly") {
  for (size_t n : {1UL, 3UL, 7UL, 10UL}) {
    auto [chain, state] = make_genesis(small_spec(n, AllocationPolicy::kEqual));
    CHECK(allowance_sum(state, "p1") == point_budget_aw(state, "p1"));
  }
}

TEST_CASE("ten equal shares of -80 dBm sit at -90 dBm exactly") {
  auto [chain, state] = make_genesis(small_spec(10, AllocationPolicy::kEqual));
  // -80 dBm = 1e7 aW, so each tenth is 1e6 aW = -90 dBm with no rounding.
  for (size_t i = 1; i <= 10; ++i) {
    uint64_t aw = allowance_of(state, "p1", "g" + std::to_string(i));
    CHECK(aw == 1000000);
    CHECK(mw_to_dbm(aw_to_mw(aw)) == -90.0);
  }
}

TEST_CASE("proportional allowances follow weights and conserve the budget") {
  auto [chain, state] =
      make_genesis(small_spec(3, AllocationPolicy::kProportional));
  CHECK(allowance_sum(state, "p1") == point_budget_aw(state, "p1"));
  uint64_t a1 = allowance_of(state, "p1", "g1");
  uint64_t a2 = allowance_of(state, "p1", "g2");
  uint64_t a3 = allowance_of(state, "p1", "g3");
  CHECK(a1 <= a2);
  CHECK(a2 <= a3);
  // Weights 1:2:3 against a -80 dBm budget, within integer quantization.
  CHECK(mw_to_dbm(aw_to_mw(a1)) == doctest::Approx(-87.78151250383644).epsilon(1e-7));
  CHECK(mw_to_dbm(aw_to_mw(a2)) == doctest::Approx(-84.77121254719663).epsilon(1e-7));
  CHECK(mw_to_dbm(aw_to_mw(a3)) == doctest::Approx(-83.01029995663981).epsilon(1e-7));
}

TEST_CASE("a trade retires the seller grant and mints for the buyer") {
  auto [chain, state] = make_genesis(small_spec(2, AllocationPolicy::kEqual));
  uint64_t before = allowance_of(state, "p1", "g1");
  Transaction tx = trade_tx(5, "n1", "g1", "n2", 7);

  LedgerState next = state;
  CHECK_FALSE(next.apply(tx, 1).has_value());
  std::string minted = minted_grant_id(tx_id(tx));
  CHECK(next.grants.count("g1") == 0);
  REQUIRE(next.grants.count(minted) == 1);
  const GrantRecord& g = next.grants.at(minted);
  CHECK(g.holder == "n2");
  CHECK((g.location == Location{10000, 10000}));
  CHECK(next.nodes.at("n1").balance == 107);
  CHECK(next.nodes.at("n2").balance == 93);
  // The allowance follows the lineage; the budget stays conserved.
  CHECK(allowance_of(next, "p1", minted) == before);
  CHECK(allowance_sum(next, "p1") == point_budget_aw(next, "p1"));
}

TEST_CASE("trades are refused for strangers, locked grants, poor buyers") {
  auto [chain, state] = make_genesis(small_spec(2, AllocationPolicy::kEqual));

  CHECK(state.apply(trade_tx(5, "n2", "g1", "n2"), 1).has_value());
  CHECK(state.apply(trade_tx(5, "n1", "gX", "n2"), 1).has_value());
  CHECK(state.apply(trade_tx(5, "n1", "g1", "n2", 101), 1).has_value());

  LedgerState locked = state;
  locked.grants.at("g1").locked = true;
  CHECK(locked.apply(trade_tx(5, "n1", "g1", "n2"), 1).has_value());
}

TEST_CASE("budget adjustments move allowance without creating any") {
  auto [chain, state] = make_genesis(small_spec(2, AllocationPolicy::kEqual));
  uint64_t before1 = allowance_of(state, "p1", "g1");
  uint64_t before2 = allowance_of(state, "p1", "g2");

  Transaction tx;
  tx.timestamp = 3;
  tx.auth_id = "n1";
  tx.data = BudgetAdjustData{"g1", "g2", "p1", 1000};
  CHECK_FALSE(state.apply(tx, 1).has_value());
  CHECK(allowance_of(state, "p1", "g1") == before1 - 1000);
  CHECK(allowance_of(state, "p1", "g2") == before2 + 1000);

  // Overdraw refused: the donor cannot give what it does not hold.
  tx.data = BudgetAdjustData{"g1", "g2", "p1", before1};
  CHECK(state.apply(tx, 1).has_value());
}

TEST_CASE("genesis records are confined to block zero") {
  auto [chain, state] = make_genesis(small_spec(1, AllocationPolicy::kEqual));
  Transaction tx;
  tx.data = GenesisData{GenesisNodeData{"n9", Location{0, 0}, 0, -40000}};
  CHECK(state.apply(tx, 1).has_value());
  CHECK(state.apply(trade_tx(5, "n1", "g1", "n2"), 0).has_value());
}

TEST_CASE("decision phases only move forward") {
  auto [chain, state] = make_genesis(small_spec(1, AllocationPolicy::kEqual));
  auto decide = [](DecisionPhase phase) {
    Transaction tx;
    tx.timestamp = 1;
    tx.auth_id = "notary:0";
    tx.data = DecisionData{"tr1", phase, {"notary:0"}};
    return tx;
  };
  CHECK_FALSE(state.apply(decide(DecisionPhase::kLocked), 1).has_value());
  CHECK_FALSE(state.apply(decide(DecisionPhase::kAttested), 2).has_value());
  CHECK_FALSE(state.apply(decide(DecisionPhase::kCommitted), 3).has_value());
  CHECK(state.decisions.at("tr1") == DecisionPhase::kCommitted);
  // Committed is terminal; stepping back or sideways is refused.
  CHECK(state.apply(decide(DecisionPhase::kAttested), 4).has_value());
  CHECK(state.apply(decide(DecisionPhase::kAborted), 5).has_value());
}

TEST_CASE("replay after serialization reproduces the same state") {
  auto [chain, state] = make_genesis(small_spec(3, AllocationPolicy::kEqual));
  Transaction tx = trade_tx(2, "n1", "g2", "n2", 3);
  ZoneRecord zone;
  zone.voter_ids = {"n1", "n2"};
  Block b = make_block(1, chain.tip().block_hash, {tx}, {zone});
  REQUIRE_FALSE(apply_block(state, b).has_value());
  chain.append(b);

  Chain reparsed = parse_chain(chain.serialize());
  LedgerState replayed = replay_chain(reparsed);
  CHECK(replayed.grants.size() == state.grants.size());
  CHECK(replayed.nodes.at("n2").balance == state.nodes.at("n2").balance);
  CHECK(replayed.allowances == state.allowances);
  CHECK(replayed.decisions == state.decisions);
}

}  // TEST_SUITE
