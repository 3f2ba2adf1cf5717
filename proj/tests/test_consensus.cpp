// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "specchain/consensus.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "specchain/state.hpp"

using namespace specchain;
using namespace specchain::consensus;
using namespace specchain::ledger;

namespace {

// Line of nodes east of a 20 dBm transmitter at the origin. With exponent 3
// and 40 dB reference loss, received power is -20 - 30*log10(d): -80 dBm at
// 100 m, -98.1 at 400 m, -119 at 2000 m. Sensitivity -100 dBm puts n2 and n3
// in earshot of g1 and leaves n4 well outside.
struct Fixture {
  radio::PropagationModel prop{40.0, 1.0, 3.0, 1.0};
  ConsensusConfig config{-100.0, 0};
  LedgerState state;

  explicit Fixture(MilliDbm point_threshold = -10000,
                   MilliDbm n3_tolerance = -10000) {
    GenesisSpec spec;
    spec.policy = AllocationPolicy::kEqual;
    spec.tier_count = 1;
    spec.nodes.push_back({"n1", Location{0, 0}, 100, -10000});
    spec.nodes.push_back({"n2", Location{100000, 0}, 100, -10000});
    spec.nodes.push_back({"n3", Location{400000, 0}, 100, n3_tolerance});
    spec.nodes.push_back({"n4", Location{2000000, 0}, 100, -10000});
    spec.points.push_back({"p1", Location{200000, 0}, point_threshold});
    spec.points.push_back({"p2", Location{10000000, 0}, point_threshold});
    GenesisGrantData g1;
    g1.grant_id = "g1";
    g1.holder_id = "n1";
    g1.radio = radio::RadioParams{20000, 1};
    g1.location = Location{0, 0};
    spec.grants.push_back(g1);
    state = make_genesis(spec).second;
  }

  EnvView env() const { return env_from_state(state, prop); }

  // n1 sells g1 to n2; the transmitter moves to n2's location.
  Transaction trade(const std::string& auth = "n1") const {
    Transaction tx;
    tx.timestamp = 4;
    tx.auth_id = auth;
    tx.data = TradeData{"g1", "n2", Location{100000, 0},
                        radio::RadioParams{20000, 1}, 1};
    return tx;
  }
};

Vote approve_from(const std::string& voter, const Transaction& tx) {
  return Vote{voter, tx_id(tx), Verdict::kApprove, Reason::kOk};
}

Vote reject_from(const std::string& voter, const Transaction& tx) {
  return Vote{voter, tx_id(tx), Verdict::kReject, Reason::kOwnInterference};
}

}  // namespace

TEST_SUITE("consensus") {

TEST_CASE("validation zone covers counterparties and everyone in earshot") {
  Fixture f;
  ZoneRecord zone = zone_for_tx(f.trade(), f.state, f.prop,
                                f.config.sensitivity_dbm);
  CHECK((zone.voter_ids == std::vector<std::string>{"n1", "n2", "n3"}));
  CHECK((zone.protection_point_ids == std::vector<std::string>{"p1"}));
}

TEST_CASE("the zone shrinks as sensitivity rises") {
  Fixture f;
  ZoneRecord tight = zone_for_tx(f.trade(), f.state, f.prop, -60.0);
  // Only the counterparties: nobody else hears either endpoint at -60 dBm.
  CHECK((tight.voter_ids == std::vector<std::string>{"n1", "n2"}));
  ZoneRecord wide = zone_for_tx(f.trade(), f.state, f.prop, -145.0);
  CHECK((wide.voter_ids == std::vector<std::string>{"n1", "n2", "n3", "n4"}));
  CHECK((wide.protection_point_ids == std::vector<std::string>{"p1", "p2"}));
}

TEST_CASE("a compliant trade is approved") {
  Fixture f;
  for (const auto* voter : {"n1", "n2", "n3"}) {
    Vote v = node_vote(voter, f.trade(), f.state, f.env(), f.config);
    CHECK(v.verdict == Verdict::kApprove);
    CHECK(v.reason == Reason::kOk);
  }
}

TEST_CASE("selling a grant you do not hold is an ownership rejection") {
  Fixture f;
  Vote v = node_vote("n3", f.trade("n2"), f.state, f.env(), f.config);
  CHECK(v.verdict == Verdict::kReject);
  CHECK(v.reason == Reason::kOwnership);
}

TEST_CASE("a locked grant cannot be traded") {
  Fixture f;
  f.state.grants.at("g1").locked = true;
  Vote v = node_vote("n2", f.trade(), f.state, f.env(), f.config);
  CHECK(v.verdict == Verdict::kReject);
  CHECK(v.reason == Reason::kOwnership);
}

TEST_CASE("a broken protection point budget rejects the trade") {
  // Threshold -120 dBm at p1; the relocated transmitter lands 100 m away
  // and would arrive at -80 dBm.
  Fixture f(-120000);
  Vote v = node_vote("n3", f.trade(), f.state, f.env(), f.config);
  CHECK(v.verdict == Verdict::kReject);
  CHECK(v.reason == Reason::kBudgetViolation);
}

TEST_CASE("a voter rejects interference above its own tolerance") {
  // n3 sits 300 m from the new location: -94.3 dBm against a -95 tolerance.
  Fixture f(-10000, -95000);
  Vote v = node_vote("n3", f.trade(), f.state, f.env(), f.config);
  CHECK(v.verdict == Verdict::kReject);
  CHECK(v.reason == Reason::kOwnInterference);
  // The others keep approving: the rejection is personal to the receiver.
  CHECK(node_vote("n1", f.trade(), f.state, f.env(), f.config).verdict ==
        Verdict::kApprove);
}

TEST_CASE("a node's own transmissions do not count against it") {
  // The buyer ends up co-located with the grant it is buying. Any nonzero
  // tolerance would break if its own transmitter counted as interference.
  Fixture f;
  f.state.nodes.at("n2").tolerance_mdb = -200000;
  Vote v = node_vote("n2", f.trade(), f.state, f.env(), f.config);
  CHECK(v.verdict == Verdict::kApprove);
}

TEST_CASE("ownership outranks budget outranks tolerance") {
  Fixture both(-120000, -95000);
  Vote v = node_vote("n3", both.trade("n2"), both.state, both.env(),
                     both.config);
  CHECK(v.reason == Reason::kOwnership);
  Vote w = node_vote("n3", both.trade(), both.state, both.env(), both.config);
  CHECK(w.reason == Reason::kBudgetViolation);
}

TEST_CASE("interference checks see transmitters from other chains") {
  // The same trade against the same state, but a foreign chain contributes
  // an interferer next to p1 that pushes the aggregate over a threshold the
  // trade alone would respect (-80 dBm alone, -77 dBm together).
  Fixture f(-78000);
  Vote alone = node_vote("n3", f.trade(), f.state, f.env(), f.config);
  CHECK(alone.verdict == Verdict::kApprove);

  EnvView env = f.env();
  EnvView foreign;
  foreign.prop = f.prop;
  foreign.grants.push_back(
      EnvGrant{"gx", "m1", Location{200000, 100000},
               radio::RadioParams{20000, 1}});
  merge_env(env, foreign);
  Vote crowded = node_vote("n3", f.trade(), f.state, env, f.config);
  CHECK(crowded.verdict == Verdict::kReject);
  CHECK(crowded.reason == Reason::kBudgetViolation);
}

TEST_CASE("finalize is the conjunction of zone votes") {
  Fixture f;
  Transaction tx = f.trade();
  std::set<std::string> zone{"n1", "n2", "n3"};

  std::vector<Vote> all{approve_from("n1", tx), approve_from("n2", tx),
                        approve_from("n3", tx)};
  CHECK(finalize(zone, all));

  std::vector<Vote> one_reject{approve_from("n1", tx), reject_from("n2", tx),
                               approve_from("n3", tx)};
  CHECK_FALSE(finalize(zone, one_reject));

  std::vector<Vote> missing{approve_from("n1", tx), approve_from("n2", tx)};
  CHECK_FALSE(finalize(zone, missing));

  CHECK_FALSE(finalize(zone, std::vector<Vote>{}));
}

TEST_CASE("equivocation counts as rejection") {
  Fixture f;
  Transaction tx = f.trade();
  std::set<std::string> zone{"n1", "n2"};
  std::vector<Vote> votes{approve_from("n1", tx), approve_from("n2", tx),
                          reject_from("n1", tx)};
  CHECK_FALSE(finalize(zone, votes));
}

TEST_CASE("votes from outside the zone are ignored") {
  Fixture f;
  Transaction tx = f.trade();
  std::set<std::string> zone{"n1", "n2"};
  std::vector<Vote> votes{approve_from("n1", tx), approve_from("n2", tx),
                          reject_from("n9", tx)};
  CHECK(finalize(zone, votes));
}

TEST_CASE("aggregate at a receiver can exclude the holder's own grants") {
  Fixture f;
  EnvView env = f.env();
  env.grants.push_back(EnvGrant{"g2", "n2", Location{100000, 0},
                                radio::RadioParams{20000, 1}});
  Location rx{100000, 0};
  TradeDelta none;
  double with_own = aggregate_dbm(env, rx, none, "");
  double without = aggregate_dbm(env, rx, none, "n2");
  // Excluding n2's co-located transmitter leaves only g1 100 m away.
  CHECK(without == doctest::Approx(-80.0).epsilon(1e-9));
  CHECK(with_own > -25.0);
}

}  // TEST_SUITE

TEST_SUITE("blocks") {

TEST_CASE("formation orders by timestamp then id and re-validates") {
  Fixture f;
  // Three sellable grants for n1 plus one to lock.
  for (const char* id : {"g2", "g3", "g4"}) {
    GrantRecord g;
    g.id = id;
    g.holder = "n1";
    g.radio = radio::RadioParams{20000, 1};
    g.location = Location{0, 0};
    f.state.grants.emplace(id, g);
  }

  auto trade_of = [&](const std::string& grant, uint64_t ts, int64_t x_mm) {
    Transaction tx;
    tx.timestamp = ts;
    tx.auth_id = "n1";
    tx.data = TradeData{grant, "n2", Location{x_mm, 0},
                        radio::RadioParams{20000, 1}, 1};
    PendingTx p;
    p.tx = tx;
    p.zone = zone_for_tx(tx, f.state, f.prop, f.config.sensitivity_dbm);
    return p;
  };

  PendingTx a = trade_of("g1", 3, 100000);
  PendingTx b = trade_of("g2", 3, 110000);
  PendingTx c = trade_of("g3", 5, 120000);
  PendingTx stale = trade_of("g1", 9, 130000);  // g1 is gone by then
  Transaction lock_tx;
  lock_tx.timestamp = 7;
  lock_tx.auth_id = "n1";
  lock_tx.data = LockData{"g4", "tr1", "r1", 400};
  PendingTx lock{lock_tx, ZoneRecord{}};

  EnvView empty_external;
  empty_external.prop = f.prop;
  Digest prev{};
  BlockFormation out =
      form_block(f.state, empty_external, f.prop, f.config,
                 {c, stale, a, lock, b}, 1, prev);

  REQUIRE(out.block.has_value());
  REQUIRE(out.included.size() == 4);
  REQUIRE(out.dropped.size() == 1);
  CHECK(std::get<TradeData>(out.dropped[0].tx.data).seller_grant_id == "g1");
  CHECK(out.dropped[0].tx.timestamp == 9);

  // Sorted: the two timestamp-3 trades in digest order, then t=5, then t=7.
  const auto& txs = out.block->txs;
  CHECK(txs[0].timestamp == 3);
  CHECK(txs[1].timestamp == 3);
  CHECK(tx_id(txs[0]) < tx_id(txs[1]));
  CHECK(txs[2].timestamp == 5);
  CHECK(txs[3].timestamp == 7);
  CHECK(txs[3].kind() == TxKind::kLock);
  CHECK(out.block->zones.size() == txs.size());

  // The resulting state reflects exactly the included transactions.
  CHECK(out.next_state.grants.count("g1") == 0);
  CHECK(out.next_state.grants.count("g2") == 0);
  CHECK(out.next_state.grants.count("g3") == 0);
  CHECK(out.next_state.grants.at("g4").locked);
  CHECK(out.next_state.grants.size() == 4);  // three minted plus g4
}

TEST_CASE("a radio-violating trade is dropped at formation time") {
  // The block former rechecks interference even when apply would succeed:
  // approvals may have raced with a conflicting commit.
  Fixture f(-120000);
  Transaction tx = f.trade();
  PendingTx p;
  p.tx = tx;
  p.zone = zone_for_tx(tx, f.state, f.prop, f.config.sensitivity_dbm);
  EnvView empty_external;
  empty_external.prop = f.prop;
  Digest prev{};
  BlockFormation out =
      form_block(f.state, empty_external, f.prop, f.config, {p}, 1, prev);
  CHECK_FALSE(out.block.has_value());
  CHECK(out.included.empty());
  REQUIRE(out.dropped.size() == 1);
  CHECK(out.next_state.grants.count("g1") == 1);
}

}  // TEST_SUITE
