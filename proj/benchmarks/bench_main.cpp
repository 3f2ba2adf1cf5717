// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include <benchmark/benchmark.h>

#include "specchain/block.hpp"
#include "specchain/chain.hpp"
#include "specchain/consensus.hpp"
#include "specchain/radio.hpp"
#include "specchain/simnet.hpp"
#include "specchain/state.hpp"

namespace {

using namespace specchain;

/// A populated single-chain state: n nodes on a grid, one grant each, five
/// protection points.
ledger::GenesisSpec grid_spec(size_t n) {
  ledger::GenesisSpec spec;
  spec.tier_count = 3;
  simnet::Rng rng(7);
  for (size_t i = 0; i < n; ++i) {
    ledger::GenesisNodeData node;
    node.node_id = "n" + std::to_string(i);
    node.location = Location{rng.range(0, 5000000), rng.range(0, 5000000)};
    node.tolerance_mdb = -40000;
    spec.nodes.push_back(node);

    ledger::GenesisGrantData grant;
    grant.grant_id = "g" + std::to_string(i);
    grant.holder_id = node.node_id;
    grant.location = node.location;
    grant.radio.tx_power_mdb = 20000;
    grant.radio.channel = 1;
    grant.tier = static_cast<uint8_t>(1 + i % 3);
    spec.grants.push_back(grant);
  }
  for (size_t i = 0; i < 5; ++i) {
    ledger::GenesisPointData point;
    point.point_id = "p" + std::to_string(i);
    point.location = Location{rng.range(0, 5000000), rng.range(0, 5000000)};
    point.threshold_mdb = -50000;
    spec.points.push_back(point);
  }
  return spec;
}

void BM_AggregateInterference(benchmark::State& state) {
  size_t n = static_cast<size_t>(state.range(0));
  std::vector<double> levels;
  simnet::Rng rng(11);
  for (size_t i = 0; i < n; ++i) {
    levels.push_back(-120.0 + 60.0 * rng.unit());
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(radio::aggregate_interference_dbm(levels));
  }
}
BENCHMARK(BM_AggregateInterference)->Arg(16)->Arg(256)->Arg(4096);

void BM_PointMargins(benchmark::State& state) {
  auto [chain, st] = ledger::make_genesis(grid_spec(static_cast<size_t>(state.range(0))));
  radio::PropagationModel prop;
  consensus::EnvView env = consensus::env_from_state(st, prop);
  for (auto _ : state) {
    benchmark::DoNotOptimize(consensus::point_margins(env));
  }
}
BENCHMARK(BM_PointMargins)->Arg(50)->Arg(500);

void BM_ZoneBuild(benchmark::State& state) {
  auto [chain, st] = ledger::make_genesis(grid_spec(static_cast<size_t>(state.range(0))));
  radio::PropagationModel prop;
  ledger::Transaction tx;
  tx.timestamp = 1;
  tx.auth_id = "n0";
  ledger::TradeData trade;
  trade.seller_grant_id = "g0";
  trade.buyer_id = "n1";
  trade.new_location = st.nodes.at("n1").location;
  trade.new_radio = st.grants.at("g0").radio;
  tx.data = trade;
  for (auto _ : state) {
    benchmark::DoNotOptimize(consensus::zone_for_tx(tx, st, prop, -100.0));
  }
}
BENCHMARK(BM_ZoneBuild)->Arg(50)->Arg(500);

void BM_BlockHash(benchmark::State& state) {
  auto [chain, st] = ledger::make_genesis(grid_spec(64));
  const ledger::Block& genesis = chain.blocks().front();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ledger::compute_block_hash(genesis));
  }
}
BENCHMARK(BM_BlockHash);

void BM_ChainVerify(benchmark::State& state) {
  auto [chain, st] = ledger::make_genesis(grid_spec(64));
  std::vector<uint8_t> bytes = chain.serialize();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ledger::verify_chain_bytes(bytes));
  }
}
BENCHMARK(BM_ChainVerify);

}  // namespace

BENCHMARK_MAIN();
