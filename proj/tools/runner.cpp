// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include "runner.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "specchain/chain.hpp"
#include "specchain/consensus.hpp"
#include "specchain/state.hpp"
#include "specchain/tiers.hpp"

namespace specchain::runner {
namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::optional<double> median_of(std::vector<uint64_t> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  size_t n = values.size();
  if (n % 2 == 1) return static_cast<double>(values[n / 2]);
  return (static_cast<double>(values[n / 2 - 1]) +
          static_cast<double>(values[n / 2])) /
         2.0;
}

std::string mode_name(protocol::Mode mode) {
  return mode == protocol::Mode::kZone ? "zone" : "flood";
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

RunResult run_one(const scenario::Scenario& s, const RunOptions& options) {
  scenario::BuiltSetup setup =
      scenario::build_setup(s, options.seed, options.mode, options.chains_override);
  std::vector<scenario::WorkloadItem> workload =
      scenario::build_workload(s, setup, options.seed);

  protocol::World world(setup.config, setup.chains);
  world.sim().enable_trace(options.trace);
  for (const auto& item : workload) {
    if (item.cross) {
      world.schedule_cross(item.tick, item.seller_node, item.transfer);
    } else {
      world.schedule_trade(item.tick, item.seller_node, item.trade);
    }
  }
  world.run();

  RunResult r;
  r.scenario_name = s.name;
  r.seed = options.seed;
  r.mode = options.mode;
  r.chain_count = static_cast<uint32_t>(world.chains().size());
  r.final_tick = world.sim().now();
  r.events_scheduled = world.sim().scheduled_count();
  r.events_processed = world.sim().processed_count();
  r.events_dropped = world.sim().dropped_count();
  r.metrics = world.tx_metrics();
  r.trace_lines = world.sim().trace();

  for (const auto& [chain_id, rt] : world.chains()) {
    r.ledgers.emplace_back(chain_id, rt.chain.serialize());
    r.blocks_total += rt.chain.blocks().size();
    for (const auto& block : rt.chain.blocks()) r.txs_total += block.txs.size();
  }
  r.ledgers.emplace_back(world.decision_chain().chain_id,
                         world.decision_chain().chain.serialize());

  // Entrant admission, evaluated on each chain's final committed state under
  // both policies. Entrant order within a chain follows the scenario list.
  for (const auto& [chain_id, rt] : world.chains()) {
    std::vector<std::string> local;
    for (const auto& e : s.entrants) {
      auto it = setup.grant_chain.find(e);
      if (it != setup.grant_chain.end() && it->second == chain_id) {
        local.push_back(e);
      }
    }
    if (local.empty()) continue;
    r.admitted_static +=
        tiers::admitted_count(rt.state, s.prop, setup.config.consensus, local,
                              tiers::AdmissionPolicy::kStaticEqual)
            .admitted;
    r.admitted_coordinated +=
        tiers::admitted_count(rt.state, s.prop, setup.config.consensus, local,
                              tiers::AdmissionPolicy::kChainCoordinated)
            .admitted;
  }

  std::vector<uint64_t> latencies;
  for (const auto& m : r.metrics) latencies.push_back(m.latency);
  r.median_latency = median_of(std::move(latencies));

  r.cross_total = world.cross_trades().size();
  const auto& decisions = world.decision_chain().state.decisions;
  for (const auto& [trade_id, phase] : decisions) {
    if (phase == ledger::DecisionPhase::kCommitted) ++r.cross_committed;
    if (phase == ledger::DecisionPhase::kAborted) ++r.cross_aborted;
  }
  uint64_t decided = r.cross_committed + r.cross_aborted;
  if (decided > 0) {
    r.cross_abort_rate =
        static_cast<double>(r.cross_aborted) / static_cast<double>(decided);
  }

  if (s.market.enabled) {
    incentives::PriceSolution price = incentives::leader_optimal_price(
        s.market.followers, s.market.capacity, s.market.grid_step);
    r.market = incentives::allocate_and_compensate(
        s.market.followers,
        incentives::LeaderOffer{price.price, s.market.capacity},
        s.market.alpha);
  }
  return r;
}

std::string tx_csv_header() {
  return "seed,chain,tx,latency_ticks,zone_size,accepted,committed";
}

std::vector<std::string> tx_csv_rows(const RunResult& result) {
  std::vector<std::string> rows;
  rows.reserve(result.metrics.size());
  for (const auto& m : result.metrics) {
    rows.push_back(std::to_string(result.seed) + "," + m.chain_id + "," +
                   m.tx_ref + "," + std::to_string(m.latency) + "," +
                   std::to_string(m.zone_size) + "," +
                   (m.accepted ? "1" : "0") + "," + (m.committed ? "1" : "0"));
  }
  return rows;
}

std::string run_csv_header() {
  return "seed,admitted_static,admitted_coordinated,median_latency_zone,"
         "median_latency_flood,cross_chain_abort_rate,market_price,"
         "market_revenue,market_jain";
}

std::string run_csv_row(const RunResult& result) {
  std::string median = result.median_latency ? fmt_double(*result.median_latency) : "";
  std::string row = std::to_string(result.seed) + "," +
                    std::to_string(result.admitted_static) + "," +
                    std::to_string(result.admitted_coordinated) + ",";
  row += (result.mode == protocol::Mode::kZone ? median : "") + ",";
  row += (result.mode == protocol::Mode::kFlood ? median : "") + ",";
  row += result.cross_abort_rate ? fmt_double(*result.cross_abort_rate) : "";
  row += ",";
  if (result.market) {
    row += fmt_double(result.market->price) + "," +
           fmt_double(result.market->revenue) + "," +
           fmt_double(result.market->jain_index);
  } else {
    row += ",,";
  }
  return row;
}

void write_outputs(const RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& [chain_id, bytes] : result.ledgers) {
    std::ofstream out(dir / ("ledger_" + chain_id + ".bin"),
                      std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write ledger for " + chain_id);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
  }

  std::string trace;
  for (const auto& line : result.trace_lines) {
    trace += line;
    trace += '\n';
  }
  write_text_file(dir / "trace.txt", trace);

  std::string tx_csv = tx_csv_header() + "\n";
  for (const auto& row : tx_csv_rows(result)) {
    tx_csv += row;
    tx_csv += '\n';
  }
  write_text_file(dir / "metrics_tx.csv", tx_csv);
  write_text_file(dir / "metrics_run.csv",
                  run_csv_header() + "\n" + run_csv_row(result) + "\n");

  std::ostringstream sum;
  sum << "scenario: " << result.scenario_name << "\n";
  sum << "seed: " << result.seed << "\n";
  sum << "mode: " << mode_name(result.mode) << "\n";
  sum << "chains: " << result.chain_count << "\n";
  sum << "final_tick: " << result.final_tick << "\n";
  sum << "events_scheduled: " << result.events_scheduled << "\n";
  sum << "events_processed: " << result.events_processed << "\n";
  sum << "events_dropped: " << result.events_dropped << "\n";
  sum << "blocks: " << result.blocks_total << "\n";
  sum << "transactions: " << result.txs_total << "\n";
  sum << "vote_rounds: " << result.metrics.size() << "\n";
  uint64_t accepted = 0, committed = 0;
  for (const auto& m : result.metrics) {
    accepted += m.accepted ? 1 : 0;
    committed += m.committed ? 1 : 0;
  }
  sum << "rounds_accepted: " << accepted << "\n";
  sum << "rounds_committed: " << committed << "\n";
  sum << "median_latency_" << mode_name(result.mode) << ": "
      << (result.median_latency ? fmt_double(*result.median_latency) : "n/a")
      << "\n";
  sum << "cross_trades: " << result.cross_total << "\n";
  sum << "cross_committed: " << result.cross_committed << "\n";
  sum << "cross_aborted: " << result.cross_aborted << "\n";
  sum << "cross_abort_rate: "
      << (result.cross_abort_rate ? fmt_double(*result.cross_abort_rate) : "n/a")
      << "\n";
  sum << "admitted_static: " << result.admitted_static << "\n";
  sum << "admitted_coordinated: " << result.admitted_coordinated << "\n";
  if (result.market) {
    sum << "market_price: " << fmt_double(result.market->price) << "\n";
    sum << "market_revenue: " << fmt_double(result.market->revenue) << "\n";
    sum << "market_compensation: " << fmt_double(result.market->total_compensation)
        << "\n";
    sum << "market_jain: " << fmt_double(result.market->jain_index) << "\n";
  }
  write_text_file(dir / "summary.txt", sum.str());
}

std::vector<VerifyFileResult> verify_files(
    const std::vector<std::filesystem::path>& files) {
  std::vector<VerifyFileResult> out;
  for (const auto& path : files) {
    VerifyFileResult r;
    r.path = path;
    std::vector<uint8_t> bytes = ledger::read_file_bytes(path);
    ledger::VerifyResult v = ledger::verify_chain_bytes(bytes);
    r.ok = v.ok;
    r.first_bad_height = v.first_bad_height;
    r.detail = v.detail;
    if (v.ok) {
      ledger::Chain chain = ledger::parse_chain(bytes);
      r.height = chain.empty() ? 0 : chain.height();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::filesystem::path> ledger_files_in(
    const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> regional;
  std::optional<std::filesystem::path> decision;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name.rfind("ledger_", 0) != 0 || entry.path().extension() != ".bin") {
      continue;
    }
    if (name == "ledger_decision.bin") {
      decision = entry.path();
    } else {
      regional.push_back(entry.path());
    }
  }
  std::sort(regional.begin(), regional.end());
  if (decision) regional.push_back(*decision);
  return regional;
}

AuditResult audit_ledgers(
    const std::vector<std::pair<std::string, std::vector<uint8_t>>>& ledgers,
    const radio::PropagationModel& prop, double tolerance_db) {
  AuditResult audit;
  audit.max_margin_db = -std::numeric_limits<double>::infinity();

  struct ChainCursor {
    std::string chain_id;
    ledger::Chain chain;
    ledger::LedgerState state;
    size_t next = 0;  // next block index to apply
  };
  std::vector<ChainCursor> cursors;
  for (const auto& [chain_id, bytes] : ledgers) {
    if (chain_id == "decision") continue;  // no radio state to audit
    ledger::VerifyResult v = ledger::verify_chain_bytes(bytes);
    if (!v.ok) {
      audit.replay_error = chain_id + ": invalid at height " +
                           std::to_string(v.first_bad_height) + ": " + v.detail;
      return audit;
    }
    cursors.push_back(ChainCursor{chain_id, ledger::parse_chain(bytes), {}, 0});
  }
  if (cursors.empty()) {
    audit.replay_error = "no regional ledgers";
    return audit;
  }

  // Blocks are replayed in a global merge order keyed by the newest
  // transaction timestamp in each block; per-chain height order is preserved.
  auto block_key = [](const ledger::Block& block) {
    uint64_t ts = 0;
    for (const auto& tx : block.txs) ts = std::max(ts, tx.timestamp);
    return ts;
  };
  uint64_t remaining = 0;
  for (const auto& c : cursors) remaining += c.chain.blocks().size();
  while (remaining > 0) {
    ChainCursor* pick = nullptr;
    uint64_t pick_key = 0;
    for (auto& c : cursors) {
      if (c.next >= c.chain.blocks().size()) continue;
      uint64_t key = block_key(c.chain.blocks()[c.next]);
      if (!pick || key < pick_key ||
          (key == pick_key && c.chain_id < pick->chain_id)) {
        pick = &c;
        pick_key = key;
      }
    }
    const ledger::Block& block = pick->chain.blocks()[pick->next];
    if (auto err = ledger::apply_block(pick->state, block)) {
      audit.replay_error = pick->chain_id + "#" +
                           std::to_string(block.height) + ": " + err->reason;
      return audit;
    }
    ++pick->next;
    --remaining;
    ++audit.blocks_audited;

    consensus::EnvView env;
    env.prop = prop;
    for (const auto& c : cursors) {
      consensus::merge_env(env, consensus::env_from_state(c.state, prop));
    }
    for (const auto& m : consensus::point_margins(env)) {
      if (m.margin_db > audit.max_margin_db) {
        audit.max_margin_db = m.margin_db;
        audit.max_margin_point = m.point_id;
        audit.max_margin_block =
            pick->chain_id + "#" + std::to_string(block.height);
      }
      if (m.margin_db > tolerance_db) ++audit.margin_violations;
    }
  }
  audit.replay_ok = true;

  // Custody: at quiescence every grant id exists on exactly one chain.
  std::map<std::string, std::vector<std::string>> grant_homes;
  for (const auto& c : cursors) {
    for (const auto& [grant_id, grant] : c.state.grants) {
      grant_homes[grant_id].push_back(c.chain_id);
      ++audit.grants_total;
    }
  }
  for (const auto& [grant_id, homes] : grant_homes) {
    if (homes.size() > 1) {
      audit.custody_unique = false;
      std::string where = grant_id + " on";
      for (const auto& h : homes) where += " " + h;
      audit.custody_duplicates.push_back(where);
    }
  }
  return audit;
}

AuditResult audit_dir(const std::filesystem::path& dir,
                      const radio::PropagationModel& prop,
                      double tolerance_db) {
  std::vector<std::pair<std::string, std::vector<uint8_t>>> ledgers;
  for (const auto& path : ledger_files_in(dir)) {
    std::string name = path.filename().string();
    std::string chain_id = name.substr(7, name.size() - 7 - 4);
    ledgers.emplace_back(chain_id, ledger::read_file_bytes(path));
  }
  if (ledgers.empty()) {
    AuditResult audit;
    audit.max_margin_db = -std::numeric_limits<double>::infinity();
    audit.replay_error = "no regional ledger files in " + dir.string();
    return audit;
  }
  return audit_ledgers(ledgers, prop, tolerance_db);
}

}  // namespace specchain::runner
