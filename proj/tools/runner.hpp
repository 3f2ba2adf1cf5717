// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "specchain/incentives.hpp"
#include "specchain/protocol.hpp"
#include "specchain/scenario.hpp"

namespace specchain::runner {

struct RunOptions {
  uint64_t seed = 1;
  protocol::Mode mode = protocol::Mode::kZone;
  uint32_t chains_override = 0;  // 0: use the scenario's chain count
  bool trace = true;
};

/// Everything one simulation run produces, in memory. Writing it out is a
/// separate step so batch runs can merge CSVs without re-reading files.
struct RunResult {
  std::string scenario_name;
  uint64_t seed = 0;
  protocol::Mode mode = protocol::Mode::kZone;
  uint32_t chain_count = 0;

  uint64_t final_tick = 0;
  uint64_t events_scheduled = 0;
  uint64_t events_processed = 0;
  uint64_t events_dropped = 0;
  uint64_t blocks_total = 0;  // regional chains, genesis included
  uint64_t txs_total = 0;

  std::vector<protocol::TxMetric> metrics;  // one row per vote round
  // Serialized ledgers in output order: regional chains, then "decision".
  std::vector<std::pair<std::string, std::vector<uint8_t>>> ledgers;
  std::vector<std::string> trace_lines;

  uint32_t admitted_static = 0;
  uint32_t admitted_coordinated = 0;
  std::optional<double> median_latency;  // for this run's mode
  uint64_t cross_total = 0;
  uint64_t cross_committed = 0;
  uint64_t cross_aborted = 0;
  std::optional<double> cross_abort_rate;  // empty without decided transfers
  std::optional<incentives::MarketOutcome> market;
};

/// Builds the world for (scenario, seed, mode), schedules the workload, runs
/// to quiescence, and collects metrics. Throws scenario::ScenarioError on
/// setup problems.
RunResult run_one(const scenario::Scenario& s, const RunOptions& options);

/// Writes ledger_<chain>.bin files, trace.txt (when traced), metrics_tx.csv,
/// metrics_run.csv, and summary.txt into `dir` (created if needed).
void write_outputs(const RunResult& result, const std::filesystem::path& dir);

// CSV pieces, exposed for deterministic batch merges.
std::string tx_csv_header();
std::vector<std::string> tx_csv_rows(const RunResult& result);
std::string run_csv_header();
std::string run_csv_row(const RunResult& result);

struct VerifyFileResult {
  std::filesystem::path path;
  bool ok = false;
  uint64_t height = 0;          // chain height when ok
  uint64_t first_bad_height = 0;
  std::string detail;
};

/// Standalone integrity verification of serialized ledgers.
std::vector<VerifyFileResult> verify_files(
    const std::vector<std::filesystem::path>& files);

/// Ledger files inside an output directory, regional chains first, then the
/// decision ledger if present.
std::vector<std::filesystem::path> ledger_files_in(
    const std::filesystem::path& dir);

struct AuditResult {
  bool replay_ok = false;
  std::string replay_error;
  uint64_t blocks_audited = 0;
  double max_margin_db = 0.0;  // most adverse aggregate-minus-threshold
  std::string max_margin_point;
  std::string max_margin_block;  // "<chain>#<height>"
  uint64_t margin_violations = 0;  // margins above tolerance
  bool custody_unique = true;
  std::vector<std::string> custody_duplicates;
  uint64_t grants_total = 0;
};

/// Replays regional ledgers and recomputes aggregate interference at every
/// protection point after every block, in a global merged block order. The
/// propagation model comes from the scenario.
AuditResult audit_ledgers(
    const std::vector<std::pair<std::string, std::vector<uint8_t>>>& ledgers,
    const radio::PropagationModel& prop, double tolerance_db = 1e-6);

/// audit_ledgers over the ledger files found in `dir`.
AuditResult audit_dir(const std::filesystem::path& dir,
                      const radio::PropagationModel& prop,
                      double tolerance_db = 1e-6);

}  // namespace specchain::runner
