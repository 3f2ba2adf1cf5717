// Copyright 2026 The specchain developers
// Distributed under the Apache License, Version 2.0. See the accompanying
// LICENSE file or http://www.apache.org/licenses/LICENSE-2.0

#include <atomic>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "runner.hpp"

namespace {

using namespace specchain;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

struct SeedRange {
  uint64_t first = 0;
  uint64_t last = 0;
};

/// Parses "a..b" (inclusive). Throws ScenarioError on malformed input.
SeedRange parse_seed_range(const std::string& text) {
  auto pos = text.find("..");
  if (pos == std::string::npos || pos == 0 || pos + 2 >= text.size()) {
    throw scenario::ScenarioError("--seeds expects the form a..b, got '" +
                                  text + "'");
  }
  SeedRange range;
  try {
    range.first = std::stoull(text.substr(0, pos));
    range.last = std::stoull(text.substr(pos + 2));
  } catch (const std::exception&) {
    throw scenario::ScenarioError("--seeds expects numeric bounds, got '" +
                                  text + "'");
  }
  if (range.last < range.first) {
    throw scenario::ScenarioError("--seeds range is empty: " + text);
  }
  return range;
}

protocol::Mode parse_mode(const std::string& name) {
  return name == "flood" ? protocol::Mode::kFlood : protocol::Mode::kZone;
}

void append_file(std::ostream& out, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  out << in.rdbuf();
}

int cmd_run(const std::string& scenario_path, const std::string& seeds_text,
            uint64_t seed, const std::string& mode_name, uint32_t chains,
            const std::string& out_dir, bool no_trace) {
  scenario::Scenario scn = scenario::load_scenario_file(scenario_path);
  runner::RunOptions base;
  base.mode = parse_mode(mode_name);
  base.chains_override = chains;
  base.trace = !no_trace;
  std::filesystem::path out(out_dir);

  if (seeds_text.empty()) {
    base.seed = seed;
    runner::RunResult result = runner::run_one(scn, base);
    runner::write_outputs(result, out);
    append_file(std::cout, out / "summary.txt");
    return kExitOk;
  }

  // Batch mode: independent seeds run concurrently; the merged CSVs list
  // rows in seed order regardless of completion order.
  SeedRange range = parse_seed_range(seeds_text);
  size_t n = static_cast<size_t>(range.last - range.first + 1);
  std::vector<std::optional<runner::RunResult>> results(n);
  std::vector<std::string> errors(n);
  std::atomic<size_t> next{0};
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 4;
  workers = static_cast<unsigned>(std::min<size_t>(workers, n));

  auto work = [&] {
    for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      runner::RunOptions options = base;
      options.seed = range.first + i;
      try {
        runner::RunResult result = runner::run_one(scn, options);
        runner::write_outputs(result,
                              out / ("seed_" + std::to_string(options.seed)));
        results[i] = std::move(result);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  for (size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      std::cerr << "seed " << (range.first + i) << ": " << errors[i] << "\n";
      return kExitConfig;
    }
  }
  std::filesystem::create_directories(out);
  std::ofstream tx_csv(out / "metrics_tx.csv", std::ios::binary | std::ios::trunc);
  std::ofstream run_csv(out / "metrics_run.csv", std::ios::binary | std::ios::trunc);
  tx_csv << runner::tx_csv_header() << "\n";
  run_csv << runner::run_csv_header() << "\n";
  for (const auto& result : results) {
    for (const auto& row : runner::tx_csv_rows(*result)) tx_csv << row << "\n";
    run_csv << runner::run_csv_row(*result) << "\n";
  }
  std::cout << "seeds: " << range.first << ".." << range.last << "\n"
            << "runs: " << n << "\n"
            << "merged: " << (out / "metrics_tx.csv").string() << ", "
            << (out / "metrics_run.csv").string() << "\n";
  return kExitOk;
}

int cmd_verify(std::vector<std::string> files, const std::string& out_dir) {
  std::vector<std::filesystem::path> paths;
  for (const auto& f : files) paths.emplace_back(f);
  if (paths.empty() && !out_dir.empty()) {
    paths = runner::ledger_files_in(out_dir);
  }
  if (paths.empty()) {
    std::cerr << "verify: no ledger files (pass files or --out DIR)\n";
    return kExitConfig;
  }
  bool all_ok = true;
  for (const auto& r : runner::verify_files(paths)) {
    if (r.ok) {
      std::cout << r.path.string() << ": ok height " << r.height << "\n";
    } else {
      all_ok = false;
      std::cout << r.path.string() << ": invalid at height "
                << r.first_bad_height << ": " << r.detail << "\n";
    }
  }
  return all_ok ? kExitOk : kExitVerification;
}

int cmd_audit(const std::string& out_dir, const std::string& scenario_path,
              double tolerance) {
  scenario::Scenario scn = scenario::load_scenario_file(scenario_path);
  runner::AuditResult audit = runner::audit_dir(out_dir, scn.prop, tolerance);
  if (!audit.replay_ok) {
    std::cout << "replay: failed (" << audit.replay_error << ")\n";
    return kExitVerification;
  }
  std::cout << "replay: ok\n";
  std::cout << "blocks_audited: " << audit.blocks_audited << "\n";
  if (audit.max_margin_point.empty()) {
    std::cout << "max_margin_db: n/a (no protection points)\n";
  } else {
    std::cout << "max_margin_db: " << std::setprecision(10)
              << audit.max_margin_db << " at " << audit.max_margin_point
              << " after " << audit.max_margin_block << "\n";
  }
  std::cout << "margin_violations: " << audit.margin_violations << "\n";
  std::cout << "grants: " << audit.grants_total << "\n";
  if (audit.custody_unique) {
    std::cout << "custody: unique\n";
  } else {
    std::cout << "custody: DUPLICATED\n";
    for (const auto& d : audit.custody_duplicates) {
      std::cout << "  " << d << "\n";
    }
  }
  bool ok = audit.margin_violations == 0 && audit.custody_unique;
  return ok ? kExitOk : kExitVerification;
}

int cmd_report(const std::string& out_dir) {
  std::filesystem::path dir(out_dir);
  auto read_rows = [](const std::filesystem::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) cells.push_back(cell);
      if (line.back() == ',') cells.push_back("");
      rows.push_back(std::move(cells));
    }
    return rows;
  };

  auto tx_rows = read_rows(dir / "metrics_tx.csv");
  std::cout << "per-transaction metrics (" << (tx_rows.size() - 1)
            << " rows)\n";
  std::cout << std::left << std::setw(6) << "seed" << std::setw(10) << "chain"
            << std::setw(18) << "tx" << std::setw(15) << "latency_ticks"
            << std::setw(11) << "zone_size" << std::setw(10) << "accepted"
            << "committed\n";
  for (size_t i = 1; i < tx_rows.size(); ++i) {
    const auto& c = tx_rows[i];
    if (c.size() < 7) continue;
    std::cout << std::left << std::setw(6) << c[0] << std::setw(10) << c[1]
              << std::setw(18) << c[2].substr(0, 16) << std::setw(15) << c[3]
              << std::setw(11) << c[4] << std::setw(10) << c[5] << c[6]
              << "\n";
  }

  auto run_rows = read_rows(dir / "metrics_run.csv");
  std::cout << "\nper-run metrics\n";
  if (run_rows.size() < 2) return kExitOk;
  const auto& header = run_rows[0];
  for (size_t i = 1; i < run_rows.size(); ++i) {
    const auto& c = run_rows[i];
    for (size_t j = 0; j < header.size() && j < c.size(); ++j) {
      std::cout << header[j] << ": " << (c[j].empty() ? "n/a" : c[j]) << "\n";
    }
    if (i + 1 < run_rows.size()) std::cout << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrum-sharing ledger simulator"};
  app.require_subcommand(1);

  std::string scenario_path, seeds_text, mode_name = "zone", out_dir = "out";
  uint64_t seed = 1;
  uint32_t chains = 0;
  bool no_trace = false;
  double tolerance = 1e-6;
  std::vector<std::string> verify_paths;

  CLI::App* run = app.add_subcommand("run", "Simulate a scenario");
  run->add_option("--scenario", scenario_path, "Scenario file")
      ->required()
      ->envname("SPECCHAIN_SCENARIO");
  run->add_option("--seed", seed, "Run seed")->envname("SPECCHAIN_SEED");
  run->add_option("--seeds", seeds_text,
                  "Batch seed range a..b, run concurrently")
      ->envname("SPECCHAIN_SEEDS");
  run->add_option("--mode", mode_name, "Consensus distribution mode")
      ->check(CLI::IsMember({"zone", "flood"}))
      ->envname("SPECCHAIN_MODE");
  run->add_option("--chains", chains,
                  "Region count override (0: scenario value)")
      ->envname("SPECCHAIN_CHAINS");
  run->add_option("--out", out_dir, "Output directory")
      ->envname("SPECCHAIN_OUT");
  run->add_flag("--no-trace", no_trace, "Skip the event trace");

  CLI::App* verify = app.add_subcommand("verify", "Check ledger integrity");
  verify->add_option("files", verify_paths, "Ledger files");
  verify->add_option("--out", out_dir, "Output directory with ledgers")
      ->envname("SPECCHAIN_OUT");

  CLI::App* audit = app.add_subcommand(
      "audit", "Replay ledgers and brute-force interference margins");
  audit->add_option("--out", out_dir, "Output directory with ledgers")
      ->envname("SPECCHAIN_OUT");
  audit->add_option("--scenario", scenario_path,
                    "Scenario file (propagation model)")
      ->required()
      ->envname("SPECCHAIN_SCENARIO");
  audit->add_option("--tolerance", tolerance, "Margin tolerance in dB");

  CLI::App* report = app.add_subcommand("report", "Print collected metrics");
  report->add_option("--out", out_dir, "Output directory")
      ->envname("SPECCHAIN_OUT");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (app.got_subcommand(run)) {
      return cmd_run(scenario_path, seeds_text, seed, mode_name, chains,
                     out_dir, no_trace);
    }
    if (app.got_subcommand(verify)) {
      return cmd_verify(verify_paths, out_dir);
    }
    if (app.got_subcommand(audit)) {
      return cmd_audit(out_dir, scenario_path, tolerance);
    }
    if (app.got_subcommand(report)) {
      return cmd_report(out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
