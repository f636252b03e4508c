/*
 * Copyright 2026 The spmsim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// spmsim: command-line front end.
//
// Exit codes: 0 success; 1 configuration or usage error; 2 trace parse
// error; 3 cycle budget exceeded; 4 a self-check or the oracle comparison failed.

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "spmsim/spmsim.hpp"

namespace fs = std::filesystem;
using namespace spmsim;

namespace {

enum Exit { kOk = 0, kConfig = 1, kTrace = 2, kBudget = 3, kCheck = 4 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("spmsim");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SIM_LOG_LEVEL")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring SIM_LOG_LEVEL='{}' (expected error, warn, info or debug)", v);
  }
}

struct Flags {
  std::string config;
  std::string workload = "uniform";
  std::uint64_t seed = 1;
  Cycle max_cycles = 50'000'000;
  bool trace = false;
  std::string report_dir;
  std::string remap;
  std::string remap_config;
  std::optional<std::uint32_t> partition;
  std::string assignment;
  bool oracle = false;
  std::string sweep;
};

Scenario build_scenario(const Flags& f) {
  Scenario s;
  if (!f.config.empty()) s.topology = load_topology(f.config);
  s.workload = load_workload(f.workload);
  if (!f.remap_config.empty()) s.remap = remap_from_json(detail::parse_json_file(f.remap_config));
  if (!f.remap.empty()) s.remap.mode = parse_remap_mode(f.remap);
  if (f.partition) {
    s.remap.partition_size = *f.partition;
    if (f.remap.empty() && f.remap_config.empty()) s.remap.mode = RemapMode::remap;
  }
  if (!f.assignment.empty()) s.remap.assignment = parse_assignment(f.assignment);
  s.seed = f.seed;
  if (f.remap_config.empty()) s.remap.seed = f.seed;
  s.options.max_cycles = f.max_cycles;
  s.options.trace = f.trace;
  s.report_dir = f.report_dir;
  s.validate();
  return s;
}

/// Internal consistency checks on a finished run; returns the failures.
std::vector<std::string> self_checks(const ProfileReport& rep) {
  std::vector<std::string> bad;
  if (rep.responses_delivered != rep.requests_issued)
    bad.push_back("responses (" + std::to_string(rep.responses_delivered) + ") != requests (" +
                  std::to_string(rep.requests_issued) + ")");
  for (std::size_t i = 0; i < rep.pes.size(); ++i)
    if (rep.pes[i].accounted() != rep.total_cycles) {
      bad.push_back("PE " + std::to_string(i) + " stall partition does not sum to total cycles");
      break;
    }
  return bad;
}

void print_summary(const ProfileReport& rep) {
  std::cout << "status:        " << rep.status << "\n"
            << "total cycles:  " << rep.total_cycles << "\n"
            << "requests:      " << rep.requests_issued << "\n"
            << "mean latency:  " << rep.round_trip.mean() << " cycles (round trip)\n"
            << "p99 latency:   " << rep.round_trip.percentile(99.0) << " cycles\n";
  if (!rep.channels.empty() && rep.total_cycles > 0)
    std::cout << "channel CV:    " << imbalance_metrics(rep).spatial_cv << "\n";
  std::cout << "config hash:   " << rep.config_hash << "\n";
}

void write_outputs(const Scenario& s, const ProfileReport& rep, const TraceLog* trace) {
  if (s.report_dir.empty()) return;
  export_report(rep, s.report_dir, ExportFormat::json);
  export_report(rep, s.report_dir, ExportFormat::csv);
  if (trace) {
    write_text(s.report_dir / "trace.csv", trace_csv(*trace));
    write_text(s.report_dir / "pe_states.csv", pe_states_csv(*trace));
  }
  spdlog::info("reports written to {}", s.report_dir.string());
}

int cmd_run(const Flags& f) {
  const Scenario s = build_scenario(f);
  spdlog::info("topology: {} PEs, {} banks, {} mesh channels", s.topology.total_pes(), s.topology.total_banks(),
               s.topology.channels());
  TraceLog trace;
  const RunResult r = run_scenario(s, f.trace ? &trace : nullptr);
  print_summary(r.report);
  write_outputs(s, r.report, f.trace ? &trace : nullptr);
  if (r.outcome.status != RunStatus::finished) {
    spdlog::error("cycle budget of {} exceeded; outstanding work:\n{}", s.options.max_cycles, r.outcome.census);
    return kBudget;
  }
  const auto bad = self_checks(r.report);
  for (const auto& b : bad) spdlog::error("self-check failed: {}", b);
  return bad.empty() ? kOk : kCheck;
}

int cmd_oracle(const Flags& f) {
  const Scenario s = build_scenario(f);
  if (s.topology.groups() > 4 || s.topology.tiles_per_group > 4)
    spdlog::warn("oracle runs every component every cycle; this topology may be slow");
  const OracleVerdict v = verify_with_oracle(s);
  std::cout << "engine cycles: " << v.engine_cycles << "\noracle cycles: " << v.oracle_cycles << "\n"
            << "verdict:       " << (v.match ? "PASS" : "FAIL") << "\n";
  if (!v.match) std::cout << "first divergence: " << v.detail << "\n";
  if (!s.report_dir.empty()) {
    TraceLog trace;
    const RunResult r = run_scenario(s, f.trace ? &trace : nullptr);
    write_outputs(s, r.report, f.trace ? &trace : nullptr);
  }
  return v.match ? kOk : kCheck;
}

int cmd_sweep(Flags f, const CLI::App& app) {
  const SweepSpec spec = sweep_from_json(detail::parse_json_file(f.sweep));
  if (!spec.workload.empty() && app.count("--workload") == 0) {
    // Relative workload files are taken relative to the sweep file.
    f.workload = spec.workload;
    if (!named_workload(spec.workload) && fs::path(spec.workload).is_relative())
      f.workload = (fs::path(f.sweep).parent_path() / spec.workload).string();
  }
  const Scenario s = build_scenario(f);
  const auto rows = dse_sweep(s, spec);
  const std::string csv = sweep_csv(rows);
  std::cout << csv;
  if (!s.report_dir.empty()) {
    fs::create_directories(s.report_dir);
    write_text(s.report_dir / "sweep.csv", csv);
  }
  int failed = 0;
  for (const auto& r : rows)
    if (!r.ok) {
      ++failed;
      spdlog::error("sweep point p={} {} seed={} failed: {}", r.partition_size, r.assignment, r.seed, r.error);
    }
  return failed ? kCheck : kOk;
}

int cmd_calibrate(const Flags& f) {
  TopologyConfig topo;
  if (!f.config.empty()) topo = load_topology(f.config);
  const auto rows = calibrate(topo);
  bool ok = true;
  std::printf("%-32s %10s %10s %6s\n", "check", "expected", "measured", "result");
  for (const auto& r : rows) {
    std::printf("%-32s %10.2f %10.2f %6s\n", r.name.c_str(), r.expected, r.measured, r.pass ? "pass" : "FAIL");
    ok = ok && r.pass;
  }
  return ok ? kOk : kCheck;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"spmsim: event-driven timing simulator for hierarchical scratchpad interconnects"};
  Flags f;
  app.add_option("--config", f.config, "topology JSON file (default: built-in 1024-PE cluster)");
  app.add_option("--workload", f.workload, "workload name, JSON file or trace .csv")->capture_default_str();
  app.add_option("--seed", f.seed, "random seed")->capture_default_str();
  app.add_option("--max-cycles", f.max_cycles, "cycle budget")->capture_default_str();
  app.add_flag("--trace", f.trace, "write transfer-event and PE-state traces to the report directory");
  app.add_option("--report-dir", f.report_dir, "directory for report.json, summary.json and CSV files");
  app.add_option("--remap", f.remap, "inter-group port mapping: static | remap");
  app.add_option("--remap-config", f.remap_config, "remapper JSON file");
  app.add_option("--partition", f.partition, "remapper partition size (2, 4, 8, 16, 32)");
  app.add_option("--assignment", f.assignment, "partition assignment: contiguous | interleaved");
  app.add_flag("--oracle", f.oracle, "also run the per-cycle reference simulator and compare");
  app.add_option("--sweep", f.sweep, "sweep specification JSON; writes one CSV row per configuration");
  auto* calib = app.add_subcommand("calibrate", "check zero-load latency anchors");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*calib) return cmd_calibrate(f);
    if (!f.sweep.empty()) return cmd_sweep(f, app);
    if (f.oracle) return cmd_oracle(f);
    return cmd_run(f);
  } catch (const TraceParseError& e) {
    spdlog::error("{}", e.what());
    return kTrace;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const SimError& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kConfig;
  }
}
