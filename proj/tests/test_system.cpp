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

// Whole-system behaviour: end-to-end timing, the per-cycle reference,
// determinism, report export and the sweep driver.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spmsim/spmsim.hpp"
#include "test_util.hpp"

namespace spmsim {
namespace {

namespace fs = std::filesystem;
using testing::ScenarioGen;
using testing::small_topology;

ResolvedWorkload single_op(const TopologyConfig& t, std::uint32_t pe, Op op) {
  ResolvedWorkload w;
  w.ops.resize(t.total_pes());
  w.ops[pe].push_back(op);
  return w;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("spmsim_test_" + name);
  fs::remove_all(p);
  return p;
}

// --- end-to-end timing ------------------------------------------------------------

TEST(System, EmptyWorkloadFinishesAtCycleZero) {
  const TopologyConfig t = small_topology();
  ResolvedWorkload w;
  w.ops.resize(t.total_pes());
  System sys(t, w, RemapperConfig{}, 1);
  const auto out = sys.run();
  EXPECT_EQ(out.status, RunStatus::finished);
  EXPECT_EQ(sys.total_cycles(), 0u);
  EXPECT_EQ(sys.report().requests_issued, 0u);
}

TEST(System, SingleLocalLoadTakesThreeCycles) {
  const TopologyConfig t;
  const AddressMap m(t);
  System sys(t, single_op(t, 0, Op{OpKind::read, static_cast<std::uint32_t>(m.unmap({0, 0, 3, 0})), 4, 0, 0, false}),
             RemapperConfig{}, 1);
  sys.run();
  const Request& r = *sys.requests().begin();
  EXPECT_EQ(r.issued_at, 0u);
  EXPECT_EQ(r.bank_head_at, 1u);
  EXPECT_EQ(r.served_at, 1u);
  EXPECT_EQ(r.delivered_at, 3u);
  EXPECT_EQ(sys.total_cycles(), 3u);
  const auto rep = sys.report();
  EXPECT_EQ(rep.pes[0].active, 1u);
  EXPECT_EQ(rep.pes[0].idle, 2u);
}

TEST(System, ZeroLoadRoundTripIsSymmetric) {
  const TopologyConfig t;
  const AddressMap m(t);
  // Intra-group: 3 cycles each way plus one cycle of bank service.
  System a(t, single_op(t, 0, Op{OpKind::read, static_cast<std::uint32_t>(m.unmap({0, 5, 0, 0})), 4, 0, 0, false}),
           RemapperConfig{}, 1);
  a.run();
  EXPECT_EQ(a.requests().begin()->delivered_at, 7u);
  // Adjacent group: 7 cycles each way.
  System b(t, single_op(t, 0, Op{OpKind::read, static_cast<std::uint32_t>(m.unmap({1, 5, 0, 0})), 4, 0, 0, false}),
           RemapperConfig{}, 1);
  b.run();
  EXPECT_EQ(b.requests().begin()->bank_head_at, 7u);
  EXPECT_EQ(b.requests().begin()->delivered_at, 15u);
}

TEST(System, CalibrationAnchorsHold) {
  for (const auto& t : {TopologyConfig{}, small_topology()})
    for (const auto& row : calibrate(t)) EXPECT_TRUE(row.pass) << row.name << " measured " << row.measured;
}

TEST(System, BudgetOverrunIsReported) {
  Scenario s;
  s.topology = small_topology();
  s.options.max_cycles = 5;
  const auto r = run_scenario(s);
  EXPECT_EQ(r.outcome.status, RunStatus::cycle_budget_exceeded);
  EXPECT_EQ(r.report.status, "cycle_budget_exceeded");
  EXPECT_NE(r.outcome.census.find("outstanding"), std::string::npos);
  for (const auto& pe : r.report.pes) EXPECT_EQ(pe.accounted(), 5u);
}

TEST(System, WrongOperationListCountIsAConfigError) {
  ResolvedWorkload w;
  w.ops.resize(3);
  EXPECT_THROW(System(small_topology(), w, RemapperConfig{}, 1), ConfigError);
}

// --- per-cycle reference ----------------------------------------------------------

TEST(Oracle, RandomSmallScenariosMatchExactly) {
  ScenarioGen gen(2024);
  for (int i = 0; i < 24; ++i) {
    Scenario s = gen.small(300);
    s.options.trace = true;
    TraceLog a, b;
    const auto ra = run_scenario(s, &a);
    const auto rb = run_oracle(s, &b);
    ASSERT_EQ(report_json_string(ra.report), report_json_string(rb)) << "case " << i << ": " << testing::describe(s);
    EXPECT_EQ(a.canonical(), b.canonical()) << "case " << i;
    EXPECT_EQ(a.sorted_states(), b.sorted_states()) << "case " << i;
  }
}

TEST(Oracle, VerdictNamesTheFirstDivergence) {
  const Layout L(small_topology());
  TraceLog a, b;
  a.record({4, 0, 1, TracePhase::enqueue});
  b.record({4, 0, 1, TracePhase::enqueue});
  a.record({9, 2, 1, TracePhase::dispatch});
  b.record({10, 2, 1, TracePhase::dispatch});
  EXPECT_EQ(first_divergence(a, b, L), "cycle 9, component " + L.name(2) + ": transfer event mismatch");
  a.record_state({6, 3, PeState::active});
  b.record_state({6, 3, PeState::idle});
  EXPECT_EQ(first_divergence(a, b, L), "cycle 6, component pe3: engine active, oracle idle");
  EXPECT_EQ(first_divergence(a, a, L), "");
}

TEST(Oracle, CompareWithOracleAgreesOnATrace) {
  Scenario s;
  s.topology = small_topology();
  s.workload = load_workload(SPMSIM_SOURCE_DIR "/configs/workloads/sample_trace.csv");
  const auto v = verify_with_oracle(s);
  EXPECT_TRUE(v.match) << v.detail;
  EXPECT_EQ(v.engine_cycles, v.oracle_cycles);
}

// --- invariants ------------------------------------------------------------------

TEST(Invariants, StallPartitionAndConservation) {
  ScenarioGen gen(7);
  for (int i = 0; i < 12; ++i) {
    const Scenario s = gen.small(400);
    const auto r = run_scenario(s);
    ASSERT_EQ(r.outcome.status, RunStatus::finished);
    EXPECT_EQ(r.report.responses_delivered, r.report.requests_issued);
    for (std::size_t p = 0; p < r.report.pes.size(); ++p) {
      const auto& c = r.report.pes[p];
      EXPECT_EQ(c.accounted(), r.report.total_cycles) << "case " << i << " pe " << p;
      EXPECT_EQ(c.responses, c.issued());
      EXPECT_LE(c.max_inflight, s.workload.max_outstanding);
    }
  }
}

TEST(Invariants, HopRecordsExplainLatencyAndDuration) {
  Scenario s;
  s.topology = small_topology();
  s.workload.total_requests = 800;
  s.workload.size_bytes = 8;
  s.workload.atomic_fraction = 0.1;
  s.remap.mode = RemapMode::remap;
  s.remap.partition_size = 2;
  s.options.path_trace = true;
  s.validate();
  System sys(s.topology, resolve_workload(s.workload, s.topology, s.seed), s.remap, s.seed, s.options);
  sys.run();
  for (const Request& r : sys.requests()) {
    ASSERT_LE(r.request_hops, r.path.size());
    Cycle lat[2] = {0, 0}, dur[2] = {0, 0};
    for (std::size_t h = 0; h < r.path.size(); ++h) {
      const int leg = h < r.request_hops ? 0 : 1;
      lat[leg] += r.path[h].base + r.path[h].wait;
      dur[leg] = std::max(dur[leg], r.path[h].duration);
    }
    EXPECT_EQ(lat[0], r.request_latency);
    EXPECT_EQ(dur[0], r.request_duration);
    EXPECT_EQ(lat[1], r.latency);
    EXPECT_EQ(dur[1], r.duration);
  }
}

TEST(Invariants, StaticMappingEqualsIdentityRemapWithoutSwitchCost) {
  Scenario s;
  s.topology = small_topology();
  s.workload.total_requests = 600;
  const auto a = run_scenario(s);
  s.remap.mode = RemapMode::remap;
  s.remap.partition_size = 4;
  s.remap.schedule = Schedule::identity;
  s.remap.switch_cycles = 0;
  auto b = run_scenario(s);
  b.report.config_hash = a.report.config_hash;
  EXPECT_EQ(report_json_string(a.report), report_json_string(b.report));
}

TEST(Invariants, SwitchCostAddsToInterGroupLatencyOnly) {
  const TopologyConfig t;
  const AddressMap m(t);
  RemapperConfig r;
  r.mode = RemapMode::remap;
  r.schedule = Schedule::identity;
  r.switch_cycles = 2;
  System far(t, single_op(t, 0, Op{OpKind::read, static_cast<std::uint32_t>(m.unmap({1, 0, 0, 0})), 4, 0, 0, false}),
             r, 1);
  far.run();
  EXPECT_EQ(far.requests().begin()->bank_head_at, 9u);
  System near(t, single_op(t, 0, Op{OpKind::read, static_cast<std::uint32_t>(m.unmap({0, 3, 0, 0})), 4, 0, 0, false}),
              r, 1);
  near.run();
  EXPECT_EQ(near.requests().begin()->bank_head_at, 3u);
}

// --- determinism and export ---------------------------------------------------------

TEST(Determinism, RepeatedRunsAreByteIdentical) {
  ScenarioGen gen(99);
  for (int i = 0; i < 4; ++i) {
    const Scenario s = gen.small(500);
    EXPECT_EQ(report_json_string(run_scenario(s).report), report_json_string(run_scenario(s).report));
  }
}

TEST(Determinism, TracingDoesNotPerturbTheReport) {
  Scenario s;
  s.topology = small_topology();
  s.workload.pattern = Pattern::hotspot;
  s.workload.hot_groups = {1};
  s.workload.total_requests = 500;
  const auto plain = report_json_string(run_scenario(s).report);
  s.options.trace = true;
  s.options.path_trace = true;
  TraceLog log;
  EXPECT_EQ(report_json_string(run_scenario(s, &log).report), plain);
  EXPECT_FALSE(log.records().empty());
  EXPECT_FALSE(log.states().empty());
}

TEST(Determinism, SeedChangesTheRun) {
  Scenario s;
  s.topology = small_topology();
  s.workload.total_requests = 300;
  const auto a = run_scenario(s).report;
  s.seed = 2;
  const auto b = run_scenario(s).report;
  EXPECT_NE(report_json_string(a), report_json_string(b));
}

TEST(Export, FilesAreByteIdenticalAcrossRuns) {
  Scenario s;
  s.topology = small_topology();
  s.workload.total_requests = 400;
  const fs::path d1 = scratch_dir("export1"), d2 = scratch_dir("export2");
  for (const auto& d : {d1, d2}) {
    const auto r = run_scenario(s);
    export_report(r.report, d, ExportFormat::json);
    export_report(r.report, d, ExportFormat::csv);
  }
  for (const char* f : {"report.json", "summary.json", "pes.csv", "routers.csv", "banks.csv", "channels.csv"}) {
    ASSERT_TRUE(fs::exists(d1 / f)) << f;
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  const auto j = nlohmann::json::parse(slurp(d1 / "report.json"));
  EXPECT_EQ(j["schema"], kReportSchema);
  EXPECT_EQ(j["requests_issued"], 400);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Export, ConfigHashCoversTraceContents) {
  const fs::path d = scratch_dir("hash");
  fs::create_directories(d);
  const std::string head = "ready_cycle,pe_id,op,address,size_bytes\n";
  write_text(d / "t.csv", head + "0,0,R,0x0,4\n");
  WorkloadSpec w = load_workload((d / "t.csv").string());
  const auto h1 = config_hash(small_topology(), w, {});
  write_text(d / "t.csv", head + "0,0,W,0x0,4\n");
  EXPECT_NE(config_hash(small_topology(), w, {}), h1);
  fs::remove_all(d);
}

// --- sweep -----------------------------------------------------------------------

TEST(Sweep, ProducesOneRowPerConfiguration) {
  Scenario base;
  base.topology = small_topology();
  base.workload.pattern = Pattern::hotspot;
  base.workload.hot_groups = {0};
  base.workload.total_requests = 400;
  SweepSpec spec;
  spec.partition_sizes = {2, 4};
  spec.seeds = {1, 2};
  const auto rows = dse_sweep(base, spec);
  ASSERT_EQ(rows.size(), 2u * (1 + 2 * 2));
  for (const auto& r : rows) EXPECT_TRUE(r.ok) << r.error;
  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "partition_size,assignment,seed,completion_cycles,spatial_cv,mean_latency,p99_latency");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), static_cast<long>(rows.size() + 1));
}

TEST(Sweep, InvalidPartitionIsReportedPerRow) {
  Scenario base;
  base.topology = small_topology();
  base.workload.total_requests = 50;
  SweepSpec spec;
  spec.partition_sizes = {8};  // 4 ports cannot be split into blocks of 8
  spec.assignments = {Assignment::contiguous};
  spec.include_static = false;
  const auto rows = dse_sweep(base, spec);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].ok);
  EXPECT_NE(sweep_csv(rows).find("error"), std::string::npos);
}

TEST(Sweep, SpecJsonRejectsUnknownKeys) {
  EXPECT_THROW(sweep_from_json(nlohmann::json{{"partitions", {2}}}), ConfigError);
  const auto s = sweep_from_json(nlohmann::json{{"partition_sizes", {4, 8}}, {"assignments", {"interleaved"}}});
  EXPECT_EQ(s.partition_sizes, (std::vector<std::uint32_t>{4, 8}));
  EXPECT_EQ(s.assignments, (std::vector<Assignment>{Assignment::interleaved}));
}

}  // namespace
}  // namespace spmsim
