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

// Scenarios (everything one run needs), single runs and the zero-load
// latency calibration.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spmsim/oracle.hpp"
#include "spmsim/profiling.hpp"
#include "spmsim/remap.hpp"
#include "spmsim/system.hpp"
#include "spmsim/topology.hpp"
#include "spmsim/traffic.hpp"

namespace spmsim {

struct Scenario {
  TopologyConfig topology;
  WorkloadSpec workload;
  RemapperConfig remap;
  std::uint64_t seed = 1;
  SimOptions options;
  std::filesystem::path report_dir;  // empty = no files

  /// Fail-fast check that everything resolves before simulation starts.
  void validate() const {
    topology.validate();
    workload.validate(topology);
    remap.validate(topology.channels());
  }

  std::string hash() const { return config_hash(topology, workload, remap); }
};

struct RunResult {
  RunOutcome outcome;
  ProfileReport report;
};

/// Runs one scenario on the event-driven engine. When `trace_out` is given,
/// the transfer/PE-state trace is copied into it.
inline RunResult run_scenario(const Scenario& s, TraceLog* trace_out = nullptr) {
  s.validate();
  System sys(s.topology, resolve_workload(s.workload, s.topology, s.seed), s.remap, s.seed, s.options, s.hash());
  RunResult r;
  r.outcome = sys.run();
  r.report = sys.report();
  if (trace_out) *trace_out = sys.trace();
  return r;
}

/// Runs the per-cycle reference on the same scenario.
inline ProfileReport run_oracle(const Scenario& s, TraceLog* trace_out = nullptr) {
  s.validate();
  Oracle o(s.topology, resolve_workload(s.workload, s.topology, s.seed), s.remap, s.seed, s.options, s.hash());
  o.run();
  if (trace_out) *trace_out = o.trace();
  return o.report();
}

inline OracleVerdict verify_with_oracle(const Scenario& s) {
  s.validate();
  return compare_with_oracle(s.topology, resolve_workload(s.workload, s.topology, s.seed), s.remap, s.seed,
                             s.options);
}

// --- calibration -----------------------------------------------------------------

struct CalibrationRow {
  std::string name;
  double expected = 0.0;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct PairLatency {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  Cycle measured = 0;  // one-way, request issue to bank arrival
  Cycle analytic = 0;
};

/// One-way zero-load latency of every ordered group pair, measured with a
/// single request in flight at a time on the event-driven model.
inline std::vector<PairLatency> measure_group_pairs(const TopologyConfig& topo) {
  topo.validate();
  const Layout L(topo);
  ResolvedWorkload work;
  work.ops.resize(topo.total_pes());
  Cycle when = 0;
  const Cycle spacing = 64 + 8 * topo.mesh_hop_cycles * (topo.mesh_x + topo.mesh_y);
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t s = 0; s < topo.groups(); ++s)
    for (std::uint32_t d = 0; d < topo.groups(); ++d) {
      if (s == d) continue;
      const std::uint32_t pe = pe_index(topo, {s, 0, 0});
      const Location loc{d, topo.tiles_per_group > 1 ? 1u : 0u, 0, 0};
      work.ops[pe].push_back(Op{OpKind::read, static_cast<std::uint32_t>(L.address_map().unmap(loc)), kWordBytes,
                                when, 0, false});
      pairs.emplace_back(s, d);
      when += spacing;
    }
  System sys(topo, std::move(work), RemapperConfig{}, 0);
  sys.run();
  std::vector<PairLatency> out;
  for (const Request& r : sys.requests()) {
    const std::uint32_t s = pe_coord(topo, r.initiator).group;
    const std::uint32_t d = L.address_map().map(r.addr).group;
    out.push_back({s, d, r.bank_head_at - r.issued_at, zero_load_latency(s, d, topo)});
  }
  return out;
}

/// Zero-load latency of a single request from PE 0 to `addr`.
inline Cycle measure_single(const TopologyConfig& topo, std::uint32_t pe, std::uint32_t addr) {
  ResolvedWorkload work;
  work.ops.resize(topo.total_pes());
  work.ops[pe].push_back(Op{OpKind::read, addr, kWordBytes, 0, 0, false});
  System sys(topo, std::move(work), RemapperConfig{}, 0);
  sys.run();
  const Request& r = *sys.requests().begin();
  return r.bank_head_at - r.issued_at;
}

/// Checks every zero-load latency anchor; one row per check.
inline std::vector<CalibrationRow> calibrate(const TopologyConfig& topo = {}) {
  const Layout L(topo);
  std::vector<CalibrationRow> rows;
  auto add = [&rows](std::string name, double expected, double measured, double tol) {
    rows.push_back({std::move(name), expected, measured, tol, std::fabs(measured - expected) <= tol});
  };
  const auto& map = L.address_map();
  add("intra-tile one-way", static_cast<double>(topo.tile_xbar_cycles),
      static_cast<double>(measure_single(topo, 0, static_cast<std::uint32_t>(map.unmap({0, 0, 1, 0})))), 0.0);
  if (topo.tiles_per_group > 1)
    add("intra-group one-way",
        static_cast<double>(topo.tile_egress_cycles + topo.group_xbar_cycles + topo.tile_xbar_cycles),
        static_cast<double>(measure_single(topo, 0, static_cast<std::uint32_t>(map.unmap({0, 1, 0, 0})))), 0.0);
  if (topo.groups() < 2) return rows;

  const auto pairs = measure_group_pairs(topo);
  double sum = 0.0, analytic_sum = 0.0;
  std::size_t mismatches = 0;
  double adjacent = -1.0;
  for (const auto& p : pairs) {
    sum += static_cast<double>(p.measured);
    analytic_sum += static_cast<double>(p.analytic);
    if (p.measured != p.analytic) ++mismatches;
    if (adjacent < 0 && manhattan(group_coord(topo, p.src), group_coord(topo, p.dst)) == 1)
      adjacent = static_cast<double>(p.measured);
  }
  const double n = static_cast<double>(pairs.size());
  add("adjacent groups one-way", static_cast<double>(topo.mesh_overhead_cycles + topo.mesh_hop_cycles), adjacent,
      0.0);
  add("mean over " + std::to_string(pairs.size()) + " group pairs", analytic_sum / n, sum / n, 0.05);
  add("pairs matching analytic model", n, n - static_cast<double>(mismatches), 0.0);
  return rows;
}

}  // namespace spmsim
