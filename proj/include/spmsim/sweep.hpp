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

// Design-space sweep over remapper partition sizes and port assignments.

#pragma once

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spmsim/profiling.hpp"
#include "spmsim/remap.hpp"
#include "spmsim/scenario.hpp"

namespace spmsim {

struct SweepSpec {
  std::vector<std::uint32_t> partition_sizes{2, 4, 8, 16, 32};
  std::vector<Assignment> assignments{Assignment::contiguous, Assignment::interleaved};
  std::vector<std::uint64_t> seeds{1};
  Schedule schedule = Schedule::pseudo_random;
  Cycle switch_cycles = 1;
  bool include_static = true;  // adds a static-mapping baseline row per seed
  std::string workload;        // optional workload reference (name or path)
};

inline SweepSpec sweep_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("sweep", "expected a JSON object");
  SweepSpec s;
  for (const auto& [key, v] : j.items()) {
    if (key == "partition_sizes") {
      if (!v.is_array()) throw ConfigError(key, "expected an array");
      s.partition_sizes.clear();
      for (const auto& e : v) s.partition_sizes.push_back(detail::json_uint<std::uint32_t>(e, key));
    } else if (key == "assignments") {
      if (!v.is_array()) throw ConfigError(key, "expected an array");
      s.assignments.clear();
      for (const auto& e : v) s.assignments.push_back(parse_assignment(detail::json_string(e, key)));
    } else if (key == "seeds") {
      if (!v.is_array()) throw ConfigError(key, "expected an array");
      s.seeds.clear();
      for (const auto& e : v) s.seeds.push_back(detail::json_uint<std::uint64_t>(e, key));
    } else if (key == "schedule") {
      const auto n = detail::json_string(v, key);
      if (n == "pseudo_random") s.schedule = Schedule::pseudo_random;
      else if (n == "true_random") s.schedule = Schedule::true_random;
      else if (n == "identity") s.schedule = Schedule::identity;
      else throw ConfigError(key, "expected identity, pseudo_random or true_random");
    } else if (key == "switch_cycles") s.switch_cycles = detail::json_uint<Cycle>(v, key);
    else if (key == "include_static") {
      if (!v.is_boolean()) throw ConfigError(key, "expected true or false");
      s.include_static = v.get<bool>();
    } else if (key == "workload") s.workload = detail::json_string(v, key);
    else throw ConfigError(key, "unknown key");
  }
  if (s.seeds.empty()) throw ConfigError("seeds", "must not be empty");
  return s;
}

struct SweepRow {
  std::uint32_t partition_size = 0;  // 0 for the static baseline
  std::string assignment;
  std::uint64_t seed = 0;
  bool ok = false;
  Cycle completion_cycles = 0;
  double spatial_cv = 0.0;
  double mean_temporal_variance = 0.0;
  double mean_latency = 0.0;
  Cycle p99_latency = 0;
  std::vector<std::uint64_t> channel_busy;
  std::string error;
};

/// One simulation per (seed, partition size, assignment); every configuration
/// sees the same workload for a given seed. Failed runs are recorded and the
/// sweep moves on.
inline std::vector<SweepRow> dse_sweep(const Scenario& base, const SweepSpec& spec) {
  std::vector<SweepRow> rows;
  auto run_one = [&](SweepRow row, const RemapperConfig& rc, std::uint64_t seed) {
    try {
      Scenario s = base;
      s.seed = seed;
      s.remap = rc;
      s.options.trace = false;
      s.options.path_trace = false;
      const RunResult r = run_scenario(s);
      if (r.outcome.status != RunStatus::finished) throw SimError("cycle budget exceeded");
      const auto m = imbalance_metrics(r.report);
      row.ok = true;
      row.completion_cycles = r.report.total_cycles;
      row.spatial_cv = m.spatial_cv;
      row.mean_temporal_variance = m.mean_temporal_variance;
      row.mean_latency = r.report.round_trip.mean();
      row.p99_latency = r.report.round_trip.percentile(99.0);
      for (const auto& ch : r.report.channels) row.channel_busy.push_back(ch.total());
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  };
  for (std::uint64_t seed : spec.seeds) {
    if (spec.include_static) {
      SweepRow row;
      row.assignment = "static";
      row.seed = seed;
      run_one(row, RemapperConfig{}, seed);
    }
    for (Assignment a : spec.assignments)
      for (std::uint32_t p : spec.partition_sizes) {
        RemapperConfig rc = base.remap;
        rc.mode = RemapMode::remap;
        rc.partition_size = p;
        rc.assignment = a;
        rc.schedule = spec.schedule;
        rc.seed = seed;
        rc.switch_cycles = spec.switch_cycles;
        SweepRow row;
        row.partition_size = p;
        row.assignment = assignment_name(a);
        row.seed = seed;
        run_one(row, rc, seed);
      }
  }
  return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << "partition_size,assignment,seed,completion_cycles,spatial_cv,mean_latency,p99_latency\n";
  os.precision(6);
  os << std::fixed;
  for (const auto& r : rows) {
    os << r.partition_size << ',' << r.assignment << ',' << r.seed << ',';
    if (r.ok) os << r.completion_cycles << ',' << r.spatial_cv << ',' << r.mean_latency << ',' << r.p99_latency;
    else os << "error,error,error,error";
    os << '\n';
  }
  return os.str();
}

}  // namespace spmsim
