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

// Shared fixtures for the unit and acceptance tests.

#pragma once

#include <cstdint>
#include <iterator>
#include <string>
#include <vector>

#include "spmsim/spmsim.hpp"

namespace spmsim::testing {

/// 2x2 groups, 2 tiles/group, 2 PEs and 4 banks per tile. Small enough for
/// the per-cycle reference to finish in milliseconds.
inline TopologyConfig small_topology() {
  TopologyConfig t;
  t.pes_per_tile = 2;
  t.banks_per_tile = 4;
  t.bank_bytes = 256;
  t.tiles_per_group = 2;
  t.mesh_x = 2;
  t.mesh_y = 2;
  t.channels_per_tile = 2;
  t.intra_group_ports_per_tile = 2;
  return t;
}

/// Sink that accepts everything and remembers what arrived when.
class RecordingSink final : public RequestSink {
 public:
  struct Arrival {
    int port;
    Request* req;
    Cycle ready;
    Cycle now;
  };

  bool can_accept(int, Cycle) const override { return open; }
  void accept(int port, Request& r, Cycle ready, Cycle now) override { arrivals.push_back({port, &r, ready, now}); }

  bool open = true;
  std::vector<Arrival> arrivals;
};

/// Hand-rolled scenario generator for property tests: every draw comes from
/// one keyed stream, so a failing case is reproduced by its index alone.
class ScenarioGen {
 public:
  explicit ScenarioGen(std::uint64_t seed) : rng_(seed) {}

  std::uint64_t pick(std::uint64_t n) { return rng_.below(n); }
  double unit() { return rng_.unit(); }

  Scenario small(std::uint64_t requests) {
    Scenario s;
    s.topology = small_topology();
    static constexpr Pattern kPatterns[] = {Pattern::uniform,  Pattern::local_tile, Pattern::local_group,
                                            Pattern::hotspot,  Pattern::strided,    Pattern::bursty};
    WorkloadSpec& w = s.workload;
    w.pattern = kPatterns[pick(std::size(kPatterns))];
    w.total_requests = requests;
    w.read_fraction = unit();
    w.atomic_fraction = pick(3) == 0 ? 0.2 * unit() : 0.0;
    w.size_bytes = pick(4) == 0 ? 16u : 4u;
    w.think_cycles = pick(3);
    w.dependent_fraction = pick(2) ? 0.3 * unit() : 0.0;
    w.barrier_interval = pick(3) == 0 ? static_cast<std::uint32_t>(8 + pick(24)) : 0;
    w.max_outstanding = static_cast<std::uint32_t>(1 + pick(8));
    w.hot_groups = {static_cast<std::uint32_t>(pick(4))};
    w.skew = 0.5 + 0.5 * unit();
    w.stride = 1 + pick(5);
    w.burst_length = static_cast<std::uint32_t>(2 + pick(8));
    w.burst_gap = 4 + pick(24);
    w.phase_offset = pick(2) ? pick(16) : 0;
    if (pick(2)) {
      s.remap.mode = RemapMode::remap;
      static constexpr std::uint32_t kSizes[] = {2, 4};
      s.remap.partition_size = kSizes[pick(2)];
      s.remap.assignment = pick(2) ? Assignment::interleaved : Assignment::contiguous;
      s.remap.schedule = pick(4) == 0 ? Schedule::true_random : Schedule::pseudo_random;
      s.remap.seed = 1 + pick(1000);
    }
    s.seed = 1 + pick(1'000'000);
    return s;
  }

 private:
  Rng rng_;
};

inline std::string describe(const Scenario& s) {
  return std::string(pattern_name(s.workload.pattern)) + " seed=" + std::to_string(s.seed) +
         " remap=" + (s.remap.mode == RemapMode::remap ? std::to_string(s.remap.partition_size) : "static");
}

}  // namespace spmsim::testing
