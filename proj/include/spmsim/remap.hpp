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

// Router remapping between tile inter-group ports and parallel mesh channels.
//
// Port q = tile * channels_per_tile + c. In static mode port q always drives
// channel q. In remap mode ports are split into disjoint blocks of
// partition_size ports and, every cycle, each block is permuted onto itself.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"
#include "spmsim/rng.hpp"
#include "spmsim/topology.hpp"
#include "spmsim/types.hpp"

namespace spmsim {

enum class RemapMode { static_map, remap };
enum class Assignment { contiguous, interleaved, grouping };
enum class Schedule { identity, pseudo_random, true_random };

struct RemapperConfig {
  RemapMode mode = RemapMode::static_map;
  std::uint32_t partition_size = 32;
  Assignment assignment = Assignment::contiguous;
  std::vector<std::vector<std::uint32_t>> grouping;  // explicit blocks for Assignment::grouping
  Schedule schedule = Schedule::pseudo_random;
  std::uint64_t seed = 1;
  Cycle switch_cycles = 1;  // added to inter-group injection in remap mode

  Cycle injection_penalty() const { return mode == RemapMode::remap ? switch_cycles : 0; }

  void validate(std::uint32_t ports) const {
    if (mode == RemapMode::static_map) return;
    const std::uint32_t p = partition_size;
    if (p != 2 && p != 4 && p != 8 && p != 16 && p != 32)
      throw ConfigError("partition_size", "must be one of 2, 4, 8, 16, 32");
    if (ports % p != 0)
      throw ConfigError("partition_size", "must divide the " + std::to_string(ports) + " inter-group ports");
    if (assignment == Assignment::grouping) {
      std::vector<bool> seen(ports, false);
      for (const auto& block : grouping) {
        if (block.size() != p) throw ConfigError("grouping", "every block must hold partition_size ports");
        for (auto q : block) {
          if (q >= ports || seen[q]) throw ConfigError("grouping", "blocks must be disjoint and cover every port");
          seen[q] = true;
        }
      }
      if (grouping.size() * p != ports) throw ConfigError("grouping", "blocks must cover every port");
    }
  }
};

inline const char* assignment_name(Assignment a) {
  switch (a) {
    case Assignment::contiguous: return "contiguous";
    case Assignment::interleaved: return "interleaved";
    case Assignment::grouping: return "grouping";
  }
  return "?";
}

inline const char* schedule_name(Schedule s) {
  switch (s) {
    case Schedule::identity: return "identity";
    case Schedule::pseudo_random: return "pseudo_random";
    case Schedule::true_random: return "true_random";
  }
  return "?";
}

inline Assignment parse_assignment(const std::string& s) {
  if (s == "contiguous" || s == "locality") return Assignment::contiguous;
  if (s == "interleaved") return Assignment::interleaved;
  if (s == "grouping") return Assignment::grouping;
  throw ConfigError("assignment", "expected contiguous, interleaved or grouping");
}

inline RemapMode parse_remap_mode(const std::string& s) {
  if (s == "static") return RemapMode::static_map;
  if (s == "remap") return RemapMode::remap;
  throw ConfigError("mode", "expected 'static' or 'remap'");
}

inline nlohmann::ordered_json to_json(const RemapperConfig& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode == RemapMode::remap ? "remap" : "static";
  j["partition_size"] = r.partition_size;
  j["assignment"] = assignment_name(r.assignment);
  j["grouping"] = r.grouping;
  j["schedule"] = schedule_name(r.schedule);
  j["seed"] = r.seed;
  j["switch_cycles"] = r.switch_cycles;
  return j;
}

inline RemapperConfig remap_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("remap", "expected a JSON object");
  RemapperConfig r;
  for (const auto& [key, v] : j.items()) {
    if (key == "mode") r.mode = parse_remap_mode(detail::json_string(v, key));
    else if (key == "partition_size") r.partition_size = detail::json_uint<std::uint32_t>(v, key);
    else if (key == "assignment") r.assignment = parse_assignment(detail::json_string(v, key));
    else if (key == "grouping") {
      if (!v.is_array()) throw ConfigError(key, "expected a list of port lists");
      r.grouping.clear();
      for (const auto& b : v) {
        if (!b.is_array()) throw ConfigError(key, "expected a list of port lists");
        auto& block = r.grouping.emplace_back();
        for (const auto& q : b) block.push_back(detail::json_uint<std::uint32_t>(q, key));
      }
    } else if (key == "schedule") {
      const auto s = detail::json_string(v, key);
      if (s == "identity") r.schedule = Schedule::identity;
      else if (s == "pseudo_random") r.schedule = Schedule::pseudo_random;
      else if (s == "true_random") r.schedule = Schedule::true_random;
      else throw ConfigError(key, "expected identity, pseudo_random or true_random");
    } else if (key == "seed") r.seed = detail::json_uint<std::uint64_t>(v, key);
    else if (key == "switch_cycles") r.switch_cycles = detail::json_uint<Cycle>(v, key);
    else throw ConfigError(key, "unknown key");
  }
  if (!r.grouping.empty() && !j.contains("assignment")) r.assignment = Assignment::grouping;
  return r;
}

/// Port blocks of the partitioned remapper, each sorted ascending.
inline std::vector<std::vector<std::uint32_t>> partition_blocks(const RemapperConfig& cfg, std::uint32_t ports,
                                                                std::uint32_t channels_per_tile) {
  if (cfg.mode == RemapMode::static_map) {
    std::vector<std::vector<std::uint32_t>> out(ports);
    for (std::uint32_t q = 0; q < ports; ++q) out[q] = {q};
    return out;
  }
  cfg.validate(ports);
  const std::uint32_t p = cfg.partition_size;
  const std::uint32_t nb = ports / p;
  std::vector<std::vector<std::uint32_t>> blocks(nb);
  switch (cfg.assignment) {
    case Assignment::contiguous:
      for (std::uint32_t q = 0; q < ports; ++q) blocks[q / p].push_back(q);
      break;
    case Assignment::interleaved:
      // Spread adjacent tiles over different blocks; a tile's own ports stay
      // together when the block is wide enough to hold them.
      for (std::uint32_t q = 0; q < ports; ++q) {
        const std::uint32_t b = (p % channels_per_tile == 0) ? (q / channels_per_tile) % nb : q % nb;
        blocks[b].push_back(q);
      }
      break;
    case Assignment::grouping:
      blocks = cfg.grouping;
      break;
  }
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  return blocks;
}

/// Per-cycle port-to-channel mapping. Pure in (config, cycle); the last
/// cycle's permutation is cached.
class RemapSchedule {
 public:
  RemapSchedule(RemapperConfig cfg, std::uint32_t ports, std::uint32_t channels_per_tile)
      : cfg_(std::move(cfg)), ports_(ports), blocks_(partition_blocks(cfg_, ports, channels_per_tile)) {
    perm_.resize(ports);
    std::iota(perm_.begin(), perm_.end(), 0u);
  }

  const RemapperConfig& config() const noexcept { return cfg_; }
  const std::vector<std::vector<std::uint32_t>>& blocks() const noexcept { return blocks_; }
  std::uint32_t ports() const noexcept { return ports_; }

  const std::vector<std::uint32_t>& at(Cycle t) {
    if (cached_ && t == cycle_) return perm_;
    cached_ = true;
    cycle_ = t;
    if (cfg_.mode == RemapMode::static_map || cfg_.schedule == Schedule::identity) return perm_;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const auto& members = blocks_[b];
      scratch_.assign(members.begin(), members.end());
      shuffle(scratch_, t, b);
      for (std::size_t i = 0; i < members.size(); ++i) perm_[members[i]] = scratch_[i];
    }
    return perm_;
  }

  std::uint32_t channel(std::uint32_t port, Cycle t) { return at(t)[port]; }

 private:
  void shuffle(std::vector<std::uint32_t>& v, Cycle t, std::size_t block) const {
    if (cfg_.schedule == Schedule::pseudo_random) {
      Rng rng = Rng::keyed(cfg_.seed, {t, block});
      for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[rng.below(i + 1)]);
    } else {
      // Reference "true random" schedule: an unrelated generator family.
      std::seed_seq seq{static_cast<std::uint32_t>(cfg_.seed), static_cast<std::uint32_t>(cfg_.seed >> 32),
                        static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32),
                        static_cast<std::uint32_t>(block)};
      std::mt19937_64 gen(seq);
      for (std::size_t i = v.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(v[i], v[pick(gen)]);
      }
    }
  }

  RemapperConfig cfg_;
  std::uint32_t ports_;
  std::vector<std::vector<std::uint32_t>> blocks_;
  std::vector<std::uint32_t> perm_;
  std::vector<std::uint32_t> scratch_;
  Cycle cycle_ = 0;
  bool cached_ = false;
};

/// remap_assignment(): the permutation in force at `cycle`.
inline std::vector<std::uint32_t> remap_assignment(const RemapperConfig& cfg, std::uint32_t ports,
                                                   std::uint32_t channels_per_tile, Cycle cycle) {
  RemapSchedule s(cfg, ports, channels_per_tile);
  return s.at(cycle);
}

/// Population coefficient of variation, sigma / mu. Zero when all values are zero.
inline double coefficient_of_variation(const std::vector<double>& xs) {
  if (xs.empty()) throw SimError("coefficient of variation of an empty set");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  if (mean == 0.0) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / n) / mean;
}

inline double population_variance(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / n;
}

}  // namespace spmsim
