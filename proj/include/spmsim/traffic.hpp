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

// Synthetic traffic patterns and the CSV trace format.
//
// Every generated operation is a pure function of (seed, pe, step): the
// stream for one step is Rng::keyed(seed, {pe, step}) and draws are taken in
// a fixed order (kind, dependence, address).

#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "spmsim/request.hpp"
#include "spmsim/rng.hpp"
#include "spmsim/topology.hpp"
#include "spmsim/types.hpp"

namespace spmsim {

enum class Pattern { uniform, local_tile, local_group, hotspot, strided, bursty, trace };

inline const char* pattern_name(Pattern p) {
  switch (p) {
    case Pattern::uniform: return "uniform";
    case Pattern::local_tile: return "local_tile";
    case Pattern::local_group: return "local_group";
    case Pattern::hotspot: return "hotspot";
    case Pattern::strided: return "strided";
    case Pattern::bursty: return "bursty";
    case Pattern::trace: return "trace";
  }
  return "?";
}

inline std::optional<Pattern> parse_pattern(std::string_view s) {
  for (Pattern p : {Pattern::uniform, Pattern::local_tile, Pattern::local_group, Pattern::hotspot, Pattern::strided,
                    Pattern::bursty, Pattern::trace})
    if (s == pattern_name(p)) return p;
  return std::nullopt;
}

/// One memory operation as the PE sees it before issue.
struct Op {
  OpKind kind = OpKind::read;
  std::uint32_t addr = 0;
  std::uint32_t size = kWordBytes;
  Cycle ready_at = 0;   // earliest issue cycle (trace timestamps)
  Cycle gap = 0;        // extra idle cycles after the previous issue
  bool dependent = false;  // waits for the previous operation's response

  friend bool operator==(const Op&, const Op&) = default;
};

struct WorkloadSpec {
  Pattern pattern = Pattern::uniform;
  std::uint32_t requests_per_pe = 100;
  std::uint64_t total_requests = 0;  // when non-zero, spread over active PEs instead
  double read_fraction = 0.75;       // among non-atomic operations
  double atomic_fraction = 0.0;
  std::uint32_t size_bytes = kWordBytes;
  Cycle think_cycles = 0;
  double dependent_fraction = 0.0;
  std::uint32_t barrier_interval = 0;  // 0 = no barriers
  std::uint32_t max_outstanding = 8;
  std::vector<std::uint32_t> source_tiles;  // active tile ids within each group; empty = all
  std::vector<std::uint32_t> hot_groups{0, 1, 2, 3};
  double skew = 0.8;
  std::uint64_t stride = 1;  // words
  std::uint32_t burst_length = 8;
  Cycle burst_gap = 32;
  std::uint64_t phase_offset = 0;  // per-PE word offset of the address sequence
  std::uint64_t region_base = 0;   // words
  std::uint64_t region_words = 0;  // 0 = all of L1
  std::string trace_path;

  void validate(const TopologyConfig& topo) const {
    if (size_bytes < 1) throw ConfigError("size_bytes", "must be >= 1");
    if (max_outstanding < 1) throw ConfigError("max_outstanding", "must be >= 1");
    if (read_fraction < 0 || read_fraction > 1) throw ConfigError("read_fraction", "expected a value in [0, 1]");
    if (atomic_fraction < 0 || atomic_fraction > 1) throw ConfigError("atomic_fraction", "expected a value in [0, 1]");
    if (dependent_fraction < 0 || dependent_fraction > 1)
      throw ConfigError("dependent_fraction", "expected a value in [0, 1]");
    if (skew < 0 || skew > 1) throw ConfigError("skew", "expected a value in [0, 1]");
    if (burst_length < 1) throw ConfigError("burst_length", "must be >= 1");
    for (auto t : source_tiles)
      if (t >= topo.tiles_per_group) throw ConfigError("source_tiles", "tile id out of range");
    if (pattern == Pattern::hotspot) {
      if (hot_groups.empty()) throw ConfigError("hot_groups", "must not be empty");
      for (auto g : hot_groups)
        if (g >= topo.groups()) throw ConfigError("hot_groups", "group id out of range");
      if (hot_groups.size() >= topo.groups() && skew < 1.0)
        throw ConfigError("hot_groups", "needs at least one group outside the hot set when skew < 1");
    }
    const std::uint64_t words = topo.l1_words();
    if (region_base >= words) throw ConfigError("region_base", "outside L1");
    if (region_words != 0 && region_base + region_words > words) throw ConfigError("region_words", "exceeds L1");
    const std::uint64_t span = static_cast<std::uint64_t>(ceil_div(size_bytes, kWordBytes));
    if (span > topo.words_per_bank()) throw ConfigError("size_bytes", "burst larger than a bank");
    if (pattern == Pattern::trace && trace_path.empty()) throw ConfigError("trace", "trace pattern needs a file");
  }
};

inline nlohmann::ordered_json to_json(const WorkloadSpec& w) {
  nlohmann::ordered_json j;
  j["pattern"] = pattern_name(w.pattern);
  j["requests_per_pe"] = w.requests_per_pe;
  j["total_requests"] = w.total_requests;
  j["read_fraction"] = w.read_fraction;
  j["atomic_fraction"] = w.atomic_fraction;
  j["size_bytes"] = w.size_bytes;
  j["think_cycles"] = w.think_cycles;
  j["dependent_fraction"] = w.dependent_fraction;
  j["barrier_interval"] = w.barrier_interval;
  j["max_outstanding"] = w.max_outstanding;
  j["source_tiles"] = w.source_tiles;
  j["hot_groups"] = w.hot_groups;
  j["skew"] = w.skew;
  j["stride"] = w.stride;
  j["burst_length"] = w.burst_length;
  j["burst_gap"] = w.burst_gap;
  j["phase_offset"] = w.phase_offset;
  j["region_base"] = w.region_base;
  j["region_words"] = w.region_words;
  j["trace"] = w.trace_path;
  return j;
}

inline WorkloadSpec workload_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("workload", "expected a JSON object");
  WorkloadSpec w;
  auto uint_list = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError(key, "expected an array of integers");
    std::vector<std::uint32_t> out;
    for (const auto& e : v) out.push_back(detail::json_uint<std::uint32_t>(e, key));
    return out;
  };
  for (const auto& [key, v] : j.items()) {
    using detail::json_fraction;
    using detail::json_uint;
    if (key == "pattern") {
      auto p = parse_pattern(detail::json_string(v, key));
      if (!p) throw ConfigError(key, "unknown pattern '" + v.get<std::string>() + "'");
      w.pattern = *p;
    } else if (key == "requests_per_pe") w.requests_per_pe = json_uint<std::uint32_t>(v, key);
    else if (key == "total_requests") w.total_requests = json_uint<std::uint64_t>(v, key);
    else if (key == "read_fraction") w.read_fraction = json_fraction(v, key);
    else if (key == "atomic_fraction") w.atomic_fraction = json_fraction(v, key);
    else if (key == "size_bytes") w.size_bytes = json_uint<std::uint32_t>(v, key);
    else if (key == "think_cycles") w.think_cycles = json_uint<Cycle>(v, key);
    else if (key == "dependent_fraction") w.dependent_fraction = json_fraction(v, key);
    else if (key == "barrier_interval") w.barrier_interval = json_uint<std::uint32_t>(v, key);
    else if (key == "max_outstanding") w.max_outstanding = json_uint<std::uint32_t>(v, key);
    else if (key == "source_tiles") w.source_tiles = uint_list(v, key);
    else if (key == "hot_groups") w.hot_groups = uint_list(v, key);
    else if (key == "skew") w.skew = json_fraction(v, key);
    else if (key == "stride") w.stride = json_uint<std::uint64_t>(v, key);
    else if (key == "burst_length") w.burst_length = json_uint<std::uint32_t>(v, key);
    else if (key == "burst_gap") w.burst_gap = json_uint<Cycle>(v, key);
    else if (key == "phase_offset") w.phase_offset = json_uint<std::uint64_t>(v, key);
    else if (key == "region_base") w.region_base = json_uint<std::uint64_t>(v, key);
    else if (key == "region_words") w.region_words = json_uint<std::uint64_t>(v, key);
    else if (key == "trace") w.trace_path = detail::json_string(v, key);
    else throw ConfigError(key, "unknown key");
  }
  if (!w.trace_path.empty()) w.pattern = Pattern::trace;
  return w;
}

// --- trace files -------------------------------------------------------------

struct TraceEntry {
  Cycle ready_cycle = 0;
  std::uint32_t pe = 0;
  OpKind kind = OpKind::read;
  std::uint32_t addr = 0;
  std::uint32_t size = kWordBytes;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out, int base = 10) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out, base);
  return ec == std::errc() && p == s.data() + s.size();
}

}  // namespace detail

inline constexpr std::string_view kTraceHeader = "ready_cycle,pe_id,op,address,size_bytes";

/// Parses the CSV trace format. Every problem is reported with its line number.
inline std::vector<TraceEntry> parse_trace(std::istream& in, const TopologyConfig& topo) {
  std::vector<TraceEntry> out;
  const AddressMap map(topo);
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (!header_seen) {
      std::string joined;
      for (std::size_t i = 0; i < f.size(); ++i) joined += (i ? "," : "") + std::string(f[i]);
      if (joined != kTraceHeader) throw TraceParseError(line_no, "expected header '" + std::string(kTraceHeader) + "'");
      header_seen = true;
      continue;
    }
    if (f.size() != 5) throw TraceParseError(line_no, "expected 5 fields, got " + std::to_string(f.size()));
    TraceEntry e;
    if (!detail::parse_number(f[0], e.ready_cycle)) throw TraceParseError(line_no, "bad ready_cycle");
    if (!detail::parse_number(f[1], e.pe)) throw TraceParseError(line_no, "bad pe_id");
    if (e.pe >= topo.total_pes()) throw TraceParseError(line_no, "pe_id out of range");
    if (f[2] == "R") e.kind = OpKind::read;
    else if (f[2] == "W") e.kind = OpKind::write;
    else if (f[2] == "A") e.kind = OpKind::atomic;
    else throw TraceParseError(line_no, "op must be R, W or A");
    std::string_view a = f[3];
    if (a.size() < 3 || a[0] != '0' || (a[1] != 'x' && a[1] != 'X'))
      throw TraceParseError(line_no, "address must be hexadecimal with a 0x prefix");
    std::uint64_t addr = 0;
    if (!detail::parse_number(a.substr(2), addr, 16)) throw TraceParseError(line_no, "bad address");
    if (!map.contains(addr)) throw TraceParseError(line_no, "address outside L1");
    if (addr % kWordBytes != 0) throw TraceParseError(line_no, "address not word-aligned");
    e.addr = static_cast<std::uint32_t>(addr);
    if (!detail::parse_number(f[4], e.size) || e.size < 1) throw TraceParseError(line_no, "bad size_bytes");
    if (ceil_div(e.size, kWordBytes) > topo.words_per_bank() - map.map(addr).offset)
      throw TraceParseError(line_no, "burst runs past the end of its bank");
    out.push_back(e);
  }
  if (!header_seen) throw TraceParseError(line_no, "missing header");
  return out;
}

inline std::vector<TraceEntry> load_trace(const std::string& path, const TopologyConfig& topo) {
  std::ifstream in(path);
  if (!in) throw ConfigError("trace", "cannot open '" + path + "'");
  return parse_trace(in, topo);
}

inline void write_trace(std::ostream& out, const std::vector<TraceEntry>& entries) {
  out << kTraceHeader << '\n';
  for (const auto& e : entries)
    out << e.ready_cycle << ',' << e.pe << ',' << op_letter(e.kind) << ",0x" << UnmappedAddressError::to_hex(e.addr)
        << ',' << e.size << '\n';
}

// --- generation --------------------------------------------------------------

inline bool pe_active(const WorkloadSpec& w, const TopologyConfig& topo, std::uint32_t pe) {
  if (w.source_tiles.empty()) return true;
  const auto tile = pe_coord(topo, pe).tile;
  return std::find(w.source_tiles.begin(), w.source_tiles.end(), tile) != w.source_tiles.end();
}

/// Number of operations PE `pe` issues (synthetic patterns).
inline std::uint64_t request_count(const WorkloadSpec& w, const TopologyConfig& topo, std::uint32_t pe) {
  if (!pe_active(w, topo, pe)) return 0;
  if (w.total_requests == 0) return w.requests_per_pe;
  std::uint64_t active = 0, rank = 0;
  for (std::uint32_t p = 0; p < topo.total_pes(); ++p) {
    if (!pe_active(w, topo, p)) continue;
    if (p < pe) ++rank;
    ++active;
  }
  return w.total_requests / active + (rank < w.total_requests % active ? 1 : 0);
}

/// The operation PE `pe` issues at `step` (synthetic patterns only).
inline Op next_request(const WorkloadSpec& w, const TopologyConfig& topo, std::uint32_t pe, std::uint64_t step,
                       std::uint64_t seed) {
  Rng rng = Rng::keyed(seed, {pe, step});
  Op op;
  op.size = w.size_bytes;
  const double uk = rng.unit();
  if (uk < w.atomic_fraction) op.kind = OpKind::atomic;
  else if ((uk - w.atomic_fraction) < w.read_fraction * (1.0 - w.atomic_fraction)) op.kind = OpKind::read;
  else op.kind = OpKind::write;
  const double ud = rng.unit();
  op.dependent = step > 0 && ud < w.dependent_fraction;
  op.gap = step > 0 ? w.think_cycles : 0;

  const AddressMap map(topo);
  const std::uint64_t words = topo.l1_words();
  const std::uint64_t region = w.region_words ? w.region_words : words - w.region_base;
  // Keep bursts inside one bank row: the start word offset must leave room.
  const std::uint32_t span = static_cast<std::uint32_t>(ceil_div(w.size_bytes, kWordBytes));
  const std::uint32_t max_offset = topo.words_per_bank() - span;
  const PeCoord me = pe_coord(topo, pe);
  Location loc;
  std::uint64_t word = 0;
  bool by_location = true;
  switch (w.pattern) {
    case Pattern::uniform:
      word = w.region_base + rng.below(region);
      by_location = false;
      break;
    case Pattern::local_tile:
      loc = {me.group, me.tile, static_cast<std::uint32_t>(rng.below(topo.banks_per_tile)),
             static_cast<std::uint32_t>(rng.below(max_offset + 1))};
      break;
    case Pattern::local_group:
      loc.group = me.group;
      loc.tile = static_cast<std::uint32_t>(rng.below(topo.tiles_per_group));
      loc.bank = static_cast<std::uint32_t>(rng.below(topo.banks_per_tile));
      loc.offset = static_cast<std::uint32_t>(rng.below(max_offset + 1));
      break;
    case Pattern::hotspot: {
      if (rng.unit() < w.skew) {
        loc.group = w.hot_groups[rng.below(w.hot_groups.size())];
      } else {
        const std::uint64_t cold = topo.groups() - w.hot_groups.size();
        std::uint64_t pick = rng.below(cold);
        for (std::uint32_t g = 0; g < topo.groups(); ++g) {
          if (std::find(w.hot_groups.begin(), w.hot_groups.end(), g) != w.hot_groups.end()) continue;
          if (pick-- == 0) {
            loc.group = g;
            break;
          }
        }
      }
      loc.tile = static_cast<std::uint32_t>(rng.below(topo.tiles_per_group));
      loc.bank = static_cast<std::uint32_t>(rng.below(topo.banks_per_tile));
      loc.offset = static_cast<std::uint32_t>(rng.below(max_offset + 1));
      break;
    }
    case Pattern::strided:
      word = w.region_base + (pe * w.phase_offset + step * w.stride) % region;
      by_location = false;
      break;
    case Pattern::bursty:
      if (step > 0 && step % w.burst_length == 0) op.gap += w.burst_gap;
      word = w.region_base + (pe * w.phase_offset + step * w.stride) % region;
      by_location = false;
      break;
    case Pattern::trace:
      throw ConfigError("pattern", "trace operations come from the trace file");
  }
  std::uint64_t addr = by_location ? map.unmap(loc) : word * kWordBytes;
  if (!by_location) {
    // Pull bursts back so they do not spill into the next bank row.
    Location l = map.map(addr);
    if (l.offset > max_offset) {
      l.offset = max_offset;
      addr = map.unmap(l);
    }
  }
  op.addr = static_cast<std::uint32_t>(addr);
  return op;
}

/// Operation lists for every PE.
inline std::vector<std::vector<Op>> generate_ops(const WorkloadSpec& w, const TopologyConfig& topo,
                                                 std::uint64_t seed) {
  w.validate(topo);
  std::vector<std::vector<Op>> ops(topo.total_pes());
  if (w.pattern == Pattern::trace) {
    auto entries = load_trace(w.trace_path, topo);
    std::stable_sort(entries.begin(), entries.end(),
                     [](const TraceEntry& a, const TraceEntry& b) { return a.ready_cycle < b.ready_cycle; });
    for (const auto& e : entries) ops[e.pe].push_back(Op{e.kind, e.addr, e.size, e.ready_cycle, 0, false});
    return ops;
  }
  for (std::uint32_t pe = 0; pe < topo.total_pes(); ++pe) {
    const std::uint64_t n = request_count(w, topo, pe);
    ops[pe].reserve(n);
    for (std::uint64_t s = 0; s < n; ++s) ops[pe].push_back(next_request(w, topo, pe, s, seed));
  }
  return ops;
}

/// Built-in workloads selectable by name on the command line.
inline std::optional<WorkloadSpec> named_workload(std::string_view name) {
  auto p = parse_pattern(name);
  if (!p || *p == Pattern::trace) return std::nullopt;
  WorkloadSpec w;
  w.pattern = *p;
  return w;
}

inline WorkloadSpec load_workload(const std::string& ref) {
  if (auto w = named_workload(ref)) return *w;
  if (ref.size() > 4 && ref.substr(ref.size() - 4) == ".csv") {
    WorkloadSpec w;
    w.pattern = Pattern::trace;
    w.trace_path = ref;
    return w;
  }
  return workload_from_json(detail::parse_json_file(ref));
}

}  // namespace spmsim
