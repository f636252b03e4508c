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

// Cluster hierarchy (Tile / Group / Cluster), the word-interleaved address
// map, path classification and the analytic zero-load latency model.

#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spmsim/request.hpp"
#include "spmsim/router.hpp"
#include "spmsim/types.hpp"

namespace spmsim {

/// Address bit-field that varies fastest first.
enum class InterleaveDim : std::uint8_t { bank, tile, group };

struct TopologyConfig {
  std::uint32_t pes_per_tile = 4;
  std::uint32_t banks_per_tile = 16;
  std::uint32_t bank_bytes = 1024;
  std::uint32_t tiles_per_group = 16;
  std::uint32_t mesh_x = 4;
  std::uint32_t mesh_y = 4;
  std::uint32_t channels_per_tile = 2;           // inter-group ports per tile
  std::uint32_t intra_group_ports_per_tile = 1;

  // Timing. Inter-group one-way zero-load latency is
  //   mesh_overhead_cycles + mesh_hop_cycles * hops,
  // where the overhead is split into tile egress + mesh ejection + tile crossbar.
  Cycle tile_xbar_cycles = 1;
  Cycle tile_egress_cycles = 1;
  Cycle group_xbar_cycles = 1;
  Cycle mesh_hop_cycles = 4;
  Cycle mesh_overhead_cycles = 3;
  Cycle bank_service_cycles = 1;
  Cycle atomic_extra_cycles = 1;

  std::uint32_t bandwidth = 4;  // bytes/cycle on every link (32-bit channels)
  std::uint32_t queue_capacity = 2;
  RrUpdate rr_update = RrUpdate::on_grant;
  std::array<InterleaveDim, 3> interleave{InterleaveDim::bank, InterleaveDim::tile, InterleaveDim::group};

  std::uint32_t groups() const { return mesh_x * mesh_y; }
  std::uint32_t tiles() const { return tiles_per_group * groups(); }
  std::uint32_t pes_per_group() const { return pes_per_tile * tiles_per_group; }
  std::uint32_t total_pes() const { return pes_per_tile * tiles(); }
  std::uint32_t total_banks() const { return banks_per_tile * tiles(); }
  std::uint32_t words_per_bank() const { return bank_bytes / kWordBytes; }
  std::uint64_t l1_bytes() const { return static_cast<std::uint64_t>(bank_bytes) * total_banks(); }
  std::uint64_t l1_words() const { return l1_bytes() / kWordBytes; }
  std::uint32_t channels() const { return channels_per_tile * tiles_per_group; }  // parallel mesh instances
  std::uint32_t noc_instances() const { return channels(); }  // per direction (request / response)
  Cycle mesh_eject_cycles() const { return mesh_overhead_cycles - tile_egress_cycles - tile_xbar_cycles; }

  void validate() const {
    auto positive = [](std::uint64_t v, const char* f) {
      if (v < 1) throw ConfigError(f, "must be >= 1");
    };
    positive(pes_per_tile, "pes_per_tile");
    positive(banks_per_tile, "banks_per_tile");
    positive(bank_bytes, "bank_bytes");
    positive(tiles_per_group, "tiles_per_group");
    positive(mesh_x, "mesh_x");
    positive(mesh_y, "mesh_y");
    positive(channels_per_tile, "channels_per_tile");
    positive(intra_group_ports_per_tile, "intra_group_ports_per_tile");
    positive(tile_xbar_cycles, "tile_xbar_cycles");
    positive(tile_egress_cycles, "tile_egress_cycles");
    positive(group_xbar_cycles, "group_xbar_cycles");
    positive(mesh_hop_cycles, "mesh_hop_cycles");
    positive(bank_service_cycles, "bank_service_cycles");
    positive(bandwidth, "bandwidth");
    positive(queue_capacity, "queue_capacity");
    if (bank_bytes % kWordBytes != 0) throw ConfigError("bank_bytes", "must be a multiple of the 4-byte word");
    if (mesh_overhead_cycles < tile_egress_cycles + tile_xbar_cycles + 1)
      throw ConfigError("mesh_overhead_cycles",
                        "must cover tile egress + tile crossbar + at least one ejection cycle");
    const bool perm = interleave[0] != interleave[1] && interleave[1] != interleave[2] && interleave[0] != interleave[2];
    if (!perm) throw ConfigError("interleave", "must list bank, tile and group exactly once");
    if (l1_bytes() > (std::uint64_t{1} << 32)) throw ConfigError("bank_bytes", "L1 exceeds the 32-bit address space");
  }
};

inline const char* dim_name(InterleaveDim d) {
  switch (d) {
    case InterleaveDim::bank: return "bank";
    case InterleaveDim::tile: return "tile";
    case InterleaveDim::group: return "group";
  }
  return "?";
}

inline nlohmann::ordered_json to_json(const TopologyConfig& c) {
  nlohmann::ordered_json j;
  j["pes_per_tile"] = c.pes_per_tile;
  j["banks_per_tile"] = c.banks_per_tile;
  j["bank_bytes"] = c.bank_bytes;
  j["tiles_per_group"] = c.tiles_per_group;
  j["mesh_x"] = c.mesh_x;
  j["mesh_y"] = c.mesh_y;
  j["channels_per_tile"] = c.channels_per_tile;
  j["intra_group_ports_per_tile"] = c.intra_group_ports_per_tile;
  j["tile_xbar_cycles"] = c.tile_xbar_cycles;
  j["tile_egress_cycles"] = c.tile_egress_cycles;
  j["group_xbar_cycles"] = c.group_xbar_cycles;
  j["mesh_hop_cycles"] = c.mesh_hop_cycles;
  j["mesh_overhead_cycles"] = c.mesh_overhead_cycles;
  j["bank_service_cycles"] = c.bank_service_cycles;
  j["atomic_extra_cycles"] = c.atomic_extra_cycles;
  j["bandwidth"] = c.bandwidth;
  j["queue_capacity"] = c.queue_capacity;
  j["rr_update"] = c.rr_update == RrUpdate::on_grant ? "on_grant" : "per_cycle";
  j["interleave"] = {dim_name(c.interleave[0]), dim_name(c.interleave[1]), dim_name(c.interleave[2])};
  return j;
}

namespace detail {

template <class T>
T json_uint(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError(field, "expected a non-negative integer");
  return static_cast<T>(v.get<std::uint64_t>());
}

inline double json_fraction(const nlohmann::json& v, const std::string& field) {
  if (!v.is_number()) throw ConfigError(field, "expected a number");
  const double d = v.get<double>();
  if (d < 0.0 || d > 1.0) throw ConfigError(field, "expected a value in [0, 1]");
  return d;
}

inline std::string json_string(const nlohmann::json& v, const std::string& field) {
  if (!v.is_string()) throw ConfigError(field, "expected a string");
  return v.get<std::string>();
}

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  try {
    return nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace detail

/// Parses a topology document. Field names mirror TopologyConfig; unknown keys
/// are rejected. `noc_instances` may be given but must match the derived value.
inline TopologyConfig topology_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("topology", "expected a JSON object");
  TopologyConfig c;
  std::uint64_t noc_instances = 0;
  for (const auto& [key, v] : j.items()) {
    using detail::json_uint;
    if (key == "pes_per_tile") c.pes_per_tile = json_uint<std::uint32_t>(v, key);
    else if (key == "banks_per_tile") c.banks_per_tile = json_uint<std::uint32_t>(v, key);
    else if (key == "bank_bytes") c.bank_bytes = json_uint<std::uint32_t>(v, key);
    else if (key == "tiles_per_group") c.tiles_per_group = json_uint<std::uint32_t>(v, key);
    else if (key == "mesh_x") c.mesh_x = json_uint<std::uint32_t>(v, key);
    else if (key == "mesh_y") c.mesh_y = json_uint<std::uint32_t>(v, key);
    else if (key == "channels_per_tile") c.channels_per_tile = json_uint<std::uint32_t>(v, key);
    else if (key == "intra_group_ports_per_tile") c.intra_group_ports_per_tile = json_uint<std::uint32_t>(v, key);
    else if (key == "noc_instances") noc_instances = json_uint<std::uint64_t>(v, key);
    else if (key == "tile_xbar_cycles") c.tile_xbar_cycles = json_uint<Cycle>(v, key);
    else if (key == "tile_egress_cycles") c.tile_egress_cycles = json_uint<Cycle>(v, key);
    else if (key == "group_xbar_cycles") c.group_xbar_cycles = json_uint<Cycle>(v, key);
    else if (key == "mesh_hop_cycles") c.mesh_hop_cycles = json_uint<Cycle>(v, key);
    else if (key == "mesh_overhead_cycles") c.mesh_overhead_cycles = json_uint<Cycle>(v, key);
    else if (key == "bank_service_cycles") c.bank_service_cycles = json_uint<Cycle>(v, key);
    else if (key == "atomic_extra_cycles") c.atomic_extra_cycles = json_uint<Cycle>(v, key);
    else if (key == "bandwidth") c.bandwidth = json_uint<std::uint32_t>(v, key);
    else if (key == "queue_capacity") c.queue_capacity = json_uint<std::uint32_t>(v, key);
    else if (key == "rr_update") {
      const auto s = detail::json_string(v, key);
      if (s == "on_grant") c.rr_update = RrUpdate::on_grant;
      else if (s == "per_cycle") c.rr_update = RrUpdate::per_cycle;
      else throw ConfigError(key, "expected 'on_grant' or 'per_cycle'");
    } else if (key == "interleave") {
      if (!v.is_array() || v.size() != 3) throw ConfigError(key, "expected [\"bank\",\"tile\",\"group\"] in some order");
      for (std::size_t i = 0; i < 3; ++i) {
        const auto s = detail::json_string(v[i], key);
        if (s == "bank") c.interleave[i] = InterleaveDim::bank;
        else if (s == "tile") c.interleave[i] = InterleaveDim::tile;
        else if (s == "group") c.interleave[i] = InterleaveDim::group;
        else throw ConfigError(key, "unknown dimension '" + s + "'");
      }
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  c.validate();
  if (noc_instances != 0 && noc_instances != c.noc_instances())
    throw ConfigError("noc_instances", "must equal tiles_per_group * channels_per_tile = " +
                                           std::to_string(c.noc_instances()));
  return c;
}

inline TopologyConfig load_topology(const std::string& path) {
  return topology_from_json(detail::parse_json_file(path));
}

struct Location {
  std::uint32_t group = 0;
  std::uint32_t tile = 0;  // within the group
  std::uint32_t bank = 0;  // within the tile
  std::uint32_t offset = 0;  // word offset within the bank

  friend bool operator==(const Location&, const Location&) = default;
};

/// Word-interleaved mapping between byte addresses and bank locations.
/// With the default order (bank fastest): w = addr/4,
///   bank = w mod B, tile = (w / B) mod T, group = (w / (B*T)) mod G,
///   offset = w / (B*T*G).
class AddressMap {
 public:
  explicit AddressMap(const TopologyConfig& c)
      : order_(c.interleave),
        banks_(c.banks_per_tile),
        tiles_(c.tiles_per_group),
        groups_(c.groups()),
        l1_bytes_(c.l1_bytes()) {}

  std::uint64_t l1_bytes() const noexcept { return l1_bytes_; }
  std::uint32_t total_banks() const noexcept { return banks_ * tiles_ * groups_; }

  bool contains(std::uint64_t addr) const noexcept { return addr < l1_bytes_; }

  Location map(std::uint64_t addr) const {
    if (!contains(addr)) throw UnmappedAddressError(addr);
    std::uint64_t w = addr / kWordBytes;
    Location loc;
    for (InterleaveDim d : order_) {
      const std::uint32_t n = extent(d);
      const auto v = static_cast<std::uint32_t>(w % n);
      w /= n;
      field(loc, d) = v;
    }
    loc.offset = static_cast<std::uint32_t>(w);
    return loc;
  }

  std::uint64_t unmap(const Location& loc) const {
    std::uint64_t w = loc.offset;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const std::uint32_t v = field(const_cast<Location&>(loc), *it);
      w = w * extent(*it) + v;
    }
    return w * kWordBytes;
  }

 private:
  std::uint32_t extent(InterleaveDim d) const {
    switch (d) {
      case InterleaveDim::bank: return banks_;
      case InterleaveDim::tile: return tiles_;
      case InterleaveDim::group: return groups_;
    }
    return 1;
  }
  static std::uint32_t& field(Location& l, InterleaveDim d) {
    switch (d) {
      case InterleaveDim::bank: return l.bank;
      case InterleaveDim::tile: return l.tile;
      case InterleaveDim::group: return l.group;
    }
    return l.bank;
  }

  std::array<InterleaveDim, 3> order_;
  std::uint32_t banks_, tiles_, groups_;
  std::uint64_t l1_bytes_;
};

// --- mesh ------------------------------------------------------------------

/// Mesh directions; north is +y.
enum Direction : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3, kLocal = 4 };

constexpr int opposite(int d) { return (d + 2) % 4; }

struct MeshCoord {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  friend bool operator==(const MeshCoord&, const MeshCoord&) = default;
};

inline MeshCoord group_coord(const TopologyConfig& c, std::uint32_t g) { return {g % c.mesh_x, g / c.mesh_x}; }
inline std::uint32_t group_at(const TopologyConfig& c, MeshCoord m) { return m.y * c.mesh_x + m.x; }

inline std::uint32_t manhattan(MeshCoord a, MeshCoord b) {
  const auto dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const auto dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx + dy;
}

/// Dimension-order routing: resolve X first, then Y. kLocal at the destination.
inline int xy_route(MeshCoord here, MeshCoord dest) {
  if (dest.x > here.x) return kEast;
  if (dest.x < here.x) return kWest;
  if (dest.y > here.y) return kNorth;
  if (dest.y < here.y) return kSouth;
  return kLocal;
}

inline MeshCoord step(MeshCoord m, int dir) {
  switch (dir) {
    case kNorth: return {m.x, m.y + 1};
    case kEast: return {m.x + 1, m.y};
    case kSouth: return {m.x, m.y - 1};
    case kWest: return {m.x - 1, m.y};
    default: return m;
  }
}

/// One-way request-network latency between two distinct groups with no contention.
inline Cycle zero_load_latency(std::uint32_t src, std::uint32_t dst, const TopologyConfig& c) {
  return c.mesh_overhead_cycles + c.mesh_hop_cycles * manhattan(group_coord(c, src), group_coord(c, dst));
}

// --- path classification -----------------------------------------------------

enum class PathClass { intra_tile, intra_group, inter_group };

inline const char* path_class_name(PathClass p) {
  switch (p) {
    case PathClass::intra_tile: return "intra-tile";
    case PathClass::intra_group: return "intra-group";
    case PathClass::inter_group: return "inter-group";
  }
  return "?";
}

struct PeCoord {
  std::uint32_t group = 0;
  std::uint32_t tile = 0;   // within the group
  std::uint32_t local = 0;  // within the tile
};

inline PeCoord pe_coord(const TopologyConfig& c, std::uint32_t pe) {
  return {pe / c.pes_per_group(), (pe / c.pes_per_tile) % c.tiles_per_group, pe % c.pes_per_tile};
}

inline std::uint32_t pe_index(const TopologyConfig& c, PeCoord p) {
  return (p.group * c.tiles_per_group + p.tile) * c.pes_per_tile + p.local;
}

struct PathDescriptor {
  PathClass cls = PathClass::intra_tile;
  std::uint32_t hops = 0;  // Manhattan distance in groups
  std::vector<std::string> components;  // request-network component sequence
};

inline PathDescriptor classify_path(const TopologyConfig& c, std::uint32_t pe, std::uint64_t addr) {
  const AddressMap map(c);
  const Location loc = map.map(addr);
  const PeCoord src = pe_coord(c, pe);
  PathDescriptor d;
  const std::string dst_tile = "g" + std::to_string(loc.group) + ".t" + std::to_string(loc.tile);
  const std::string bank = dst_tile + ".bank" + std::to_string(loc.bank);
  if (loc.group == src.group && loc.tile == src.tile) {
    d.cls = PathClass::intra_tile;
    d.components = {dst_tile + ".xbar", bank};
  } else if (loc.group == src.group) {
    d.cls = PathClass::intra_group;
    const std::string src_tile = "g" + std::to_string(src.group) + ".t" + std::to_string(src.tile);
    d.components = {src_tile + ".egress", "g" + std::to_string(src.group) + ".gxbar", dst_tile + ".xbar", bank};
  } else {
    d.cls = PathClass::inter_group;
    d.hops = manhattan(group_coord(c, src.group), group_coord(c, loc.group));
    const std::string src_tile = "g" + std::to_string(src.group) + ".t" + std::to_string(src.tile);
    d.components.push_back(src_tile + ".egress");
    MeshCoord here = group_coord(c, src.group);
    const MeshCoord dest = group_coord(c, loc.group);
    for (;;) {
      d.components.push_back("mesh.g" + std::to_string(group_at(c, here)));
      const int dir = xy_route(here, dest);
      if (dir == kLocal) break;
      here = step(here, dir);
    }
    d.components.push_back(dst_tile + ".xbar");
    d.components.push_back(bank);
  }
  return d;
}

}  // namespace spmsim
