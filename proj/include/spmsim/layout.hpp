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

// Router numbering, port maps and wiring of the cluster. Everything here is a
// pure function of the configuration, shared by the event-driven system and
// the per-cycle reference simulator.
//
// Request network, per group g:
//   tile xbar (g,j):   in  [0,P) PEs | [P,P+I) group xbars | [P+I,P+I+K) mesh channel k
//                      out [0,B) banks
//   egress (g,j):      in  [0,P) PEs
//                      out [0,I) group xbars | [I,I+C) inter-group ports -> channel
//   group xbar (g,i):  in/out one per tile
//   mesh req (k,g):    in  N,E,S,W,local | out N,E,S,W, then one eject per tile
// Response network:
//   sync tile resp xbar (g,j) -> PEs, sync resp egress (g,j) -> group resp xbars,
//   resp inject (g): one input per bank of the group, one output per channel,
//   mesh resp (k,g): in N,E,S,W,local | out N,E,S,W,eject (to the dispatcher).
// K = tiles_per_group * channels_per_tile parallel mesh channels.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "spmsim/request.hpp"
#include "spmsim/router.hpp"
#include "spmsim/topology.hpp"

namespace spmsim {

enum class RouterKind : std::uint8_t {
  tile_xbar,
  egress,
  group_xbar,
  mesh_req,
  mesh_resp,
  tile_resp_xbar,
  resp_egress,
  group_resp_xbar,
  resp_inject,
};

struct RouterRef {
  RouterKind kind;
  std::uint32_t a;  // group, or channel for mesh routers
  std::uint32_t b;  // tile / port index, or group for mesh routers
};

/// Where an async router output leads.
struct Endpoint {
  enum Type : std::uint8_t { router, bank, dispatcher } type = router;
  std::uint32_t index = 0;  // router uid, global bank index or group
  int port = 0;
};

struct SyncStep {
  std::uint32_t uid;
  int out;
};

inline constexpr int kMeshLocal = 4;

class Layout {
 public:
  explicit Layout(const TopologyConfig& c, Cycle remap_penalty = 0)
      : c_(c),
        map_(c),
        G(c.groups()),
        T(c.tiles_per_group),
        P(c.pes_per_tile),
        B(c.banks_per_tile),
        I(c.intra_group_ports_per_tile),
        C(c.channels_per_tile),
        K(c.channels()),
        penalty_(remap_penalty) {
    base_[0] = 0;
    const std::uint32_t counts[] = {G * T, G * T, G * I, K * G, K * G, G * T, G * T, G * I, G};
    for (int k = 0; k < 9; ++k) base_[k + 1] = base_[k] + counts[k];
  }

  const TopologyConfig& config() const noexcept { return c_; }
  const AddressMap& address_map() const noexcept { return map_; }

  std::uint32_t router_count() const noexcept { return base_[9]; }
  std::uint32_t bank_count() const noexcept { return G * T * B; }
  std::uint32_t pe_count() const noexcept { return G * T * P; }
  std::uint32_t channels() const noexcept { return K; }

  // Trace component ids: routers first, then banks, then PEs.
  std::uint32_t bank_component(std::uint32_t bank) const noexcept { return router_count() + bank; }
  std::uint32_t pe_component(std::uint32_t pe) const noexcept { return router_count() + bank_count() + pe; }

  std::uint32_t bank_index(std::uint32_t g, std::uint32_t j, std::uint32_t b) const { return (g * T + j) * B + b; }
  std::uint32_t bank_index(const Location& l) const { return bank_index(l.group, l.tile, l.bank); }

  // uids ----------------------------------------------------------------------
  std::uint32_t tile_xbar(std::uint32_t g, std::uint32_t j) const { return base_[0] + g * T + j; }
  std::uint32_t egress(std::uint32_t g, std::uint32_t j) const { return base_[1] + g * T + j; }
  std::uint32_t group_xbar(std::uint32_t g, std::uint32_t i) const { return base_[2] + g * I + i; }
  std::uint32_t mesh_req(std::uint32_t k, std::uint32_t g) const { return base_[3] + k * G + g; }
  std::uint32_t mesh_resp(std::uint32_t k, std::uint32_t g) const { return base_[4] + k * G + g; }
  std::uint32_t tile_resp_xbar(std::uint32_t g, std::uint32_t j) const { return base_[5] + g * T + j; }
  std::uint32_t resp_egress(std::uint32_t g, std::uint32_t j) const { return base_[6] + g * T + j; }
  std::uint32_t group_resp_xbar(std::uint32_t g, std::uint32_t i) const { return base_[7] + g * I + i; }
  std::uint32_t resp_inject(std::uint32_t g) const { return base_[8] + g; }

  RouterRef decode(std::uint32_t uid) const {
    int k = 0;
    while (uid >= base_[k + 1]) ++k;
    const std::uint32_t off = uid - base_[k];
    const auto kind = static_cast<RouterKind>(k);
    switch (kind) {
      case RouterKind::tile_xbar:
      case RouterKind::egress:
      case RouterKind::tile_resp_xbar:
      case RouterKind::resp_egress: return {kind, off / T, off % T};
      case RouterKind::group_xbar:
      case RouterKind::group_resp_xbar: return {kind, off / I, off % I};
      case RouterKind::mesh_req:
      case RouterKind::mesh_resp: return {kind, off / G, off % G};
      case RouterKind::resp_inject: return {kind, off, 0};
    }
    return {kind, 0, 0};
  }

  bool is_sync(std::uint32_t uid) const {
    const auto k = decode(uid).kind;
    return k == RouterKind::tile_resp_xbar || k == RouterKind::resp_egress || k == RouterKind::group_resp_xbar;
  }

  /// Routers whose output links make up mesh channel k (both networks).
  bool is_mesh(std::uint32_t uid) const {
    const auto k = decode(uid).kind;
    return k == RouterKind::mesh_req || k == RouterKind::mesh_resp;
  }

  std::string name(std::uint32_t uid) const {
    const RouterRef r = decode(uid);
    const std::string a = std::to_string(r.a), b = std::to_string(r.b);
    switch (r.kind) {
      case RouterKind::tile_xbar: return "g" + a + ".t" + b + ".xbar";
      case RouterKind::egress: return "g" + a + ".t" + b + ".egress";
      case RouterKind::group_xbar: return "g" + a + ".gxbar" + b;
      case RouterKind::mesh_req: return "mesh.req" + a + ".g" + b;
      case RouterKind::mesh_resp: return "mesh.resp" + a + ".g" + b;
      case RouterKind::tile_resp_xbar: return "g" + a + ".t" + b + ".resp_xbar";
      case RouterKind::resp_egress: return "g" + a + ".t" + b + ".resp_egress";
      case RouterKind::group_resp_xbar: return "g" + a + ".resp_gxbar" + b;
      case RouterKind::resp_inject: return "g" + a + ".resp_inject";
    }
    return "?";
  }

  RouterSpec spec(std::uint32_t uid) const {
    const RouterRef r = decode(uid);
    RouterSpec s;
    s.name = name(uid);
    s.bandwidth = c_.bandwidth;
    s.queue_capacity = static_cast<int>(c_.queue_capacity);
    s.rr_update = c_.rr_update;
    s.dispatch_mode = DispatchMode::asynchronous;
    s.routing = RoutingPolicy::interleaved_address;
    const int Pi = static_cast<int>(P), Bi = static_cast<int>(B), Ii = static_cast<int>(I), Ci = static_cast<int>(C),
              Ti = static_cast<int>(T), Ki = static_cast<int>(K);
    switch (r.kind) {
      case RouterKind::tile_xbar:
        s.inputs = Pi + Ii + Ki;
        s.outputs = Bi;
        s.base_latency = c_.tile_xbar_cycles;
        break;
      case RouterKind::egress:
        s.inputs = Pi;
        s.outputs = Ii + Ci;
        s.base_latency = c_.tile_egress_cycles;
        s.output_latency.assign(static_cast<std::size_t>(Ii + Ci), c_.tile_egress_cycles);
        for (int c = 0; c < Ci; ++c) s.output_latency[static_cast<std::size_t>(Ii + c)] += penalty_;
        break;
      case RouterKind::group_xbar:
        s.inputs = Ti;
        s.outputs = Ti;
        s.base_latency = c_.group_xbar_cycles;
        break;
      case RouterKind::mesh_req:
        s.inputs = 5;
        s.outputs = 4 + Ti;
        s.routing = RoutingPolicy::xy_mesh;
        s.base_latency = c_.mesh_hop_cycles;
        s.output_latency.assign(static_cast<std::size_t>(4 + Ti), c_.mesh_eject_cycles());
        for (int d = 0; d < 4; ++d) s.output_latency[static_cast<std::size_t>(d)] = c_.mesh_hop_cycles;
        break;
      case RouterKind::mesh_resp:
        s.inputs = 5;
        s.outputs = 5;
        s.routing = RoutingPolicy::xy_mesh;
        s.base_latency = c_.mesh_hop_cycles;
        s.output_latency.assign(5, c_.mesh_hop_cycles);
        s.output_latency[kMeshLocal] = c_.mesh_eject_cycles();
        break;
      case RouterKind::tile_resp_xbar:
        s.inputs = Bi + Ii + Ki;
        s.outputs = Pi;
        s.base_latency = c_.tile_xbar_cycles;
        s.dispatch_mode = DispatchMode::synchronous;
        break;
      case RouterKind::resp_egress:
        s.inputs = Bi;
        s.outputs = Ii;
        s.base_latency = c_.tile_egress_cycles;
        s.dispatch_mode = DispatchMode::synchronous;
        break;
      case RouterKind::group_resp_xbar:
        s.inputs = Ti;
        s.outputs = Ti;
        s.base_latency = c_.group_xbar_cycles;
        s.dispatch_mode = DispatchMode::synchronous;
        break;
      case RouterKind::resp_inject:
        // Holds every response of the group's banks; the bank never stalls.
        s.inputs = Ti * Bi;
        s.outputs = Ki;
        s.base_latency = c_.tile_egress_cycles;
        s.routing = RoutingPolicy::fixed_port;
        s.queue_capacity = 1 << 30;
        break;
    }
    return s;
  }

  // Routing -------------------------------------------------------------------

  /// Output port an async router takes for a request (the `route` step).
  int route(std::uint32_t uid, const Request& req) const {
    const RouterRef r = decode(uid);
    switch (r.kind) {
      case RouterKind::tile_xbar: return static_cast<int>(map_.map(req.addr).bank);
      case RouterKind::egress: {
        const Location l = map_.map(req.addr);
        if (l.group == r.a) return static_cast<int>(l.bank % I);
        return static_cast<int>(I + l.bank % C);
      }
      case RouterKind::group_xbar: return static_cast<int>(map_.map(req.addr).tile);
      case RouterKind::mesh_req: {
        const Location l = map_.map(req.addr);
        const int d = xy_route(group_coord(c_, r.b), group_coord(c_, l.group));
        return d == kLocal ? 4 + static_cast<int>(l.tile) : d;
      }
      case RouterKind::mesh_resp: {
        const std::uint32_t home = pe_coord(c_, req.initiator).group;
        const int d = xy_route(group_coord(c_, r.b), group_coord(c_, home));
        return d == kLocal ? kMeshLocal : d;
      }
      case RouterKind::resp_inject:
        if (req.channel < 0) throw RoutingError(name(uid), req.addr, "response without a request channel");
        return req.channel;
      default: break;
    }
    throw RoutingError(name(uid), req.addr, "not an asynchronous router");
  }

  /// Static wiring of an async router output. For egress inter-group ports the
  /// target depends on the channel chosen by the remap switch.
  Endpoint downstream(std::uint32_t uid, int out, std::uint32_t channel = 0) const {
    const RouterRef r = decode(uid);
    const auto o = static_cast<std::uint32_t>(out);
    switch (r.kind) {
      case RouterKind::tile_xbar: return {Endpoint::bank, bank_index(r.a, r.b, o), 0};
      case RouterKind::egress:
        if (o < I) return {Endpoint::router, group_xbar(r.a, o), static_cast<int>(r.b)};
        return {Endpoint::router, mesh_req(channel, r.a), kMeshLocal};
      case RouterKind::group_xbar:
        return {Endpoint::router, tile_xbar(r.a, o), static_cast<int>(P + r.b)};
      case RouterKind::mesh_req: {
        if (o < 4) {
          const MeshCoord next = step(group_coord(c_, r.b), static_cast<int>(o));
          return {Endpoint::router, mesh_req(r.a, group_at(c_, next)), opposite(static_cast<int>(o))};
        }
        return {Endpoint::router, tile_xbar(r.b, o - 4), static_cast<int>(P + I + r.a)};
      }
      case RouterKind::mesh_resp: {
        if (o < 4) {
          const MeshCoord next = step(group_coord(c_, r.b), static_cast<int>(o));
          return {Endpoint::router, mesh_resp(r.a, group_at(c_, next)), opposite(static_cast<int>(o))};
        }
        return {Endpoint::dispatcher, r.b, static_cast<int>(T * B + r.a)};
      }
      case RouterKind::resp_inject: return {Endpoint::router, mesh_resp(o, r.a), kMeshLocal};
      default: break;
    }
    throw RoutingError(name(uid), 0, "no asynchronous output " + std::to_string(out));
  }

  /// Egress outputs that enter the mesh through the remap switch.
  bool is_injection(std::uint32_t uid, int out) const {
    return decode(uid).kind == RouterKind::egress && static_cast<std::uint32_t>(out) >= I;
  }

  /// Inputs fed from outside the tile (used for remote-port conflict stats).
  bool remote_input(std::uint32_t uid, int in) const {
    return decode(uid).kind == RouterKind::tile_xbar && static_cast<std::uint32_t>(in) >= P;
  }

  /// First hop of a PE request: (router uid, input port).
  std::pair<std::uint32_t, int> first_hop(std::uint32_t pe, std::uint32_t addr) const {
    const PeCoord me = pe_coord(c_, pe);
    const Location l = map_.map(addr);
    const bool local = l.group == me.group && l.tile == me.tile;
    return {local ? tile_xbar(me.group, me.tile) : egress(me.group, me.tile), static_cast<int>(me.local)};
  }

  bool is_local(std::uint32_t pe, std::uint32_t addr) const {
    const PeCoord me = pe_coord(c_, pe);
    const Location l = map_.map(addr);
    return l.group == me.group && l.tile == me.tile;
  }

  /// True when a request's response never leaves the bank's group.
  bool response_stays_in_group(const Request& req) const {
    return map_.map(req.addr).group == pe_coord(c_, req.initiator).group;
  }

  /// Input port of the group's response dispatcher for a bank response.
  int dispatcher_bank_port(const Location& l) const { return static_cast<int>(l.tile * B + l.bank); }

  /// Synchronous hops a response takes from dispatcher port `port` of group g.
  std::vector<SyncStep> response_path(std::uint32_t g, int port, const Request& req) const {
    const PeCoord dst = pe_coord(c_, req.initiator);
    const int p = static_cast<int>(dst.local);
    if (static_cast<std::uint32_t>(port) >= T * B) return {{tile_resp_xbar(g, dst.tile), p}};
    const std::uint32_t src_tile = static_cast<std::uint32_t>(port) / B;
    const std::uint32_t bank = static_cast<std::uint32_t>(port) % B;
    if (src_tile == dst.tile) return {{tile_resp_xbar(g, dst.tile), p}};
    const std::uint32_t i = bank % I;
    return {{resp_egress(g, src_tile), static_cast<int>(i)},
            {group_resp_xbar(g, i), static_cast<int>(dst.tile)},
            {tile_resp_xbar(g, dst.tile), p}};
  }

 private:
  TopologyConfig c_;
  AddressMap map_;

 public:
  const std::uint32_t G, T, P, B, I, C, K;

 private:
  Cycle penalty_;
  std::uint32_t base_[10]{};
};

}  // namespace spmsim
