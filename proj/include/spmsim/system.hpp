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

// The event-driven cluster model: builds every router, bank and PE from a
// topology, wires them per the layout, and runs the workload on the engine.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spmsim/endpoints.hpp"
#include "spmsim/engine.hpp"
#include "spmsim/layout.hpp"
#include "spmsim/profiling.hpp"
#include "spmsim/remap.hpp"
#include "spmsim/router.hpp"
#include "spmsim/topology.hpp"
#include "spmsim/trace.hpp"
#include "spmsim/traffic.hpp"

namespace spmsim {

struct SimOptions {
  bool trace = false;       // transfer events and PE-state transitions
  bool path_trace = false;  // per-request hop records
  Cycle max_cycles = 50'000'000;
  Cycle window = 256;       // temporal utilization bin
};

/// Operation lists plus the PE parameters taken from the workload.
struct ResolvedWorkload {
  std::vector<std::vector<Op>> ops;
  std::uint32_t max_outstanding = 8;
  std::uint32_t barrier_interval = 0;
};

inline ResolvedWorkload resolve_workload(const WorkloadSpec& w, const TopologyConfig& topo, std::uint64_t seed) {
  return {generate_ops(w, topo, seed), w.max_outstanding, w.pattern == Pattern::trace ? 0u : w.barrier_interval};
}

inline std::string config_hash(const TopologyConfig& topo, const WorkloadSpec& w, const RemapperConfig& r) {
  nlohmann::ordered_json j;
  j["topology"] = to_json(topo);
  j["workload"] = to_json(w);
  j["remap"] = to_json(r);
  std::string text = j.dump();
  if (!w.trace_path.empty()) {
    std::ifstream in(w.trace_path, std::ios::binary);
    text.append(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  return hex64(fnv1a64(text));
}

/// Collects the responses that reach a group in one cycle and walks each one
/// through the synchronous intra-group response routers, in port order.
class ResponseDispatcher final : public Component, public RequestSink {
 public:
  using Walk = std::function<void(int port, Request&, Cycle now)>;

  ResponseDispatcher(Engine& engine, Walk walk) : engine_(engine), walk_(std::move(walk)) { engine_.add(*this); }

  bool can_accept(int, Cycle) const override { return true; }

  void accept(int port, Request& r, Cycle ready, Cycle) override {
    auto& slot = pending_[ready];
    if (slot.empty()) engine_.schedule_at(component_id(), 0, ready);
    slot.push_back({port, &r});
  }

  void on_event(Cycle now, std::uint64_t) override {
    auto node = pending_.extract(now);
    auto& items = node.mapped();
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.port < b.port; });
    for (const auto& it : items) walk_(it.port, *it.req, now);
  }

  bool idle() const { return pending_.empty(); }

 private:
  struct Item {
    int port;
    Request* req;
  };
  Engine& engine_;
  Walk walk_;
  std::map<Cycle, std::vector<Item>> pending_;
};

class System {
 public:
  System(const TopologyConfig& topo, ResolvedWorkload work, const RemapperConfig& remap, std::uint64_t seed,
         SimOptions opts = {}, std::string hash = {})
      : layout_(topo, remap.injection_penalty()),
        work_(std::move(work)),
        seed_(seed),
        opts_(opts),
        hash_(std::move(hash)),
        schedule_(remap, topo.channels(), topo.channels_per_tile) {
    topo.validate();
    remap.validate(topo.channels());
    if (work_.ops.size() != layout_.pe_count()) throw ConfigError("workload", "needs one operation list per PE");
    if (work_.max_outstanding < 1) throw ConfigError("max_outstanding", "must be >= 1");
    build();
  }

  System(const System&) = delete;
  System& operator=(const System&) = delete;

  const Layout& layout() const noexcept { return layout_; }
  Engine& engine() noexcept { return engine_; }
  const TraceLog& trace() const noexcept { return trace_; }
  const RequestPool& requests() const noexcept { return pool_; }
  const PeModel& pe(std::uint32_t i) const { return *pes_.at(i); }
  const AsyncRouter* async_router(std::uint32_t uid) const { return async_.at(uid).get(); }
  const SyncRouter* sync_router(std::uint32_t uid) const { return sync_.at(uid).get(); }
  const BankModel& bank(std::uint32_t i) const { return *banks_.at(i); }

  RunOutcome run() {
    for (auto& p : pes_) p->start();
    outcome_ = engine_.run_to_completion(
        opts_.max_cycles, [this] { return all_done(); }, [this] { return census(); });
    if (outcome_.status == RunStatus::finished) {
      total_ = 0;
      for (const auto& p : pes_) total_ = std::max(total_, p->counters().done_at);
    } else {
      total_ = opts_.max_cycles;
    }
    for (auto& p : pes_) p->finalize(total_);
    ran_ = true;
    return outcome_;
  }

  Cycle total_cycles() const noexcept { return total_; }

  bool all_done() const {
    return std::all_of(pes_.begin(), pes_.end(), [](const auto& p) { return p->done(); });
  }

  std::string census() const {
    std::ostringstream os;
    std::size_t listed = 0;
    for (const auto& p : pes_) {
      if (p->done()) continue;
      if (listed++ < 16)
        os << "pe " << p->id() << ": op " << p->next_op() << "/" << p->op_count() << ", " << p->inflight()
           << " outstanding\n";
    }
    if (listed > 16) os << "... " << (listed - 16) << " more PEs unfinished\n";
    return os.str();
  }

  ProfileReport report() const {
    ProfileReport rep;
    rep.config_hash = hash_;
    rep.seed = seed_;
    rep.status = outcome_.status == RunStatus::finished ? "finished" : "cycle_budget_exceeded";
    rep.total_cycles = total_;
    rep.window = opts_.window;
    rep.round_trip = round_trip_;
    rep.one_way = one_way_;
    for (const auto& p : pes_) {
      rep.pes.push_back(p->counters());
      rep.requests_issued += p->counters().issued();
      rep.responses_delivered += p->counters().responses;
    }
    for (std::uint32_t uid = 0; uid < layout_.router_count(); ++uid) {
      if (async_[uid]) rep.routers.push_back({uid, layout_.name(uid), true, async_[uid]->counters()});
      else rep.routers.push_back({uid, layout_.name(uid), false, sync_[uid]->counters()});
    }
    for (const auto& b : banks_) rep.banks.push_back(b->counters());
    rep.channels = channels_;
    return rep;
  }

 private:
  void build() {
    const Layout& L = layout_;
    const std::uint32_t R = L.router_count();
    async_.resize(R);
    sync_.resize(R);
    for (std::uint32_t uid = 0; uid < R; ++uid) {
      if (L.is_sync(uid)) {
        sync_[uid] = std::make_unique<SyncRouter>(L.spec(uid), uid);
      } else {
        async_[uid] = std::make_unique<AsyncRouter>(
            engine_, L.spec(uid), [this, uid](const Request& r) { return layout_.route(uid, r); }, uid);
      }
    }
    for (std::uint32_t b = 0; b < L.bank_count(); ++b) {
      banks_.push_back(std::make_unique<BankModel>(
          engine_, b, L.config().bank_service_cycles, L.config().atomic_extra_cycles,
          [this](Request& r, Cycle ready, Cycle now) { bank_response(r, ready, now); }, L.bank_component(b)));
    }
    for (std::uint32_t g = 0; g < L.G; ++g)
      dispatchers_.push_back(std::make_unique<ResponseDispatcher>(
          engine_, [this, g](int port, Request& r, Cycle now) { walk_response(g, port, r, now); }));

    std::vector<std::uint32_t> participants = barrier_participants(work_.ops, work_.barrier_interval);
    barrier_ = Barrier(participants);
    barrier_.set_on_release([this](std::size_t, Cycle at) {
      for (auto& p : pes_) p->wake(at);
    });
    for (std::uint32_t pe = 0; pe < L.pe_count(); ++pe) {
      std::vector<bool> local;
      local.reserve(work_.ops[pe].size());
      for (const Op& op : work_.ops[pe]) local.push_back(L.is_local(pe, op.addr));
      PeModel::Params params{pe, work_.max_outstanding, work_.barrier_interval, L.pe_component(pe)};
      pes_.push_back(std::make_unique<PeModel>(engine_, params, work_.ops[pe], std::move(local), pool_));
    }

    channels_.assign(L.channels(), WindowedBusy(opts_.window));
    TraceLog* log = opts_.trace ? &trace_ : nullptr;
    for (std::uint32_t uid = 0; uid < R; ++uid) {
      if (sync_[uid]) {
        sync_[uid]->set_trace(log, opts_.path_trace);
        continue;
      }
      AsyncRouter& r = *async_[uid];
      r.set_trace(log, opts_.path_trace);
      const RouterRef ref = L.decode(uid);
      for (int out = 0; out < r.spec().outputs; ++out) {
        if (L.is_injection(uid, out)) continue;
        const Endpoint ep = L.downstream(uid, out);
        r.connect(out, sink(ep), ep.port);
        if (L.is_mesh(uid)) r.set_usage(out, &channels_[ref.a]);
      }
      if (ref.kind == RouterKind::egress) {
        const std::uint32_t j = ref.b;
        r.set_resolver([this, uid, j](int out, Cycle t) -> AsyncRouter::Link {
          const std::uint32_t I = layout_.I;
          if (static_cast<std::uint32_t>(out) < I) return {};
          const std::uint32_t port = j * layout_.C + (static_cast<std::uint32_t>(out) - I);
          const std::uint32_t k = schedule_.channel(port, t);
          const Endpoint ep = layout_.downstream(uid, out, k);
          return {&sink(ep), ep.port, static_cast<int>(k)};
        });
      }
      if (ref.kind == RouterKind::tile_xbar || ref.kind == RouterKind::egress) {
        for (std::uint32_t p = 0; p < L.P; ++p) {
          PeModel* pe = pes_[pe_index(L.config(), {ref.a, ref.b, p})].get();
          r.set_upstream(static_cast<int>(p), {[pe](Cycle t) { pe->advance(t); }, [pe](Cycle t) { pe->wake(t); }});
        }
      }
      for (int in = 0; in < r.spec().inputs; ++in)
        if (L.remote_input(uid, in)) r.set_remote_input(in, true);
    }
    for (auto& b : banks_) b->set_trace(log);
    for (std::uint32_t pe = 0; pe < L.pe_count(); ++pe) {
      const PeCoord c = pe_coord(L.config(), pe);
      pes_[pe]->wire(async_[L.tile_xbar(c.group, c.tile)].get(), async_[L.egress(c.group, c.tile)].get(),
                     static_cast<int>(c.local));
      pes_[pe]->set_barrier(&barrier_);
      pes_[pe]->set_trace(log);
    }
  }

  RequestSink& sink(const Endpoint& ep) {
    switch (ep.type) {
      case Endpoint::router: return *async_.at(ep.index);
      case Endpoint::bank: return *banks_.at(ep.index);
      case Endpoint::dispatcher: return *dispatchers_.at(ep.index);
    }
    throw SimError("bad endpoint");
  }

  void bank_response(Request& r, Cycle ready, Cycle now) {
    const Location l = layout_.address_map().map(r.addr);
    if (layout_.response_stays_in_group(r)) {
      dispatchers_[l.group]->accept(layout_.dispatcher_bank_port(l), r, ready, now);
    } else {
      async_[layout_.resp_inject(l.group)]->accept(static_cast<int>(l.tile * layout_.B + l.bank), r, ready, now);
    }
  }

  void walk_response(std::uint32_t g, int port, Request& r, Cycle now) {
    Cycle at = now;
    for (const SyncStep& s : layout_.response_path(g, port, r)) at = sync_[s.uid]->process_hop(s.out, r, at);
    const Cycle delivered = at + r.duration - 1;
    r.delivered_at = delivered;
    round_trip_.add(delivered - r.issued_at);
    one_way_.add(r.request_latency);
    pes_[r.initiator]->deliver(r, delivered);
  }

  Layout layout_;
  ResolvedWorkload work_;
  std::uint64_t seed_;
  SimOptions opts_;
  std::string hash_;
  RemapSchedule schedule_;

  Engine engine_;
  RequestPool pool_;
  TraceLog trace_;
  Barrier barrier_;
  std::vector<std::unique_ptr<AsyncRouter>> async_;
  std::vector<std::unique_ptr<SyncRouter>> sync_;
  std::vector<std::unique_ptr<BankModel>> banks_;
  std::vector<std::unique_ptr<ResponseDispatcher>> dispatchers_;
  std::vector<std::unique_ptr<PeModel>> pes_;
  std::vector<WindowedBusy> channels_;
  LatencyHistogram round_trip_;
  LatencyHistogram one_way_;

  RunOutcome outcome_;
  Cycle total_ = 0;
  bool ran_ = false;
};

}  // namespace spmsim
