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

// Brute-force reference simulator: every PE, router, bank and response
// dispatcher is evaluated every cycle in a fixed order (PEs, routers by uid,
// banks, dispatchers). It shares only configuration, address mapping,
// routing/wiring rules, the traffic generator and the remap schedule with
// the event-driven System, and is used to validate it on small clusters.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <sstream>
#include <string>
#include <vector>

#include "spmsim/endpoints.hpp"
#include "spmsim/layout.hpp"
#include "spmsim/profiling.hpp"
#include "spmsim/remap.hpp"
#include "spmsim/system.hpp"
#include "spmsim/topology.hpp"
#include "spmsim/trace.hpp"

namespace spmsim {

class Oracle {
 public:
  Oracle(const TopologyConfig& topo, ResolvedWorkload work, const RemapperConfig& remap, std::uint64_t seed,
         SimOptions opts = {}, std::string hash = {})
      : L_(topo, remap.injection_penalty()),
        work_(std::move(work)),
        seed_(seed),
        opts_(opts),
        hash_(std::move(hash)),
        schedule_(remap, topo.channels(), topo.channels_per_tile) {
    topo.validate();
    routers_.resize(L_.router_count());
    for (std::uint32_t uid = 0; uid < L_.router_count(); ++uid) {
      Rt& r = routers_[uid];
      r.spec = L_.spec(uid);
      r.async = !L_.is_sync(uid);
      const auto no = static_cast<std::size_t>(r.spec.outputs);
      r.busy.assign(no, 0);
      r.last.assign(no, r.spec.inputs - 1);
      r.counters.outputs.resize(no);
      if (r.async) {
        const auto ni = static_cast<std::size_t>(r.spec.inputs);
        r.q.resize(ni);
        r.popped.assign(ni, 0);
        r.counters.inputs.resize(ni);
      }
    }
    banks_.resize(L_.bank_count());
    pending_.resize(L_.G);
    channels_.assign(L_.channels(), WindowedBusy(opts_.window));
    pes_.resize(L_.pe_count());
    for (std::uint32_t i = 0; i < L_.pe_count(); ++i) pes_[i].done_ops.assign(work_.ops[i].size(), false);
    const auto parts = barrier_participants(work_.ops, work_.barrier_interval);
    bar_need_ = parts;
    bar_count_.assign(parts.size(), 0);
    bar_release_.assign(parts.size(), kNever);
  }

  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  const TraceLog& trace() const noexcept { return trace_; }

  RunStatus run() {
    for (Cycle t = 0;; ++t) {
      if (t >= opts_.max_cycles) {
        status_ = RunStatus::cycle_budget_exceeded;
        total_ = opts_.max_cycles;
        break;
      }
      cycle_ = t;
      for (std::uint32_t i = 0; i < pes_.size(); ++i) pe_cycle(i, t);
      if (std::all_of(pes_.begin(), pes_.end(), [](const Pe& p) { return p.done; })) {
        status_ = RunStatus::finished;
        total_ = 0;
        for (const auto& p : pes_) total_ = std::max(total_, p.c.done_at);
        break;
      }
      for (std::uint32_t uid = 0; uid < routers_.size(); ++uid)
        if (routers_[uid].async) router_cycle(uid, t);
      for (std::uint32_t b = 0; b < banks_.size(); ++b) bank_cycle(b, t);
      for (std::uint32_t g = 0; g < pending_.size(); ++g) dispatch_cycle(g, t);
    }
    for (auto& p : pes_)
      if (p.done) p.c.idle += total_ - p.c.done_at;
    return status_;
  }

  ProfileReport report() const {
    ProfileReport rep;
    rep.config_hash = hash_;
    rep.seed = seed_;
    rep.status = status_ == RunStatus::finished ? "finished" : "cycle_budget_exceeded";
    rep.total_cycles = total_;
    rep.window = opts_.window;
    rep.round_trip = round_trip_;
    rep.one_way = one_way_;
    for (const auto& p : pes_) {
      rep.pes.push_back(p.c);
      rep.requests_issued += p.c.issued();
      rep.responses_delivered += p.c.responses;
    }
    for (std::uint32_t uid = 0; uid < routers_.size(); ++uid)
      rep.routers.push_back({uid, L_.name(uid), routers_[uid].async, routers_[uid].counters});
    for (const auto& b : banks_) rep.banks.push_back(b.c);
    rep.channels = channels_;
    return rep;
  }

 private:
  struct Entry {
    Request* req;
    Cycle ready;
    int out;
  };
  struct Rt {
    RouterSpec spec;
    bool async = true;
    std::vector<std::deque<Entry>> q;
    std::vector<std::uint32_t> popped;  // grants from each input this cycle
    Cycle popped_at = kNever;
    std::vector<Cycle> busy;
    std::vector<int> last;
    RouterCounters counters;
  };
  struct Bk {
    struct Arrival {
      Request* req;
      Cycle head;
      Cycle tail;
    };
    std::deque<Arrival> arrivals;
    Cycle free_at = 0;
    BankCounters c;
  };
  struct Pending {
    Cycle ready;
    int port;
    Request* req;
  };
  struct Pe {
    std::size_t next = 0;
    std::uint64_t inflight = 0;
    bool issued_any = false;
    Cycle last_issue = 0;
    std::vector<bool> done_ops;
    std::vector<std::pair<Cycle, std::uint32_t>> arriving;  // (cycle, op)
    std::vector<Request*> arriving_req;
    std::size_t barriers_passed = 0;
    bool at_barrier = false;
    bool done = false;
    bool noted = false;
    PeState last_state = PeState::idle;
    PeCounters c;
  };

  // --- occupancy -----------------------------------------------------------

  std::size_t slots_used(Rt& r, int in, Cycle t) {
    if (r.popped_at != t) {
      std::fill(r.popped.begin(), r.popped.end(), 0);
      r.popped_at = t;
    }
    return r.q[static_cast<std::size_t>(in)].size() + r.popped[static_cast<std::size_t>(in)];
  }

  bool has_room(const Endpoint& ep, Cycle t) {
    if (ep.type != Endpoint::router) return true;
    Rt& r = routers_[ep.index];
    return slots_used(r, ep.port, t) < static_cast<std::size_t>(r.spec.queue_capacity);
  }

  void push(const Endpoint& ep, Request& req, Cycle ready, Cycle t) {
    switch (ep.type) {
      case Endpoint::router: {
        Rt& r = routers_[ep.index];
        const int out = L_.route(ep.index, req);
        r.q[static_cast<std::size_t>(ep.port)].push_back({&req, ready, out});
        const std::size_t occ = slots_used(r, ep.port, t);
        auto& qc = r.counters.inputs[static_cast<std::size_t>(ep.port)];
        ++qc.enqueues;
        if (occ > qc.max_occupancy) qc.max_occupancy = occ;
        if (qc.occupancy_histogram.size() <= occ) qc.occupancy_histogram.resize(occ + 1, 0);
        ++qc.occupancy_histogram[occ];
        note({ready, ep.index, req.id, TracePhase::enqueue});
        break;
      }
      case Endpoint::bank: {
        Bk& b = banks_[ep.index];
        b.arrivals.push_back({&req, ready, ready + req.duration - 1});
        break;
      }
      case Endpoint::dispatcher:
        pending_[ep.index].push_back({ready, ep.port, &req});
        break;
    }
  }

  void note(const TraceRecord& r) {
    if (opts_.trace) trace_.record(r);
  }

  // --- PEs -------------------------------------------------------------------

  void pe_state(Pe& p, std::uint32_t id, PeState s, Cycle t) {
    switch (s) {
      case PeState::active: ++p.c.active; break;
      case PeState::lsu_full: ++p.c.lsu_full; break;
      case PeState::load_use: ++p.c.load_use; break;
      case PeState::barrier: ++p.c.barrier; break;
      case PeState::idle: ++p.c.idle; break;
      case PeState::done: break;
    }
    if (opts_.trace && (!p.noted || p.last_state != s)) trace_.record_state({t, id, s});
    p.noted = true;
    p.last_state = s;
  }

  void pe_cycle(std::uint32_t id, Cycle t) {
    Pe& p = pes_[id];
    if (p.done) return;
    const auto& ops = work_.ops[id];

    for (std::size_t k = 0; k < p.arriving.size();) {
      if (p.arriving[k].first == t) {
        --p.inflight;
        ++p.c.responses;
        p.done_ops[p.arriving[k].second] = true;
        note({t, L_.pe_component(id), p.arriving_req[k]->id, TracePhase::respond});
        p.arriving.erase(p.arriving.begin() + static_cast<long>(k));
        p.arriving_req.erase(p.arriving_req.begin() + static_cast<long>(k));
      } else {
        ++k;
      }
    }

    const std::uint32_t iv = work_.barrier_interval;
    if (p.next < ops.size() && iv > 0 && p.next > 0 && p.next % iv == 0 && p.barriers_passed < p.next / iv) {
      const std::size_t k = p.next / iv - 1;
      if (!p.at_barrier && p.inflight == 0) {
        p.at_barrier = true;
        if (++bar_count_[k] == bar_need_[k]) bar_release_[k] = t + 1;
      }
      if (p.at_barrier && bar_release_[k] <= t) {
        p.at_barrier = false;
        ++p.barriers_passed;
      } else {
        pe_state(p, id, PeState::barrier, t);
        return;
      }
    }

    if (p.next == ops.size()) {
      if (p.inflight == 0) {
        p.done = true;
        p.c.done_at = t;
        if (opts_.trace && (!p.noted || p.last_state != PeState::done)) trace_.record_state({t, id, PeState::done});
        p.noted = true;
        p.last_state = PeState::done;
      } else {
        pe_state(p, id, PeState::idle, t);
      }
      return;
    }

    const Op& op = ops[p.next];
    Cycle earliest = op.ready_at;
    if (p.issued_any) earliest = std::max(earliest, p.last_issue + 1 + op.gap);
    if (t < earliest) return pe_state(p, id, PeState::idle, t);
    if (op.dependent && !p.done_ops[p.next - 1]) return pe_state(p, id, PeState::load_use, t);
    const auto [uid, port] = L_.first_hop(id, op.addr);
    const Endpoint first{Endpoint::router, uid, port};
    if (p.inflight >= work_.max_outstanding || !has_room(first, t)) return pe_state(p, id, PeState::lsu_full, t);

    Request& r = requests_.emplace_back();
    r.id = make_request_id(id, static_cast<std::uint32_t>(p.next));
    r.initiator = id;
    r.addr = op.addr;
    r.kind = op.kind;
    r.size = op.size;
    r.issued_at = t;
    r.op_index = static_cast<std::uint32_t>(p.next);
    if (op.kind == OpKind::read) ++p.c.reads;
    else if (op.kind == OpKind::write) ++p.c.writes;
    else ++p.c.atomics;
    ++p.next;
    ++p.inflight;
    p.c.max_inflight = std::max<std::uint64_t>(p.c.max_inflight, p.inflight);
    p.issued_any = true;
    p.last_issue = t;
    push(first, r, t, t);
    pe_state(p, id, PeState::active, t);
  }

  // --- routers ---------------------------------------------------------------

  Endpoint output_target(std::uint32_t uid, int out, Cycle t, int& channel) {
    channel = -1;
    if (L_.is_injection(uid, out)) {
      const RouterRef ref = L_.decode(uid);
      const std::uint32_t q = ref.b * L_.C + (static_cast<std::uint32_t>(out) - L_.I);
      channel = static_cast<int>(schedule_.at(t)[q]);
      return L_.downstream(uid, out, static_cast<std::uint32_t>(channel));
    }
    return L_.downstream(uid, out);
  }

  void router_cycle(std::uint32_t uid, Cycle t) {
    Rt& r = routers_[uid];
    const int ni = r.spec.inputs, no = r.spec.outputs;
    std::vector<std::vector<int>> want(static_cast<std::size_t>(no));
    bool any = false;
    for (int in = 0; in < ni; ++in) {
      const auto& q = r.q[static_cast<std::size_t>(in)];
      if (!q.empty() && q.front().ready <= t) {
        want[static_cast<std::size_t>(q.front().out)].push_back(in);
        any = true;
      }
    }
    if (!any) return;
    std::uint64_t losers = 0, remote_losers = 0;
    for (int out = 0; out < no; ++out) {
      auto& w = want[static_cast<std::size_t>(out)];
      if (w.empty()) continue;
      auto& pc = r.counters.outputs[static_cast<std::size_t>(out)];
      if (w.size() > 1) ++pc.conflict_cycles;
      int winner = -1;
      if (r.busy[static_cast<std::size_t>(out)] <= t) {
        int channel = -1;
        const Endpoint ep = output_target(uid, out, t, channel);
        if (!has_room(ep, t)) {
          ++pc.blocked_cycles;
        } else {
          // Scan inputs starting after the last grant (or at t mod n).
          const int first = r.spec.rr_update == RrUpdate::per_cycle ? static_cast<int>(t % static_cast<Cycle>(ni))
                                                                    : (r.last[static_cast<std::size_t>(out)] + 1) % ni;
          for (int k = 0; k < ni && winner < 0; ++k) {
            const int cand = (first + k) % ni;
            if (std::find(w.begin(), w.end(), cand) != w.end()) winner = cand;
          }
          forward(uid, r, out, winner, ep, channel, t);
        }
      }
      for (int in : w) {
        if (in == winner) continue;
        ++losers;
        if (L_.remote_input(uid, in)) ++remote_losers;
      }
    }
    r.counters.port_conflicts += losers;
    r.counters.peak_port_conflicts = std::max(r.counters.peak_port_conflicts, losers);
    r.counters.peak_remote_conflicts = std::max(r.counters.peak_remote_conflicts, remote_losers);
  }

  void forward(std::uint32_t uid, Rt& r, int out, int in, const Endpoint& ep, int channel, Cycle t) {
    slots_used(r, in, t);  // roll the per-cycle counters before popping
    auto& q = r.q[static_cast<std::size_t>(in)];
    const Entry e = q.front();
    q.pop_front();
    ++r.popped[static_cast<std::size_t>(in)];

    Request& req = *e.req;
    const Cycle base = r.spec.latency_of(out);
    const Cycle wait = t - e.ready;
    const Cycle dur = ceil_div(leg_payload_bytes(req, req.leg), r.spec.bandwidth);
    req.latency = req.latency + base + wait;
    if (dur > req.duration) req.duration = dur;
    req.last_hop_wait = wait;
    if (channel >= 0) req.channel = channel;
    if (opts_.path_trace)
      req.path.push_back({uid, static_cast<std::uint16_t>(out), e.ready, t, t + base, base, wait, dur});
    note({t, uid, req.id, TracePhase::arbitrate});
    note({t + base, uid, req.id, TracePhase::dispatch});

    const auto o = static_cast<std::size_t>(out);
    r.busy[o] = t + dur;
    if (r.spec.rr_update == RrUpdate::on_grant) r.last[o] = in;
    auto& pc = r.counters.outputs[o];
    ++pc.transfers;
    pc.busy_cycles += dur;
    pc.wait_cycles += wait;
    if (L_.is_mesh(uid)) channels_[L_.decode(uid).a].add(t, dur);
    push(ep, req, t + base, t);
  }

  // --- banks -----------------------------------------------------------------

  void bank_cycle(std::uint32_t idx, Cycle t) {
    Bk& b = banks_[idx];
    if (b.arrivals.empty()) return;
    const auto a = b.arrivals.front();
    if (a.tail > t || b.free_at > t) return;
    b.arrivals.pop_front();
    Request& req = *a.req;
    const Cycle svc = L_.config().bank_service_cycles * ceil_div(req.size, kWordBytes) +
                      (req.kind == OpKind::atomic ? L_.config().atomic_extra_cycles : 0);
    b.free_at = t + svc;
    const Cycle waited = req.last_hop_wait + (t - a.tail);
    ++b.c.accesses;
    b.c.busy_cycles += svc;
    b.c.conflict_wait_cycles += waited;
    if (waited > 0) ++b.c.conflicted_accesses;

    req.bank_head_at = a.head;
    req.request_latency = req.latency;
    req.request_duration = req.duration;
    req.request_hops = static_cast<std::uint32_t>(req.path.size());
    req.served_at = t;
    req.leg = Leg::response;
    req.latency = 0;
    req.duration = 0;
    note({t, L_.bank_component(idx), req.id, TracePhase::serve});

    const Location l = L_.address_map().map(req.addr);
    if (L_.response_stays_in_group(req)) {
      pending_[l.group].push_back({t + svc, L_.dispatcher_bank_port(l), &req});
    } else {
      push({Endpoint::router, L_.resp_inject(l.group), static_cast<int>(l.tile * L_.B + l.bank)}, req, t + svc, t);
    }
  }

  // --- synchronous response walk ----------------------------------------------

  void dispatch_cycle(std::uint32_t g, Cycle t) {
    auto& pend = pending_[g];
    std::vector<Pending> now;
    for (std::size_t k = 0; k < pend.size();) {
      if (pend[k].ready == t) {
        now.push_back(pend[k]);
        pend.erase(pend.begin() + static_cast<long>(k));
      } else {
        ++k;
      }
    }
    std::sort(now.begin(), now.end(), [](const Pending& a, const Pending& b) { return a.port < b.port; });
    for (const auto& item : now) {
      Request& req = *item.req;
      Cycle at = t;
      for (const SyncStep& s : L_.response_path(g, item.port, req)) {
        Rt& r = routers_[s.uid];
        const auto o = static_cast<std::size_t>(s.out);
        const Cycle wait = r.busy[o] > at ? r.busy[o] - at : 0;
        const Cycle base = r.spec.latency_of(s.out);
        const Cycle dur = ceil_div(leg_payload_bytes(req, req.leg), r.spec.bandwidth);
        req.latency += base + wait;
        req.duration = std::max(req.duration, dur);
        req.last_hop_wait = wait;
        r.busy[o] = at + wait + dur;
        auto& pc = r.counters.outputs[o];
        ++pc.transfers;
        pc.busy_cycles += dur;
        pc.wait_cycles += wait;
        if (wait > 0) ++pc.conflict_cycles;
        if (opts_.path_trace)
          req.path.push_back({s.uid, static_cast<std::uint16_t>(s.out), at, at + wait, at + wait + base, base, wait, dur});
        note({at, s.uid, req.id, TracePhase::enqueue});
        note({at + wait, s.uid, req.id, TracePhase::arbitrate});
        note({at + wait + base, s.uid, req.id, TracePhase::dispatch});
        at += wait + base;
      }
      const Cycle delivered = at + req.duration - 1;
      req.delivered_at = delivered;
      round_trip_.add(delivered - req.issued_at);
      one_way_.add(req.request_latency);
      Pe& p = pes_[req.initiator];
      p.arriving.emplace_back(delivered, req.op_index);
      p.arriving_req.push_back(&req);
    }
  }

  Layout L_;
  ResolvedWorkload work_;
  std::uint64_t seed_;
  SimOptions opts_;
  std::string hash_;
  RemapSchedule schedule_;

  std::deque<Request> requests_;
  std::vector<Rt> routers_;
  std::vector<Bk> banks_;
  std::vector<std::vector<Pending>> pending_;
  std::vector<Pe> pes_;
  std::vector<std::uint32_t> bar_need_;
  std::vector<std::uint32_t> bar_count_;
  std::vector<Cycle> bar_release_;
  std::vector<WindowedBusy> channels_;
  LatencyHistogram round_trip_;
  LatencyHistogram one_way_;
  TraceLog trace_;

  Cycle cycle_ = 0;
  Cycle total_ = 0;
  RunStatus status_ = RunStatus::finished;
};

/// Outcome of running one scenario through both simulators.
struct OracleVerdict {
  bool match = false;
  Cycle engine_cycles = 0;
  Cycle oracle_cycles = 0;
  std::string detail;  // first divergence, empty on match
};

/// First point where two traces disagree, as "cycle N, component X: ...".
inline std::string first_divergence(const TraceLog& a, const TraceLog& b, const Layout& L) {
  auto name = [&L](std::uint32_t comp) {
    if (comp < L.router_count()) return L.name(comp);
    if (comp < L.router_count() + L.bank_count()) return "bank" + std::to_string(comp - L.router_count());
    return "pe" + std::to_string(comp - L.router_count() - L.bank_count());
  };
  const auto sa = a.sorted_states(), sb = b.sorted_states();
  const auto ra = a.canonical(), rb = b.canonical();
  std::string best;
  Cycle best_cycle = kNever;
  for (std::size_t i = 0; i < std::max(sa.size(), sb.size()); ++i) {
    if (i < sa.size() && i < sb.size() && sa[i] == sb[i]) continue;
    const PeStateRecord& r = i < sa.size() ? sa[i] : sb[i];
    std::ostringstream os;
    os << "cycle " << r.cycle << ", component pe" << r.pe << ": engine "
       << (i < sa.size() ? std::string(pe_state_name(sa[i].state)) : "<none>") << ", oracle "
       << (i < sb.size() ? std::string(pe_state_name(sb[i].state)) : "<none>");
    best = os.str();
    best_cycle = r.cycle;
    break;
  }
  for (std::size_t i = 0; i < std::max(ra.size(), rb.size()); ++i) {
    if (i < ra.size() && i < rb.size() && ra[i] == rb[i]) continue;
    const TraceRecord& r = i < ra.size() ? ra[i] : rb[i];
    if (r.timestamp < best_cycle) {
      std::ostringstream os;
      os << "cycle " << r.timestamp << ", component " << name(r.component) << ": transfer event mismatch";
      best = os.str();
    }
    break;
  }
  return best;
}

/// Runs the event-driven System and the Oracle on one scenario and compares
/// total cycles and every counter of the two reports.
inline OracleVerdict compare_with_oracle(const TopologyConfig& topo, const ResolvedWorkload& work,
                                         const RemapperConfig& remap, std::uint64_t seed, SimOptions opts = {}) {
  opts.trace = true;
  System sys(topo, work, remap, seed, opts);
  sys.run();
  Oracle ref(topo, work, remap, seed, opts);
  ref.run();
  const ProfileReport a = sys.report(), b = ref.report();
  OracleVerdict v;
  v.engine_cycles = a.total_cycles;
  v.oracle_cycles = b.total_cycles;
  v.match = report_json_string(a) == report_json_string(b);
  if (!v.match) {
    v.detail = first_divergence(sys.trace(), ref.trace(), sys.layout());
    if (v.detail.empty()) v.detail = "reports differ but traces agree";
  }
  return v;
}

}  // namespace spmsim
