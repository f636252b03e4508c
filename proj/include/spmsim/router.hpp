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

// The generic router: an all-to-all switchbox with configurable port counts,
// routing, round-robin arbitration, bandwidth and base latency. Every hop
// applies the same per-hop update:
//
//   port     = route(request)
//   L        = base_latency(port) + arbitration_delay
//   D        = ceil(leg payload bytes / bandwidth)
//   latency += L;  duration = max(duration, D)
//   update state (round-robin pointer, busy_until), then dispatch
//
// AsyncRouter buffers requests in per-input queues and arbitrates once per
// cycle in its own event; SyncRouter resolves a hop inside the caller's
// event with busy_until bookkeeping only.

#pragma once

#include <algorithm>
#include <cassert>
#include <cstdint>
#include <deque>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spmsim/engine.hpp"
#include "spmsim/request.hpp"
#include "spmsim/trace.hpp"
#include "spmsim/types.hpp"

namespace spmsim {

enum class RoutingPolicy { interleaved_address, xy_mesh, fixed_port };
enum class ArbitrationPolicy { round_robin };
enum class DispatchMode { synchronous, asynchronous };

/// When the round-robin priority moves: after each grant, or every cycle.
enum class RrUpdate { on_grant, per_cycle };

struct RouterSpec {
  std::string name = "router";
  int inputs = 1;
  int outputs = 1;
  std::uint32_t bandwidth = 4;  // bytes per cycle per output
  Cycle base_latency = 1;
  std::vector<Cycle> output_latency;  // per-output override; empty = base_latency everywhere
  RoutingPolicy routing = RoutingPolicy::fixed_port;
  ArbitrationPolicy arbitration = ArbitrationPolicy::round_robin;
  DispatchMode dispatch_mode = DispatchMode::asynchronous;
  int queue_capacity = 2;
  RrUpdate rr_update = RrUpdate::on_grant;

  void validate() const {
    if (inputs < 1) throw ConfigError(name + ".inputs", "must be >= 1");
    if (outputs < 1) throw ConfigError(name + ".outputs", "must be >= 1");
    if (bandwidth < 1) throw ConfigError(name + ".bandwidth", "must be >= 1");
    if (queue_capacity < 1) throw ConfigError(name + ".queue_capacity", "must be >= 1");
    if (!output_latency.empty() && output_latency.size() != static_cast<std::size_t>(outputs))
      throw ConfigError(name + ".output_latency", "needs one entry per output");
  }

  Cycle latency_of(int out) const {
    return output_latency.empty() ? base_latency : output_latency[static_cast<std::size_t>(out)];
  }
};

/// Round-robin grant: the first candidate at or after `start`, wrapping
/// modulo n. `candidates` holds input indices in ascending order.
inline int rr_pick(std::span<const int> candidates, int start, int n) {
  assert(!candidates.empty());
  int best = candidates.front();
  int best_dist = n;
  for (int c : candidates) {
    const int dist = ((c - start) % n + n) % n;
    if (dist < best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

struct PortCounters {
  std::uint64_t transfers = 0;
  std::uint64_t busy_cycles = 0;
  std::uint64_t wait_cycles = 0;      // summed arbitration delay of granted requests
  std::uint64_t conflict_cycles = 0;  // cycles with >= 2 inputs requesting (sync: hops that waited)
  std::uint64_t blocked_cycles = 0;   // free but downstream full

  friend bool operator==(const PortCounters&, const PortCounters&) = default;
};

struct QueueCounters {
  std::uint64_t enqueues = 0;
  std::uint64_t max_occupancy = 0;
  std::vector<std::uint64_t> occupancy_histogram;  // occupied slots right after each enqueue

  friend bool operator==(const QueueCounters&, const QueueCounters&) = default;
};

struct RouterCounters {
  std::vector<PortCounters> outputs;
  std::vector<QueueCounters> inputs;
  std::uint64_t port_conflicts = 0;         // requesting inputs not granted, summed over cycles
  std::uint64_t peak_port_conflicts = 0;    // max of that count in a single cycle
  std::uint64_t peak_remote_conflicts = 0;  // same, restricted to inputs marked remote

  friend bool operator==(const RouterCounters&, const RouterCounters&) = default;
};

/// Busy cycles bucketed into fixed windows (temporal utilization).
class WindowedBusy {
 public:
  explicit WindowedBusy(Cycle window = 256) : window_(window) {}

  void add(Cycle start, Cycle length) {
    while (length > 0) {
      const std::size_t bin = start / window_;
      if (bins_.size() <= bin) bins_.resize(bin + 1, 0);
      const Cycle room = window_ - start % window_;
      const Cycle take = std::min(room, length);
      bins_[bin] += take;
      start += take;
      length -= take;
    }
  }

  Cycle window() const noexcept { return window_; }
  const std::vector<std::uint64_t>& bins() const noexcept { return bins_; }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto b : bins_) s += b;
    return s;
  }

 private:
  Cycle window_;
  std::vector<std::uint64_t> bins_;
};

/// Anything that can take a request from an upstream output.
class RequestSink {
 public:
  virtual ~RequestSink() = default;
  virtual bool can_accept(int port, Cycle now) const = 0;
  /// `ready` is when the head reaches this sink; always > now for router links.
  virtual void accept(int port, Request& req, Cycle ready, Cycle now) = 0;
};

class AsyncRouter final : public Component, public RequestSink {
 public:
  using RouteFn = std::function<int(const Request&)>;

  struct Link {
    RequestSink* sink = nullptr;
    int port = 0;
    int channel = -1;  // stamped on the request when >= 0
  };
  /// Dynamic output binding (remap switch). Return a null sink to use the static link.
  using Resolver = std::function<Link(int out, Cycle now)>;

  struct Upstream {
    std::function<void(Cycle)> poll;      // lets a zero-distance upstream act before arbitration
    std::function<void(Cycle)> on_space;  // a slot frees up at the given cycle
  };

  AsyncRouter(Engine& engine, RouterSpec spec, RouteFn route, std::uint32_t uid = 0)
      : engine_(engine), spec_(std::move(spec)), route_(std::move(route)), uid_(uid) {
    spec_.validate();
    const auto ni = static_cast<std::size_t>(spec_.inputs);
    const auto no = static_cast<std::size_t>(spec_.outputs);
    queues_.resize(ni);
    frees_.resize(ni);
    upstreams_.resize(ni);
    remote_.assign(ni, false);
    links_.resize(no);
    usage_.assign(no, nullptr);
    busy_until_.assign(no, 0);
    rr_.assign(no, spec_.inputs - 1);
    candidates_.resize(no);
    counters_.outputs.resize(no);
    counters_.inputs.resize(ni);
    engine_.add(*this);
  }

  AsyncRouter(const AsyncRouter&) = delete;
  AsyncRouter& operator=(const AsyncRouter&) = delete;

  const RouterSpec& spec() const noexcept { return spec_; }
  std::uint32_t uid() const noexcept { return uid_; }
  const RouterCounters& counters() const noexcept { return counters_; }

  void connect(int out, RequestSink& sink, int port) { links_.at(static_cast<std::size_t>(out)) = Link{&sink, port, -1}; }
  void set_resolver(Resolver r) { resolver_ = std::move(r); }
  void set_upstream(int in, Upstream up) { upstreams_.at(static_cast<std::size_t>(in)) = std::move(up); }
  void set_remote_input(int in, bool remote) { remote_.at(static_cast<std::size_t>(in)) = remote; }
  void set_usage(int out, WindowedBusy* usage) { usage_.at(static_cast<std::size_t>(out)) = usage; }
  void set_trace(TraceLog* log, bool path_trace) {
    trace_ = log;
    path_trace_ = path_trace;
  }

  int rr_pointer(int out) const { return rr_[static_cast<std::size_t>(out)]; }
  Cycle busy_until(int out) const { return busy_until_[static_cast<std::size_t>(out)]; }
  std::size_t queue_length(int in) const { return queues_[static_cast<std::size_t>(in)].size(); }

  bool idle() const {
    return std::all_of(queues_.begin(), queues_.end(), [](const auto& q) { return q.empty(); });
  }

  // RequestSink -------------------------------------------------------------

  bool can_accept(int port, Cycle now) const override {
    const auto p = static_cast<std::size_t>(port);
    return occupied(p, now) < static_cast<std::size_t>(spec_.queue_capacity);
  }

  void accept(int port, Request& req, Cycle ready, Cycle now) override {
    assert(can_accept(port, now));
    const int out = route_(req);
    if (out < 0 || out >= spec_.outputs)
      throw RoutingError(spec_.name, req.addr, "route selected invalid port " + std::to_string(out));
    const auto p = static_cast<std::size_t>(port);
    queues_[p].push_back(Entry{&req, ready, out});
    // Occupancy counts slots whose credit has not yet returned upstream, so it
    // does not depend on the order of same-cycle handlers.
    const std::size_t occ = occupied(p, now);
    auto& qc = counters_.inputs[p];
    ++qc.enqueues;
    qc.max_occupancy = std::max<std::uint64_t>(qc.max_occupancy, occ);
    if (qc.occupancy_histogram.size() <= occ) qc.occupancy_histogram.resize(occ + 1, 0);
    ++qc.occupancy_histogram[occ];
    if (trace_) trace_->record({ready, uid_, req.id, TracePhase::enqueue});
    wake(ready);
  }

  void on_event(Cycle now, std::uint64_t) override {
    pending_.erase(now);
    tick(now);
  }

  /// One arbitration round. Idempotent within a cycle.
  void tick(Cycle t) {
    if (ticked_ && last_tick_ == t) return;
    ticked_ = true;
    last_tick_ = t;
    in_tick_ = true;
    for (auto& up : upstreams_)
      if (up.poll) up.poll(t);

    touched_.clear();
    for (int in = 0; in < spec_.inputs; ++in) {
      const auto& q = queues_[static_cast<std::size_t>(in)];
      if (q.empty() || q.front().ready > t) continue;
      auto& c = candidates_[static_cast<std::size_t>(q.front().out)];
      if (c.empty()) touched_.push_back(q.front().out);
      c.push_back(in);
    }
    std::sort(touched_.begin(), touched_.end());

    std::uint64_t losers = 0;
    std::uint64_t remote_losers = 0;
    for (int out : touched_) {
      auto& cands = candidates_[static_cast<std::size_t>(out)];
      auto& pc = counters_.outputs[static_cast<std::size_t>(out)];
      if (cands.size() >= 2) ++pc.conflict_cycles;
      int granted = -1;
      if (busy_until_[static_cast<std::size_t>(out)] <= t) {
        const Link link = resolve(out, t);
        if (!link.sink->can_accept(link.port, t)) {
          ++pc.blocked_cycles;
        } else {
          const int start = spec_.rr_update == RrUpdate::per_cycle
                                ? static_cast<int>(t % static_cast<Cycle>(spec_.inputs))
                                : (rr_[static_cast<std::size_t>(out)] + 1) % spec_.inputs;
          granted = rr_pick(cands, start, spec_.inputs);
          grant(out, granted, link, t);
        }
      }
      for (int in : cands) {
        if (in == granted) continue;
        ++losers;
        if (remote_[static_cast<std::size_t>(in)]) ++remote_losers;
      }
      cands.clear();
    }
    counters_.port_conflicts += losers;
    counters_.peak_port_conflicts = std::max(counters_.peak_port_conflicts, losers);
    counters_.peak_remote_conflicts = std::max(counters_.peak_remote_conflicts, remote_losers);
    in_tick_ = false;

    Cycle next = kNever;
    for (const auto& q : queues_)
      if (!q.empty()) next = std::min(next, std::max(t + 1, q.front().ready));
    if (next != kNever) wake(next);
  }

 private:
  struct Entry {
    Request* req;
    Cycle ready;
    int out;
  };

  /// Queued entries plus slots freed this cycle (credits return one cycle later).
  std::size_t occupied(std::size_t p, Cycle now) const {
    auto& frees = frees_[p];
    while (!frees.empty() && frees.front() <= now) frees.pop_front();
    return queues_[p].size() + frees.size();
  }

  Link resolve(int out, Cycle t) const {
    if (resolver_) {
      Link l = resolver_(out, t);
      if (l.sink) return l;
    }
    const Link& l = links_[static_cast<std::size_t>(out)];
    if (!l.sink) throw RoutingError(spec_.name, 0, "output " + std::to_string(out) + " is not connected");
    return l;
  }

  void grant(int out, int in, const Link& link, Cycle t) {
    const auto o = static_cast<std::size_t>(out);
    auto& q = queues_[static_cast<std::size_t>(in)];
    const Entry e = q.front();
    q.pop_front();
    frees_[static_cast<std::size_t>(in)].push_back(t + 1);
    if (const auto& up = upstreams_[static_cast<std::size_t>(in)]; up.on_space) up.on_space(t + 1);

    Request& r = *e.req;
    const Cycle wait = t - e.ready;
    const Cycle base = spec_.latency_of(out);
    const Cycle d = transfer_duration(r, spec_.bandwidth);
    r.latency += base + wait;
    r.duration = std::max(r.duration, d);
    r.last_hop_wait = wait;
    if (link.channel >= 0) r.channel = link.channel;
    if (path_trace_)
      r.path.push_back(HopRecord{uid_, static_cast<std::uint16_t>(out), e.ready, t, t + base, base, wait, d});
    if (trace_) {
      trace_->record({t, uid_, r.id, TracePhase::arbitrate});
      trace_->record({t + base, uid_, r.id, TracePhase::dispatch});
    }

    busy_until_[o] = t + d;
    if (spec_.rr_update == RrUpdate::on_grant) rr_[o] = in;
    auto& pc = counters_.outputs[o];
    ++pc.transfers;
    pc.busy_cycles += d;
    pc.wait_cycles += wait;
    if (usage_[o]) usage_[o]->add(t, d);

    link.sink->accept(link.port, r, t + base, t);
  }

  void wake(Cycle at) {
    if (ticked_ && at == last_tick_) {
      // Only a polled upstream can push for the current cycle, and polling
      // happens before candidates are gathered.
      assert(in_tick_);
      return;
    }
    if (!pending_.insert(at).second) return;
    engine_.schedule_at(component_id(), 0, at);
  }

  Engine& engine_;
  RouterSpec spec_;
  RouteFn route_;
  std::uint32_t uid_;

  std::vector<std::deque<Entry>> queues_;
  mutable std::vector<std::deque<Cycle>> frees_;  // credits in flight back to the upstream
  std::vector<Upstream> upstreams_;
  std::vector<bool> remote_;
  std::vector<Link> links_;
  Resolver resolver_;
  std::vector<WindowedBusy*> usage_;

  std::vector<Cycle> busy_until_;
  std::vector<int> rr_;
  std::vector<std::vector<int>> candidates_;
  std::vector<int> touched_;
  std::set<Cycle> pending_;
  Cycle last_tick_ = 0;
  bool ticked_ = false;
  bool in_tick_ = false;

  RouterCounters counters_;
  TraceLog* trace_ = nullptr;
  bool path_trace_ = false;
};

/// Router resolved within the caller's event: congestion is modeled only
/// through per-output busy_until serialization, never by queuing events.
class SyncRouter {
 public:
  explicit SyncRouter(RouterSpec spec, std::uint32_t uid = 0) : spec_(std::move(spec)), uid_(uid) {
    spec_.dispatch_mode = DispatchMode::synchronous;
    spec_.validate();
    busy_until_.assign(static_cast<std::size_t>(spec_.outputs), 0);
    counters_.outputs.resize(static_cast<std::size_t>(spec_.outputs));
  }

  const RouterSpec& spec() const noexcept { return spec_; }
  std::uint32_t uid() const noexcept { return uid_; }
  const RouterCounters& counters() const noexcept { return counters_; }
  Cycle busy_until(int out) const { return busy_until_[static_cast<std::size_t>(out)]; }
  void set_trace(TraceLog* log, bool path_trace) {
    trace_ = log;
    path_trace_ = path_trace;
  }

  Cycle arbitration_delay(int out, Cycle arrive) const {
    const Cycle b = busy_until_[static_cast<std::size_t>(out)];
    return b > arrive ? b - arrive : 0;
  }

  /// Applies the per-hop update for a request whose head reaches this router
  /// at `arrive`; returns when the head reaches the next hop.
  Cycle process_hop(int out, Request& r, Cycle arrive) {
    if (out < 0 || out >= spec_.outputs)
      throw RoutingError(spec_.name, r.addr, "invalid output " + std::to_string(out));
    const auto o = static_cast<std::size_t>(out);
    const Cycle wait = arbitration_delay(out, arrive);
    const Cycle base = spec_.latency_of(out);
    const Cycle d = transfer_duration(r, spec_.bandwidth);
    r.latency += base + wait;
    r.duration = std::max(r.duration, d);
    r.last_hop_wait = wait;
    busy_until_[o] = arrive + wait + d;
    auto& pc = counters_.outputs[o];
    ++pc.transfers;
    pc.busy_cycles += d;
    pc.wait_cycles += wait;
    if (wait > 0) ++pc.conflict_cycles;
    if (path_trace_)
      r.path.push_back(HopRecord{uid_, static_cast<std::uint16_t>(out), arrive, arrive + wait, arrive + base + wait,
                                 base, wait, d});
    if (trace_) {
      trace_->record({arrive, uid_, r.id, TracePhase::enqueue});
      trace_->record({arrive + wait, uid_, r.id, TracePhase::arbitrate});
      trace_->record({arrive + wait + base, uid_, r.id, TracePhase::dispatch});
    }
    return arrive + base + wait;
  }

 private:
  RouterSpec spec_;
  std::uint32_t uid_;
  std::vector<Cycle> busy_until_;
  RouterCounters counters_;
  TraceLog* trace_ = nullptr;
  bool path_trace_ = false;
};

struct SyncHop {
  SyncRouter* router = nullptr;
  int port = 0;
};

/// Nested synchronous dispatch: walks the whole path inside the current
/// event and returns when the head reaches the end of the path.
inline Cycle dispatch_sync(std::span<const SyncHop> path, Request& r, Cycle now) {
  Cycle at = now;
  for (const auto& hop : path) at = hop.router->process_hop(hop.port, r, at);
  return at;
}

}  // namespace spmsim
