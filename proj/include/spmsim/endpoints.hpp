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

// Processing elements (abstract LSU traffic sources) and SPM banks.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <set>
#include <utility>
#include <vector>

#include "spmsim/engine.hpp"
#include "spmsim/request.hpp"
#include "spmsim/router.hpp"
#include "spmsim/trace.hpp"
#include "spmsim/traffic.hpp"
#include "spmsim/types.hpp"

namespace spmsim {

/// Operation counts and the per-cycle state partition of one PE.
struct PeCounters {
  std::uint64_t reads = 0;
  std::uint64_t writes = 0;
  std::uint64_t atomics = 0;
  std::uint64_t responses = 0;
  std::uint64_t max_inflight = 0;
  // active + lsu_full + load_use + barrier + idle == total cycles
  std::uint64_t active = 0;
  std::uint64_t lsu_full = 0;
  std::uint64_t load_use = 0;
  std::uint64_t barrier = 0;
  std::uint64_t idle = 0;
  Cycle done_at = 0;

  std::uint64_t issued() const { return reads + writes + atomics; }
  std::uint64_t accounted() const { return active + lsu_full + load_use + barrier + idle; }

  void count(PeState s, std::uint64_t n) {
    switch (s) {
      case PeState::active: active += n; break;
      case PeState::lsu_full: lsu_full += n; break;
      case PeState::load_use: load_use += n; break;
      case PeState::barrier: barrier += n; break;
      case PeState::idle: idle += n; break;
      case PeState::done: break;
    }
  }

  friend bool operator==(const PeCounters&, const PeCounters&) = default;
};

struct BankCounters {
  std::uint64_t accesses = 0;
  std::uint64_t busy_cycles = 0;
  std::uint64_t conflict_wait_cycles = 0;  // bank-port arbitration wait + wait for the bank itself
  std::uint64_t conflicted_accesses = 0;

  friend bool operator==(const BankCounters&, const BankCounters&) = default;
};

/// Bank occupancy for one access: one cycle per word, plus the atomic penalty.
inline Cycle bank_service_time(const Request& r, Cycle service_cycles, Cycle atomic_extra) {
  return service_cycles * ceil_div(r.size, kWordBytes) + (r.kind == OpKind::atomic ? atomic_extra : 0);
}

/// Index of the barrier that must be passed before operation `n`, or -1.
inline long barrier_before(std::uint64_t n, std::uint32_t interval) {
  if (interval == 0 || n == 0 || n % interval != 0) return -1;
  return static_cast<long>(n / interval) - 1;
}

inline std::size_t barrier_count(std::uint64_t ops, std::uint32_t interval) {
  if (interval == 0 || ops == 0) return 0;
  return static_cast<std::size_t>((ops - 1) / interval);
}

/// Sequence of cluster-wide barriers. Barrier k releases every participant
/// one cycle after the last one arrives.
class Barrier {
 public:
  Barrier() = default;
  explicit Barrier(std::vector<std::uint32_t> participants)
      : participants_(std::move(participants)),
        arrived_(participants_.size(), 0),
        release_(participants_.size(), kNever) {}

  void set_on_release(std::function<void(std::size_t, Cycle)> fn) { on_release_ = std::move(fn); }

  void arrive(std::size_t k, Cycle t) {
    if (++arrived_.at(k) == participants_[k]) {
      release_[k] = t + 1;
      if (on_release_) on_release_(k, t + 1);
    }
  }

  Cycle release(std::size_t k) const { return release_.at(k); }
  std::size_t size() const noexcept { return participants_.size(); }

 private:
  std::vector<std::uint32_t> participants_;
  std::vector<std::uint32_t> arrived_;
  std::vector<Cycle> release_;
  std::function<void(std::size_t, Cycle)> on_release_;
};

/// Participant count of each barrier for a set of per-PE operation lists.
inline std::vector<std::uint32_t> barrier_participants(const std::vector<std::vector<Op>>& ops,
                                                       std::uint32_t interval) {
  std::vector<std::uint32_t> out;
  for (const auto& list : ops) {
    const std::size_t n = barrier_count(list.size(), interval);
    if (out.size() < n) out.resize(n, 0);
    for (std::size_t k = 0; k < n; ++k) ++out[k];
  }
  return out;
}

/// A PE modeled as an in-order stream of memory operations with a bounded
/// number of outstanding transactions. State is advanced lazily: every cycle
/// at which the outcome could change is a scheduled wake-up, and the cycles in
/// between inherit the state of the last evaluated cycle.
class PeModel final : public Component {
 public:
  struct Params {
    std::uint32_t id = 0;
    std::uint32_t max_outstanding = 8;
    std::uint32_t barrier_interval = 0;
    std::uint32_t trace_component = 0;
  };

  PeModel(Engine& engine, Params params, std::vector<Op> ops, std::vector<bool> is_local, RequestPool& pool)
      : engine_(engine), p_(params), ops_(std::move(ops)), local_(std::move(is_local)), pool_(pool) {
    completed_.assign(ops_.size(), false);
    engine_.add(*this);
  }

  PeModel(const PeModel&) = delete;
  PeModel& operator=(const PeModel&) = delete;

  /// First hops: the tile crossbar for local banks, the tile egress otherwise.
  void wire(RequestSink* local, RequestSink* remote, int port) {
    local_sink_ = local;
    remote_sink_ = remote;
    port_ = port;
  }
  void set_barrier(Barrier* b) { barrier_ = b; }
  void set_trace(TraceLog* log) { trace_ = log; }

  void start() { wake(0); }

  std::uint32_t id() const noexcept { return p_.id; }
  bool done() const noexcept { return done_; }
  std::uint64_t inflight() const noexcept { return inflight_; }
  std::size_t next_op() const noexcept { return next_; }
  std::size_t op_count() const noexcept { return ops_.size(); }
  const PeCounters& counters() const noexcept { return c_; }

  /// Brings the PE up to cycle t (idempotent within a cycle).
  void advance(Cycle t) {
    if (done_ || (evaluated_ && t <= last_)) return;
    if (evaluated_ && t > last_ + 1) c_.count(state_, t - last_ - 1);
    evaluated_ = true;
    last_ = t;
    step(t);
  }

  void on_event(Cycle now, std::uint64_t) override {
    pending_.erase(now);
    advance(now);
  }

  void deliver(Request& r, Cycle at) {
    deliveries_.push({at, r.op_index, &r});
    wake(at);
  }

  void wake(Cycle at) {
    if (done_ || (evaluated_ && at <= last_)) return;
    if (!pending_.insert(at).second) return;
    engine_.schedule_at(component_id(), 0, at);
  }

  /// Closes the books at the end of the run.
  void finalize(Cycle total) {
    if (done_) {
      c_.idle += total - c_.done_at;
      return;
    }
    if (evaluated_ && total > last_ + 1) c_.count(state_, total - last_ - 1);
  }

 private:
  struct Delivery {
    Cycle at;
    std::uint32_t op;
    Request* req;
    bool operator>(const Delivery& o) const { return at != o.at ? at > o.at : op > o.op; }
  };

  void step(Cycle t) {
    while (!deliveries_.empty() && deliveries_.top().at <= t) {
      const Delivery d = deliveries_.top();
      deliveries_.pop();
      --inflight_;
      ++c_.responses;
      completed_[d.op] = true;
      if (trace_) trace_->record({t, p_.trace_component, d.req->id, TracePhase::respond});
    }

    const long bar = next_ < ops_.size() ? barrier_before(next_, p_.barrier_interval) : -1;
    if (bar >= 0 && passed_ <= static_cast<std::size_t>(bar)) {
      if (!arrived_ && inflight_ == 0) {
        arrived_ = true;
        barrier_->arrive(static_cast<std::size_t>(bar), t);
      }
      if (arrived_ && barrier_->release(static_cast<std::size_t>(bar)) <= t) {
        arrived_ = false;
        ++passed_;
      } else {
        settle(PeState::barrier, t);
        return;
      }
    }

    if (next_ == ops_.size()) {
      if (inflight_ == 0) {
        done_ = true;
        c_.done_at = t;
        note(PeState::done, t);
        return;
      }
      settle(PeState::idle, t);
      return;
    }

    const Op& op = ops_[next_];
    const Cycle earliest = std::max(op.ready_at, issued_any_ ? last_issue_ + 1 + op.gap : Cycle{0});
    if (earliest > t) {
      wake(earliest);
      settle(PeState::idle, t);
      return;
    }
    if (op.dependent && !completed_[next_ - 1]) {
      settle(PeState::load_use, t);
      return;
    }
    RequestSink* sink = local_[next_] ? local_sink_ : remote_sink_;
    if (inflight_ >= p_.max_outstanding || !sink->can_accept(port_, t)) {
      settle(PeState::lsu_full, t);
      return;
    }

    Request& r = pool_.create();
    r.id = make_request_id(p_.id, static_cast<std::uint32_t>(next_));
    r.initiator = p_.id;
    r.addr = op.addr;
    r.kind = op.kind;
    r.size = op.size;
    r.issued_at = t;
    r.op_index = static_cast<std::uint32_t>(next_);
    switch (op.kind) {
      case OpKind::read: ++c_.reads; break;
      case OpKind::write: ++c_.writes; break;
      case OpKind::atomic: ++c_.atomics; break;
    }
    ++next_;
    ++inflight_;
    c_.max_inflight = std::max<std::uint64_t>(c_.max_inflight, inflight_);
    issued_any_ = true;
    last_issue_ = t;
    sink->accept(port_, r, t, t);
    settle(PeState::active, t);
    wake(t + 1);
  }

  void settle(PeState s, Cycle t) {
    state_ = s;
    c_.count(s, 1);
    note(s, t);
  }

  void note(PeState s, Cycle t) {
    if (trace_ && (!noted_ || s != last_noted_)) trace_->record_state({t, p_.id, s});
    noted_ = true;
    last_noted_ = s;
  }

  Engine& engine_;
  Params p_;
  std::vector<Op> ops_;
  std::vector<bool> local_;
  RequestPool& pool_;
  RequestSink* local_sink_ = nullptr;
  RequestSink* remote_sink_ = nullptr;
  int port_ = 0;
  Barrier* barrier_ = nullptr;
  TraceLog* trace_ = nullptr;

  std::vector<bool> completed_;
  std::priority_queue<Delivery, std::vector<Delivery>, std::greater<>> deliveries_;
  std::set<Cycle> pending_;
  std::size_t next_ = 0;
  std::uint64_t inflight_ = 0;
  Cycle last_issue_ = 0;
  bool issued_any_ = false;
  std::size_t passed_ = 0;
  bool arrived_ = false;
  bool done_ = false;

  bool evaluated_ = false;
  Cycle last_ = 0;
  PeState state_ = PeState::idle;
  bool noted_ = false;
  PeState last_noted_ = PeState::idle;

  PeCounters c_;
};

/// Single-ported SPM bank. Service starts once the whole request has arrived
/// and the previous access has finished.
class BankModel final : public Component, public RequestSink {
 public:
  /// Called at service start with the cycle the response head is ready.
  using Respond = std::function<void(Request&, Cycle ready, Cycle now)>;

  BankModel(Engine& engine, std::uint32_t index, Cycle service_cycles, Cycle atomic_extra, Respond respond,
            std::uint32_t trace_component = 0)
      : engine_(engine),
        index_(index),
        service_(service_cycles),
        atomic_extra_(atomic_extra),
        respond_(std::move(respond)),
        trace_component_(trace_component) {
    engine_.add(*this);
  }

  BankModel(const BankModel&) = delete;
  BankModel& operator=(const BankModel&) = delete;

  void set_trace(TraceLog* log) { trace_ = log; }
  std::uint32_t index() const noexcept { return index_; }
  const BankCounters& counters() const noexcept { return c_; }
  Cycle busy_until() const noexcept { return busy_until_; }

  bool can_accept(int, Cycle) const override { return true; }

  void accept(int, Request& r, Cycle ready, Cycle) override {
    const Cycle tail = ready + r.duration - 1;
    const Cycle start = std::max(tail, busy_until_);
    const Cycle svc = bank_service_time(r, service_, atomic_extra_);
    busy_until_ = start + svc;
    r.bank_head_at = ready;
    const Cycle wait = r.last_hop_wait + (start - tail);
    ++c_.accesses;
    c_.busy_cycles += svc;
    c_.conflict_wait_cycles += wait;
    if (wait > 0) ++c_.conflicted_accesses;
    fifo_.push_back({&r, start, start + svc});
    engine_.schedule_at(component_id(), 0, start);
  }

  void on_event(Cycle now, std::uint64_t) override {
    const Slot s = fifo_.front();
    fifo_.pop_front();
    Request& r = *s.req;
    r.request_latency = r.latency;
    r.request_duration = r.duration;
    r.request_hops = static_cast<std::uint32_t>(r.path.size());
    r.served_at = now;
    r.leg = Leg::response;
    r.latency = 0;
    r.duration = 0;
    if (trace_) trace_->record({now, trace_component_, r.id, TracePhase::serve});
    respond_(r, s.done, now);
  }

 private:
  struct Slot {
    Request* req;
    Cycle start;
    Cycle done;
  };

  Engine& engine_;
  std::uint32_t index_;
  Cycle service_;
  Cycle atomic_extra_;
  Respond respond_;
  std::uint32_t trace_component_;
  TraceLog* trace_ = nullptr;
  Cycle busy_until_ = 0;
  std::deque<Slot> fifo_;
  BankCounters c_;
};

}  // namespace spmsim
