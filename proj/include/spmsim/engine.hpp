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

// Deterministic discrete-event kernel: one clock domain, one event queue.
// Events fire in strict (fire_at, sequence) order; sequence is the global
// insertion counter, so same-cycle events run FIFO.

#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "spmsim/types.hpp"

namespace spmsim {

class Engine;

/// Anything that receives events. Handlers run only on the engine thread.
class Component {
 public:
  virtual ~Component() = default;
  virtual void on_event(Cycle now, std::uint64_t payload) = 0;
  ComponentId component_id() const noexcept { return id_; }

 private:
  friend class Engine;
  ComponentId id_ = 0;
};

struct Event {
  Cycle fire_at = 0;
  std::uint64_t sequence = 0;
  ComponentId target = 0;
  std::uint64_t payload = 0;

  friend bool operator<(const Event& a, const Event& b) {
    return a.fire_at != b.fire_at ? a.fire_at < b.fire_at : a.sequence < b.sequence;
  }
};

/// Returned by schedule(); valid for cancel() until the event fires.
struct EventHandle {
  Cycle fire_at = 0;
  std::uint64_t sequence = 0;
};

enum class RunStatus { finished, cycle_budget_exceeded };

struct RunOutcome {
  RunStatus status = RunStatus::finished;
  Cycle end_time = 0;
  std::uint64_t events_processed = 0;
  std::string census;  // filled by the caller's quiescence probe on budget overrun
};

class Engine {
 public:
  ComponentId add(Component& c) {
    c.id_ = static_cast<ComponentId>(components_.size());
    components_.push_back(&c);
    return c.id_;
  }

  Cycle now() const noexcept { return now_; }
  bool finished() const noexcept { return finished_; }
  std::size_t pending() const noexcept { return queue_.size(); }
  std::uint64_t events_processed() const noexcept { return processed_; }

  EventHandle schedule(ComponentId target, std::uint64_t payload, Cycle delay) {
    if (finished_) throw ScheduleError("schedule() after run completion");
    if (target >= components_.size()) throw ScheduleError("schedule() to unknown component");
    Event ev{now_ + delay, next_sequence_++, target, payload};
    queue_.insert(ev);
    return {ev.fire_at, ev.sequence};
  }

  EventHandle schedule_at(ComponentId target, std::uint64_t payload, Cycle when) {
    assert(when >= now_);
    return schedule(target, payload, when - now_);
  }

  /// Returns false when the event already fired or was cancelled.
  bool cancel(EventHandle h) {
    auto it = queue_.find(Event{h.fire_at, h.sequence, 0, 0});
    if (it == queue_.end()) return false;
    queue_.erase(it);
    return true;
  }

  /// Processes events with fire_at <= limit. Returns the time of the last
  /// processed event (or the current time if none ran).
  Cycle run_until(Cycle limit) {
    while (!queue_.empty()) {
      auto it = queue_.begin();
      if (it->fire_at > limit) break;
      Event ev = *it;
      queue_.erase(it);
      assert(ev.fire_at >= now_);
      now_ = ev.fire_at;
      ++processed_;
      components_[ev.target]->on_event(now_, ev.payload);
    }
    return now_;
  }

  /// Runs cycles [0, max_cycles) or until the queue drains. `quiescent`
  /// reports whether every endpoint is idle; `census` describes outstanding work.
  RunOutcome run_to_completion(Cycle max_cycles, const std::function<bool()>& quiescent,
                               const std::function<std::string()>& census = {}) {
    if (max_cycles == 0) throw ScheduleError("run_to_completion() needs max_cycles > 0");
    run_until(max_cycles - 1);
    RunOutcome out;
    out.end_time = now_;
    out.events_processed = processed_;
    if (queue_.empty() && (!quiescent || quiescent())) {
      finished_ = true;
      out.status = RunStatus::finished;
    } else {
      out.status = RunStatus::cycle_budget_exceeded;
      if (census) out.census = census();
    }
    return out;
  }

 private:
  std::vector<Component*> components_;
  std::set<Event> queue_;
  Cycle now_ = 0;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t processed_ = 0;
  bool finished_ = false;
};

}  // namespace spmsim
