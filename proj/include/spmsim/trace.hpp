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

// Transfer-event and PE-state trace records.

#pragma once

#include <algorithm>
#include <cstdint>
#include <string_view>
#include <vector>

#include "spmsim/types.hpp"

namespace spmsim {

enum class TracePhase : std::uint8_t { enqueue, arbitrate, dispatch, serve, respond };

constexpr std::string_view phase_name(TracePhase p) {
  switch (p) {
    case TracePhase::enqueue: return "enqueue";
    case TracePhase::arbitrate: return "arbitrate";
    case TracePhase::dispatch: return "dispatch";
    case TracePhase::serve: return "serve";
    case TracePhase::respond: return "respond";
  }
  return "?";
}

struct TraceRecord {
  Cycle timestamp = 0;
  std::uint32_t component = 0;
  RequestId request = 0;
  TracePhase phase = TracePhase::enqueue;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

enum class PeState : std::uint8_t { active, lsu_full, load_use, barrier, idle, done };

constexpr std::string_view pe_state_name(PeState s) {
  switch (s) {
    case PeState::active: return "active";
    case PeState::lsu_full: return "stalled(lsu-full)";
    case PeState::load_use: return "stalled(load-use)";
    case PeState::barrier: return "stalled(barrier)";
    case PeState::idle: return "idle";
    case PeState::done: return "done";
  }
  return "?";
}

struct PeStateRecord {
  Cycle cycle = 0;
  std::uint32_t pe = 0;
  PeState state = PeState::idle;

  friend bool operator==(const PeStateRecord&, const PeStateRecord&) = default;
};

/// Timestamp-ordered log. Records may arrive slightly out of order (hops
/// schedule their future dispatch); record() inserts after every entry with
/// an equal or smaller timestamp, so the log is always sorted and stable.
class TraceLog {
 public:
  void record(const TraceRecord& r) {
    if (records_.empty() || records_.back().timestamp <= r.timestamp) {
      records_.push_back(r);
      return;
    }
    auto it = std::upper_bound(records_.begin(), records_.end(), r.timestamp,
                               [](Cycle t, const TraceRecord& x) { return t < x.timestamp; });
    records_.insert(it, r);
  }
  void record_state(const PeStateRecord& r) { states_.push_back(r); }

  const std::vector<TraceRecord>& records() const noexcept { return records_; }
  const std::vector<PeStateRecord>& states() const noexcept { return states_; }

  /// PE-state records sorted by (cycle, pe); independent of handler order.
  std::vector<PeStateRecord> sorted_states() const {
    auto out = states_;
    std::stable_sort(out.begin(), out.end(), [](const PeStateRecord& a, const PeStateRecord& b) {
      return a.cycle != b.cycle ? a.cycle < b.cycle : a.pe < b.pe;
    });
    return out;
  }

  /// Transfer records in canonical order (timestamp, component, request, phase).
  std::vector<TraceRecord> canonical() const {
    auto out = records_;
    std::stable_sort(out.begin(), out.end(), [](const TraceRecord& a, const TraceRecord& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      if (a.component != b.component) return a.component < b.component;
      if (a.request != b.request) return a.request < b.request;
      return a.phase < b.phase;
    });
    return out;
  }

 private:
  std::vector<TraceRecord> records_;
  std::vector<PeStateRecord> states_;
};

}  // namespace spmsim
