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

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <string_view>
#include <vector>

#include "spmsim/types.hpp"

namespace spmsim {

inline constexpr std::uint32_t kWordBytes = 4;

enum class OpKind : std::uint8_t { read, write, atomic };

constexpr char op_letter(OpKind k) {
  switch (k) {
    case OpKind::read: return 'R';
    case OpKind::write: return 'W';
    case OpKind::atomic: return 'A';
  }
  return '?';
}

/// Which of the two physically separate networks a request is on.
enum class Leg : std::uint8_t { request, response };

/// One traversed hop, recorded when path tracing is on.
struct HopRecord {
  std::uint32_t router = 0;  // global router index (see Layout)
  std::uint16_t port = 0;    // output port taken
  Cycle enqueue = 0;         // head arrived at this router
  Cycle arbitrate = 0;       // output granted
  Cycle dispatch = 0;        // head available at the next hop
  Cycle base = 0;
  Cycle wait = 0;            // arbitration/congestion delay
  Cycle duration = 0;        // transfer duration at this hop
};

struct Request {
  RequestId id = 0;
  std::uint32_t initiator = 0;  // global PE index
  std::uint32_t addr = 0;
  OpKind kind = OpKind::read;
  std::uint32_t size = kWordBytes;
  Leg leg = Leg::request;

  // Timing metadata for the leg currently being traversed.
  Cycle latency = 0;
  Cycle duration = 0;
  Cycle issued_at = 0;

  // Request-leg values frozen when the bank turns the request around.
  Cycle request_latency = 0;
  Cycle request_duration = 0;
  Cycle bank_head_at = 0;  // head reached the bank port
  Cycle served_at = 0;     // bank service start
  std::uint32_t request_hops = 0;  // path entries belonging to the request leg
  Cycle delivered_at = 0;

  std::int32_t channel = -1;  // mesh channel carrying an inter-group request
  std::uint32_t op_index = 0;
  Cycle last_hop_wait = 0;

  std::vector<HopRecord> path;
};

/// Bytes a request occupies on the given leg: reads and atomics send a
/// header word and get data back; writes send data and get an ack word.
constexpr std::uint32_t leg_payload_bytes(const Request& r, Leg leg) {
  const bool carries_data = (leg == Leg::request) ? r.kind == OpKind::write : r.kind != OpKind::write;
  return carries_data ? r.size : kWordBytes;
}

/// ceil(bytes / bandwidth): serialization cycles for a payload.
constexpr Cycle transfer_duration(std::uint32_t bytes, std::uint32_t bandwidth) {
  return ceil_div(std::max<std::uint32_t>(bytes, 1), bandwidth);
}

constexpr Cycle transfer_duration(const Request& r, std::uint32_t bandwidth) {
  return transfer_duration(leg_payload_bytes(r, r.leg), bandwidth);
}

/// Request id derived from the initiator and its operation index, so ids do
/// not depend on the order in which same-cycle handlers run.
constexpr RequestId make_request_id(std::uint32_t pe, std::uint32_t op_index) {
  return (static_cast<RequestId>(pe) << 32) | op_index;
}

/// Stable-address request storage.
class RequestPool {
 public:
  Request& create() { return pool_.emplace_back(); }
  std::size_t size() const noexcept { return pool_.size(); }
  auto begin() const { return pool_.begin(); }
  auto end() const { return pool_.end(); }

 private:
  std::deque<Request> pool_;
};

}  // namespace spmsim
