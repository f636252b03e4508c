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

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace spmsim {

/// Simulated time in clock cycles of the single cluster clock.
using Cycle = std::uint64_t;

inline constexpr Cycle kNever = std::numeric_limits<Cycle>::max();

/// Index of a component registered with an Engine.
using ComponentId = std::uint32_t;

using RequestId = std::uint64_t;

/// Base of every error raised by the simulator.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid topology/workload/remapper configuration. `field()` names the offending key.
class ConfigError : public SimError {
 public:
  ConfigError(std::string field, const std::string& what)
      : SimError("config error in '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class UnmappedAddressError : public SimError {
 public:
  explicit UnmappedAddressError(std::uint64_t addr)
      : SimError("unmapped address 0x" + to_hex(addr)), addr_(addr) {}
  std::uint64_t address() const noexcept { return addr_; }

  static std::string to_hex(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    do {
      s.insert(s.begin(), digits[v & 0xf]);
      v >>= 4;
    } while (v != 0);
    return s;
  }

 private:
  std::uint64_t addr_;
};

class RoutingError : public SimError {
 public:
  RoutingError(std::string router, std::uint64_t addr, const std::string& why)
      : SimError("routing error at " + router + " for address 0x" + UnmappedAddressError::to_hex(addr) +
                 ": " + why),
        router_(std::move(router)),
        addr_(addr) {}
  const std::string& router() const noexcept { return router_; }
  std::uint64_t address() const noexcept { return addr_; }

 private:
  std::string router_;
  std::uint64_t addr_;
};

class TraceParseError : public SimError {
 public:
  TraceParseError(std::size_t line, const std::string& what)
      : SimError("trace line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ScheduleError : public SimError {
 public:
  using SimError::SimError;
};

inline constexpr Cycle ceil_div(Cycle a, Cycle b) { return (a + b - 1) / b; }

}  // namespace spmsim
