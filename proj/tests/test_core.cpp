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

// Engine, RNG, request timing and router arbitration.

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <vector>

#include "spmsim/spmsim.hpp"
#include "test_util.hpp"

namespace spmsim {
namespace {

using testing::RecordingSink;

// --- engine ------------------------------------------------------------------

class Probe final : public Component {
 public:
  explicit Probe(Engine& e) : engine(e) { e.add(*this); }
  void on_event(Cycle now, std::uint64_t payload) override {
    log.emplace_back(now, payload);
    if (payload >= 100 && payload < 110) engine.schedule(component_id(), payload + 1, 4);
  }
  Engine& engine;
  std::vector<std::pair<Cycle, std::uint64_t>> log;
};

TEST(Engine, SameCycleEventsRunInInsertionOrder) {
  Engine e;
  Probe p(e);
  for (std::uint64_t i = 0; i < 5; ++i) e.schedule(p.component_id(), i, 2);
  e.schedule(p.component_id(), 99, 1);
  e.run_until(10);
  ASSERT_EQ(p.log.size(), 6u);
  EXPECT_EQ(p.log[0], (std::pair<Cycle, std::uint64_t>{1, 99}));
  for (std::uint64_t i = 0; i < 5; ++i) EXPECT_EQ(p.log[i + 1], (std::pair<Cycle, std::uint64_t>{2, i}));
}

TEST(Engine, DelaysAccumulateFromTheHandlerTime) {
  Engine e;
  Probe p(e);
  e.schedule(p.component_id(), 100, 3);
  e.run_until(1000);
  ASSERT_EQ(p.log.size(), 11u);
  for (std::size_t k = 0; k < p.log.size(); ++k) EXPECT_EQ(p.log[k].first, 3 + 4 * k);
}

TEST(Engine, CancelRemovesOnlyPendingEvents) {
  Engine e;
  Probe p(e);
  const auto a = e.schedule(p.component_id(), 1, 5);
  e.schedule(p.component_id(), 2, 5);
  EXPECT_TRUE(e.cancel(a));
  EXPECT_FALSE(e.cancel(a));
  e.run_until(10);
  ASSERT_EQ(p.log.size(), 1u);
  EXPECT_EQ(p.log[0].second, 2u);
}

TEST(Engine, RunUntilStopsAtTheLimit) {
  Engine e;
  Probe p(e);
  e.schedule(p.component_id(), 1, 5);
  e.schedule(p.component_id(), 2, 6);
  EXPECT_EQ(e.run_until(5), 5u);
  EXPECT_EQ(e.pending(), 1u);
}

TEST(Engine, ScheduleAfterCompletionThrows) {
  Engine e;
  Probe p(e);
  const auto out = e.run_to_completion(100, {});
  EXPECT_EQ(out.status, RunStatus::finished);
  EXPECT_EQ(out.end_time, 0u);
  EXPECT_THROW(e.schedule(p.component_id(), 0, 1), ScheduleError);
}

TEST(Engine, BudgetOverrunReportsCensus) {
  Engine e;
  Probe p(e);
  e.schedule(p.component_id(), 0, 50);
  const auto out = e.run_to_completion(10, {}, [] { return std::string("1 thing left"); });
  EXPECT_EQ(out.status, RunStatus::cycle_budget_exceeded);
  EXPECT_EQ(out.census, "1 thing left");
}

TEST(Engine, UnknownTargetThrows) {
  Engine e;
  EXPECT_THROW(e.schedule(3, 0, 1), ScheduleError);
}

// --- rng ---------------------------------------------------------------------
// Reference values from tests/oracles/rng_vectors.py.

TEST(Rng, MatchesReferenceStream) {
  Rng a(0);
  EXPECT_EQ(a.next(), 0x99ec5f36cb75f2b4ULL);
  EXPECT_EQ(a.next(), 0xbf6e1f784956452aULL);
  EXPECT_EQ(a.next(), 0x1a5f849d4933e6e0ULL);
  Rng b(12345);
  EXPECT_EQ(b.next(), 0xbe6a36374160d49bULL);
  EXPECT_EQ(b.next(), 0x214aaa0637a688c6ULL);
  EXPECT_EQ(b.next(), 0xf69d16de9954d388ULL);
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Rng, KeyedStreamsMatchReference) {
  Rng r = Rng::keyed(7, {3, 9});
  EXPECT_EQ(r.next(), 0xbf1df45ed6307e53ULL);
  EXPECT_EQ(r.next(), 0xc81991bcf03ffd0dULL);
  EXPECT_EQ(r.next(), 0xdaeee698e86ee01cULL);
  Rng s = Rng::keyed(1, {});
  const std::vector<std::uint64_t> want{92, 83, 16, 60, 77, 2, 46, 88};
  for (auto w : want) EXPECT_EQ(s.below(100), w);
}

TEST(Rng, KeyOrderMatters) {
  EXPECT_NE(Rng::keyed(1, {2, 3}).next(), Rng::keyed(1, {3, 2}).next());
}

TEST(Rng, BelowStaysInRangeAndCoversIt) {
  Rng r(42);
  std::vector<int> seen(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++seen[v];
  }
  for (int c : seen) EXPECT_NEAR(c, 1000, 150);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.unit();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

// --- request timing ----------------------------------------------------------

TEST(Request, TransferDuration) {
  EXPECT_EQ(transfer_duration(4, 4), 1u);
  EXPECT_EQ(transfer_duration(5, 4), 2u);
  EXPECT_EQ(transfer_duration(16, 4), 4u);
  EXPECT_EQ(transfer_duration(0, 4), 1u);
  EXPECT_EQ(transfer_duration(64, 8), 8u);
}

TEST(Request, PayloadDependsOnLegAndKind) {
  Request w;
  w.kind = OpKind::write;
  w.size = 16;
  EXPECT_EQ(leg_payload_bytes(w, Leg::request), 16u);
  EXPECT_EQ(leg_payload_bytes(w, Leg::response), 4u);
  Request r;
  r.kind = OpKind::read;
  r.size = 16;
  EXPECT_EQ(leg_payload_bytes(r, Leg::request), 4u);
  EXPECT_EQ(leg_payload_bytes(r, Leg::response), 16u);
  r.kind = OpKind::atomic;
  EXPECT_EQ(leg_payload_bytes(r, Leg::response), 16u);
}

TEST(Request, IdsEncodeInitiatorAndIndex) {
  EXPECT_EQ(make_request_id(0, 0), 0u);
  EXPECT_EQ(make_request_id(3, 7), (RequestId{3} << 32) | 7);
  EXPECT_NE(make_request_id(1, 0), make_request_id(0, 1));
}

// --- synchronous routers -------------------------------------------------------

RouterSpec spec(int in, int out, Cycle base = 1) {
  RouterSpec s;
  s.inputs = in;
  s.outputs = out;
  s.base_latency = base;
  return s;
}

TEST(SyncRouter, LatencyAddsAndDurationTakesTheMax) {
  SyncRouter a(spec(1, 1, 2)), b(spec(1, 1, 3));
  Request r;
  r.kind = OpKind::write;
  r.size = 16;
  const std::vector<SyncHop> path{{&a, 0}, {&b, 0}};
  EXPECT_EQ(dispatch_sync(path, r, 10), 15u);
  EXPECT_EQ(r.latency, 5u);
  EXPECT_EQ(r.duration, 4u);
}

TEST(SyncRouter, BusyOutputDelaysTheNextHead) {
  SyncRouter a(spec(2, 1, 1));
  Request x, y;
  x.kind = y.kind = OpKind::write;
  x.size = 8;  // two cycles on the link
  EXPECT_EQ(a.process_hop(0, x, 0), 1u);
  EXPECT_EQ(a.busy_until(0), 2u);
  EXPECT_EQ(a.process_hop(0, y, 1), 3u);
  EXPECT_EQ(y.latency, 2u);
  EXPECT_EQ(y.last_hop_wait, 1u);
  EXPECT_EQ(a.counters().outputs[0].conflict_cycles, 1u);
}

TEST(SyncRouter, InvalidOutputThrows) {
  SyncRouter a(spec(1, 2));
  Request r;
  EXPECT_THROW(a.process_hop(2, r, 0), RoutingError);
}

// --- asynchronous routers ----------------------------------------------------------

struct AsyncBench {
  explicit AsyncBench(RouterSpec s) : router(engine, std::move(s), [](const Request&) { return 0; }) {
    router.connect(0, sink, 0);
  }
  Request& make(std::uint32_t initiator) {
    Request& r = pool.create();
    r.initiator = initiator;
    r.id = initiator;
    return r;
  }
  Engine engine;
  AsyncRouter router;
  RecordingSink sink;
  RequestPool pool;
};

TEST(AsyncRouter, ZeroLoadMatchesSynchronousHop) {
  AsyncBench b(spec(1, 1, 2));
  Request& r = b.make(0);
  b.router.accept(0, r, 1, 0);
  b.engine.run_until(100);
  ASSERT_EQ(b.sink.arrivals.size(), 1u);

  SyncRouter s(spec(1, 1, 2));
  Request q;
  EXPECT_EQ(s.process_hop(0, q, 1), b.sink.arrivals[0].ready);
  EXPECT_EQ(q.latency, r.latency);
  EXPECT_EQ(q.duration, r.duration);
}

/// Independent round-robin reference: grants one input per cycle starting
/// from pointer + 1; returns the wait of every input in `present`.
std::vector<Cycle> rr_reference(const std::vector<int>& present, int n) {
  std::vector<Cycle> wait(static_cast<std::size_t>(n), 0);
  std::set<int> left(present.begin(), present.end());
  int ptr = n - 1;
  for (Cycle t = 0; !left.empty(); ++t) {
    for (int k = 1; k <= n; ++k) {
      const int c = (ptr + k) % n;
      if (left.count(c)) {
        wait[static_cast<std::size_t>(c)] = t;
        left.erase(c);
        ptr = c;
        break;
      }
    }
  }
  return wait;
}

TEST(AsyncRouter, RoundRobinMatchesReferenceForEverySubset) {
  constexpr int n = 3;
  for (int mask = 1; mask < (1 << n); ++mask) {
    AsyncBench b(spec(n, 1, 1));
    std::vector<int> present;
    for (int i = 0; i < n; ++i)
      if (mask & (1 << i)) {
        present.push_back(i);
        b.router.accept(i, b.make(static_cast<std::uint32_t>(i)), 1, 0);
      }
    b.engine.run_until(100);
    const auto want = rr_reference(present, n);
    ASSERT_EQ(b.sink.arrivals.size(), present.size());
    for (const auto& a : b.sink.arrivals)
      EXPECT_EQ(a.req->last_hop_wait, want[a.req->initiator]) << "mask " << mask << " input " << a.req->initiator;
  }
}

TEST(AsyncRouter, ThreeSimultaneousRequestsWaitZeroOneTwo) {
  AsyncBench b(spec(3, 1, 1));
  for (std::uint32_t i = 0; i < 3; ++i) b.router.accept(static_cast<int>(i), b.make(i), 1, 0);
  b.engine.run_until(100);
  std::vector<Cycle> waits;
  for (const auto& a : b.sink.arrivals) waits.push_back(a.req->last_hop_wait);
  EXPECT_EQ(waits, (std::vector<Cycle>{0, 1, 2}));
  EXPECT_EQ(b.router.counters().port_conflicts, 3u);  // 2 losers, then 1
  EXPECT_EQ(b.router.counters().peak_port_conflicts, 2u);
}

TEST(AsyncRouter, FullDownstreamBlocksWithoutGranting) {
  AsyncBench b(spec(1, 1, 1));
  b.sink.open = false;
  b.router.accept(0, b.make(0), 1, 0);
  b.engine.run_until(5);
  EXPECT_TRUE(b.sink.arrivals.empty());
  EXPECT_EQ(b.router.queue_length(0), 1u);
  EXPECT_GT(b.router.counters().outputs[0].blocked_cycles, 0u);
}

TEST(AsyncRouter, QueueCapacityIsEnforced) {
  AsyncBench b(spec(1, 1, 1));
  b.sink.open = false;
  b.router.accept(0, b.make(0), 1, 0);
  b.router.accept(0, b.make(1), 1, 0);
  EXPECT_FALSE(b.router.can_accept(0, 0));
  EXPECT_EQ(b.router.counters().inputs[0].max_occupancy, 2u);
}

TEST(AsyncRouter, CreditReturnsOneCycleAfterThePop) {
  AsyncBench b(spec(1, 1, 1));
  b.router.accept(0, b.make(0), 1, 0);
  b.router.accept(0, b.make(1), 1, 0);
  b.engine.run_until(1);  // first request granted at 1
  EXPECT_EQ(b.router.queue_length(0), 1u);
  EXPECT_FALSE(b.router.can_accept(0, 1));
  EXPECT_TRUE(b.router.can_accept(0, 2));
}

TEST(AsyncRouter, RoutingOutsideThePortRangeThrows) {
  Engine e;
  AsyncRouter r(e, spec(1, 2), [](const Request&) { return 5; });
  Request q;
  EXPECT_THROW(r.accept(0, q, 1, 0), RoutingError);
}

TEST(RouterSpec, ValidationNamesTheField) {
  RouterSpec s = spec(0, 1);
  s.name = "x";
  try {
    s.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "x.inputs");
  }
}

TEST(WindowedBusy, SplitsIntervalsAcrossWindows) {
  WindowedBusy w(4);
  w.add(2, 5);
  EXPECT_EQ(w.bins(), (std::vector<std::uint64_t>{2, 3}));
  EXPECT_EQ(w.total(), 5u);
}

// --- trace log -------------------------------------------------------------------

TEST(TraceLog, KeepsRecordsSortedAndStable) {
  TraceLog log;
  log.record({5, 1, 1, TracePhase::dispatch});
  log.record({3, 2, 2, TracePhase::enqueue});
  log.record({5, 0, 3, TracePhase::enqueue});
  log.record({4, 9, 4, TracePhase::serve});
  std::vector<Cycle> ts;
  for (const auto& r : log.records()) ts.push_back(r.timestamp);
  EXPECT_EQ(ts, (std::vector<Cycle>{3, 4, 5, 5}));
  EXPECT_EQ(log.records()[2].request, 1u);  // equal timestamps keep arrival order
  EXPECT_EQ(log.canonical()[2].request, 3u);  // canonical order sorts by component
}

}  // namespace
}  // namespace spmsim
