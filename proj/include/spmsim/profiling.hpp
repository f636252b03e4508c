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

// Profiling report: per-PE, per-router, per-bank and per-channel counters,
// derived statistics, and JSON / CSV export.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "spmsim/endpoints.hpp"
#include "spmsim/remap.hpp"
#include "spmsim/router.hpp"
#include "spmsim/trace.hpp"
#include "spmsim/types.hpp"

namespace spmsim {

inline constexpr const char* kReportSchema = "spmsim.profile/1";

/// Exact latency distribution kept as a sparse histogram.
class LatencyHistogram {
 public:
  void add(Cycle v) {
    ++bins_[v];
    ++count_;
    sum_ += v;
  }
  std::uint64_t count() const noexcept { return count_; }
  double mean() const { return count_ ? static_cast<double>(sum_) / static_cast<double>(count_) : 0.0; }
  Cycle max() const { return bins_.empty() ? 0 : bins_.rbegin()->first; }

  /// Nearest-rank percentile, q in (0, 100].
  Cycle percentile(double q) const {
    if (count_ == 0) return 0;
    auto rank = static_cast<std::uint64_t>(std::ceil(q / 100.0 * static_cast<double>(count_)));
    rank = std::clamp<std::uint64_t>(rank, 1, count_);
    std::uint64_t seen = 0;
    for (const auto& [v, n] : bins_) {
      seen += n;
      if (seen >= rank) return v;
    }
    return max();
  }
  const std::map<Cycle, std::uint64_t>& bins() const noexcept { return bins_; }

  friend bool operator==(const LatencyHistogram&, const LatencyHistogram&) = default;

 private:
  std::map<Cycle, std::uint64_t> bins_;
  std::uint64_t count_ = 0;
  std::uint64_t sum_ = 0;
};

struct RouterReport {
  std::uint32_t uid = 0;
  std::string name;
  bool async = true;
  RouterCounters counters;
};

struct ProfileReport {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string status = "finished";
  Cycle total_cycles = 0;
  Cycle window = 256;
  std::uint64_t requests_issued = 0;
  std::uint64_t responses_delivered = 0;
  LatencyHistogram round_trip;
  LatencyHistogram one_way;  // request leg, PE issue to bank arrival
  std::vector<PeCounters> pes;
  std::vector<RouterReport> routers;
  std::vector<BankCounters> banks;
  std::vector<WindowedBusy> channels;  // busy cycles of every mesh link, per parallel channel
};

// --- derived statistics ---------------------------------------------------------

/// busy / window for one router output over [0, total) or a caller window length.
inline double utilization(const ProfileReport& rep, std::uint32_t uid, int out, std::optional<Cycle> window = {}) {
  const Cycle len = window.value_or(rep.total_cycles);
  if (len == 0) return 0.0;
  const auto& pc = rep.routers.at(uid).counters.outputs.at(static_cast<std::size_t>(out));
  return std::min(1.0, static_cast<double>(pc.busy_cycles) / static_cast<double>(len));
}

/// Fraction of a window covered by busy intervals.
inline double window_utilization(Cycle busy, Cycle window) {
  return window == 0 ? 0.0 : static_cast<double>(busy) / static_cast<double>(window);
}

struct CongestionStats {
  double mean_occupancy = 0.0;  // enqueue-weighted
  std::uint64_t max_occupancy = 0;
  std::uint64_t blocked_cycles = 0;
  std::uint64_t conflict_cycles = 0;  // cycles with >= 2 inputs requesting one output
  std::uint64_t port_conflicts = 0;
};

inline CongestionStats congestion_stats(const ProfileReport& rep, std::uint32_t uid) {
  const RouterReport& r = rep.routers.at(uid);
  if (!r.async) throw SimError(r.name + " has no input queues");
  CongestionStats s;
  std::uint64_t weighted = 0, samples = 0;
  for (const auto& q : r.counters.inputs) {
    s.max_occupancy = std::max(s.max_occupancy, q.max_occupancy);
    for (std::size_t occ = 0; occ < q.occupancy_histogram.size(); ++occ) {
      weighted += occ * q.occupancy_histogram[occ];
      samples += q.occupancy_histogram[occ];
    }
  }
  s.mean_occupancy = samples ? static_cast<double>(weighted) / static_cast<double>(samples) : 0.0;
  for (const auto& o : r.counters.outputs) {
    s.blocked_cycles += o.blocked_cycles;
    s.conflict_cycles += o.conflict_cycles;
  }
  s.port_conflicts = r.counters.port_conflicts;
  return s;
}

struct ImbalanceMetrics {
  double spatial_cv = 0.0;               // across channels, whole run
  std::vector<double> temporal_variance; // per channel, variance of window utilization
  double mean_temporal_variance = 0.0;
};

inline ImbalanceMetrics imbalance_metrics(const ProfileReport& rep) {
  if (rep.channels.empty() || rep.total_cycles == 0) throw SimError("imbalance metrics need a non-empty report");
  ImbalanceMetrics m;
  std::vector<double> totals;
  for (const auto& ch : rep.channels) totals.push_back(static_cast<double>(ch.total()));
  m.spatial_cv = coefficient_of_variation(totals);
  const Cycle w = rep.channels.front().window();
  const std::size_t nwin = static_cast<std::size_t>(ceil_div(rep.total_cycles, w));
  double acc = 0.0;
  for (const auto& ch : rep.channels) {
    std::vector<double> u(nwin, 0.0);
    for (std::size_t i = 0; i < std::min(nwin, ch.bins().size()); ++i)
      u[i] = window_utilization(ch.bins()[i], w);
    m.temporal_variance.push_back(population_variance(u));
    acc += m.temporal_variance.back();
  }
  m.mean_temporal_variance = acc / static_cast<double>(rep.channels.size());
  return m;
}

/// Peak single-cycle conflict count among remote inputs of tile crossbars.
inline std::uint64_t peak_remote_conflicts(const ProfileReport& rep) {
  std::uint64_t peak = 0;
  for (const auto& r : rep.routers)
    if (r.name.size() > 5 && r.name.ends_with(".xbar") && r.name.find("resp") == std::string::npos)
      peak = std::max(peak, r.counters.peak_remote_conflicts);
  return peak;
}

// --- config hash ----------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

// --- export -------------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ProfileReport& rep) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = kReportSchema;
  j["config_hash"] = rep.config_hash;
  j["seed"] = rep.seed;
  j["status"] = rep.status;
  j["total_cycles"] = rep.total_cycles;
  j["requests_issued"] = rep.requests_issued;
  j["responses_delivered"] = rep.responses_delivered;

  auto latency = [](const LatencyHistogram& h) {
    ordered_json l;
    l["count"] = h.count();
    l["mean"] = h.mean();
    l["p99"] = h.percentile(99.0);
    l["max"] = h.max();
    ordered_json bins = ordered_json::array();
    for (const auto& [v, n] : h.bins()) bins.push_back({v, n});
    l["histogram"] = std::move(bins);
    return l;
  };
  j["latency"] = {{"round_trip", latency(rep.round_trip)}, {"one_way", latency(rep.one_way)}};

  ordered_json pes = ordered_json::array();
  for (std::size_t i = 0; i < rep.pes.size(); ++i) {
    const auto& p = rep.pes[i];
    ordered_json e;
    e["pe"] = i;
    e["reads"] = p.reads;
    e["writes"] = p.writes;
    e["atomics"] = p.atomics;
    e["responses"] = p.responses;
    e["max_inflight"] = p.max_inflight;
    e["active"] = p.active;
    e["lsu_full"] = p.lsu_full;
    e["load_use"] = p.load_use;
    e["barrier"] = p.barrier;
    e["idle"] = p.idle;
    e["done_at"] = p.done_at;
    pes.push_back(std::move(e));
  }
  j["pes"] = std::move(pes);

  ordered_json routers = ordered_json::array();
  for (const auto& r : rep.routers) {
    ordered_json e;
    e["uid"] = r.uid;
    e["name"] = r.name;
    e["dispatch"] = r.async ? "async" : "sync";
    ordered_json outs = ordered_json::array();
    for (const auto& o : r.counters.outputs)
      outs.push_back({{"busy", o.busy_cycles},
                      {"transfers", o.transfers},
                      {"wait", o.wait_cycles},
                      {"conflicts", o.conflict_cycles},
                      {"blocked", o.blocked_cycles}});
    e["outputs"] = std::move(outs);
    ordered_json ins = ordered_json::array();
    for (const auto& q : r.counters.inputs)
      ins.push_back({{"enqueues", q.enqueues}, {"max_occupancy", q.max_occupancy}, {"histogram", q.occupancy_histogram}});
    e["inputs"] = std::move(ins);
    e["port_conflicts"] = r.counters.port_conflicts;
    e["peak_port_conflicts"] = r.counters.peak_port_conflicts;
    e["peak_remote_conflicts"] = r.counters.peak_remote_conflicts;
    routers.push_back(std::move(e));
  }
  j["routers"] = std::move(routers);

  ordered_json banks = ordered_json::array();
  for (const auto& b : rep.banks)
    banks.push_back({b.accesses, b.busy_cycles, b.conflict_wait_cycles, b.conflicted_accesses});
  j["bank_fields"] = {"accesses", "busy_cycles", "conflict_wait_cycles", "conflicted_accesses"};
  j["banks"] = std::move(banks);

  ordered_json chans = ordered_json::array();
  for (std::size_t k = 0; k < rep.channels.size(); ++k)
    chans.push_back({{"channel", k}, {"busy", rep.channels[k].total()}, {"windows", rep.channels[k].bins()}});
  j["window"] = rep.window;
  j["channels"] = std::move(chans);
  if (!rep.channels.empty() && rep.total_cycles > 0) {
    const auto m = imbalance_metrics(rep);
    j["imbalance"] = {{"spatial_cv", m.spatial_cv}, {"mean_temporal_variance", m.mean_temporal_variance}};
  }
  return j;
}

inline std::string report_json_string(const ProfileReport& rep) { return to_json(rep).dump(1) + "\n"; }

/// One-line summary (also written as summary.json).
inline nlohmann::ordered_json summary_json(const ProfileReport& rep) {
  nlohmann::ordered_json j;
  j["status"] = rep.status;
  j["total_cycles"] = rep.total_cycles;
  j["requests"] = rep.requests_issued;
  j["responses"] = rep.responses_delivered;
  j["mean_latency"] = rep.round_trip.mean();
  j["p99_latency"] = rep.round_trip.percentile(99.0);
  if (!rep.channels.empty() && rep.total_cycles > 0) j["spatial_cv"] = imbalance_metrics(rep).spatial_cv;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot write " + path.string());
  out << text;
}

inline std::string pes_csv(const ProfileReport& rep) {
  std::ostringstream os;
  os << "pe,reads,writes,atomics,responses,active,lsu_full,load_use,barrier,idle,done_at\n";
  for (std::size_t i = 0; i < rep.pes.size(); ++i) {
    const auto& p = rep.pes[i];
    os << i << ',' << p.reads << ',' << p.writes << ',' << p.atomics << ',' << p.responses << ',' << p.active << ','
       << p.lsu_full << ',' << p.load_use << ',' << p.barrier << ',' << p.idle << ',' << p.done_at << '\n';
  }
  return os.str();
}

inline std::string routers_csv(const ProfileReport& rep) {
  std::ostringstream os;
  os << "uid,name,output,busy,transfers,wait,conflicts,blocked\n";
  for (const auto& r : rep.routers)
    for (std::size_t o = 0; o < r.counters.outputs.size(); ++o) {
      const auto& c = r.counters.outputs[o];
      os << r.uid << ',' << r.name << ',' << o << ',' << c.busy_cycles << ',' << c.transfers << ',' << c.wait_cycles
         << ',' << c.conflict_cycles << ',' << c.blocked_cycles << '\n';
    }
  return os.str();
}

inline std::string banks_csv(const ProfileReport& rep) {
  std::ostringstream os;
  os << "bank,accesses,busy_cycles,conflict_wait_cycles,conflicted_accesses\n";
  for (std::size_t i = 0; i < rep.banks.size(); ++i) {
    const auto& b = rep.banks[i];
    os << i << ',' << b.accesses << ',' << b.busy_cycles << ',' << b.conflict_wait_cycles << ','
       << b.conflicted_accesses << '\n';
  }
  return os.str();
}

inline std::string channels_csv(const ProfileReport& rep) {
  std::ostringstream os;
  os << "channel,window,busy\n";
  for (std::size_t k = 0; k < rep.channels.size(); ++k)
    for (std::size_t w = 0; w < rep.channels[k].bins().size(); ++w)
      os << k << ',' << w << ',' << rep.channels[k].bins()[w] << '\n';
  return os.str();
}

inline std::string trace_csv(const TraceLog& log) {
  std::ostringstream os;
  os << "timestamp,component,request,phase\n";
  for (const auto& r : log.canonical())
    os << r.timestamp << ',' << r.component << ",0x" << hex64(r.request) << ',' << phase_name(r.phase) << '\n';
  return os.str();
}

inline std::string pe_states_csv(const TraceLog& log) {
  std::ostringstream os;
  os << "cycle,pe,state\n";
  for (const auto& r : log.sorted_states()) os << r.cycle << ',' << r.pe << ',' << pe_state_name(r.state) << '\n';
  return os.str();
}

enum class ExportFormat { json, csv };

/// Writes the report into `dir` (created if needed).
inline void export_report(const ProfileReport& rep, const std::filesystem::path& dir, ExportFormat fmt) {
  std::filesystem::create_directories(dir);
  if (fmt == ExportFormat::json) {
    write_text(dir / "report.json", report_json_string(rep));
    write_text(dir / "summary.json", summary_json(rep).dump(1) + "\n");
  } else {
    write_text(dir / "pes.csv", pes_csv(rep));
    write_text(dir / "routers.csv", routers_csv(rep));
    write_text(dir / "banks.csv", banks_csv(rep));
    write_text(dir / "channels.csv", channels_csv(rep));
  }
}

}  // namespace spmsim
