#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <ostream>
#include <queue>
#include <thread>
#include <tuple>
#include <vector>

#include "rulecache/core_model.hpp"
#include "rulecache/fdrc.hpp"
#include "rulecache/policy.hpp"
#include "rulecache/scenario.hpp"
#include "rulecache/traffic.hpp"

namespace rulecache {

// Events ----------------------------------------------------------------------

// Lower value runs first at equal times.
enum class EventKind : std::uint8_t { PrefetchTick = 0, PacketArrival = 1 };

struct Event {
  TimePoint time = 0.0;
  EventKind kind = EventKind::PacketArrival;
  FlowId flow;

  auto rank() const { return std::tuple(time, kind, flow); }
  friend bool operator<(const Event& a, const Event& b) { return a.rank() < b.rank(); }
  friend bool operator>(const Event& a, const Event& b) { return b < a; }
  friend bool operator==(const Event&, const Event&) = default;
};

// Min-queue on (time, kind, flow).
class EventQueue {
 public:
  void push(const Event& e) { heap_.push(e); }
  Event pop() {
    Event e = heap_.top();
    heap_.pop();
    return e;
  }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

 private:
  std::priority_queue<Event, std::vector<Event>, std::greater<>> heap_;
};

// Metrics ---------------------------------------------------------------------

struct FlowCounters {
  std::uint64_t hits = 0;
  std::uint64_t opportunities = 0;  // (packet, path switch) pairs
  std::uint64_t packets = 0;
  friend bool operator==(const FlowCounters&, const FlowCounters&) = default;
};

struct WindowCounters {
  TimePoint start = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t opportunities = 0;
  std::uint64_t packets = 0;
  friend bool operator==(const WindowCounters&, const WindowCounters&) = default;
};

// How a hit ratio is normalised. `Normalized` divides by hit opportunities
// (packets times path length) and stays in [0, 1]. `PerPacket` divides by
// packets only, so a flow cached on its whole path scores |path|.
enum class RatioMode { Normalized, PerPacket };

class MetricsLedger {
 public:
  MetricsLedger() = default;

  MetricsLedger(std::size_t n_flows, Duration sim_end, Duration window) : window_(window), flows_(n_flows) {
    if (!(window > 0.0)) throw ConfigError("window", "must be positive");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(sim_end / window)));
    windows_.resize(n);
    for (std::size_t w = 0; w < n; ++w) windows_[w].start = static_cast<double>(w) * window;
  }

  void record_packet(FlowId flow, TimePoint t, std::uint64_t hits, std::uint64_t path_len) {
    auto& f = flows_.at(flow.index);
    f.hits += hits;
    f.opportunities += path_len;
    f.packets += 1;
    auto w = static_cast<std::size_t>(std::max(0.0, std::floor(t / window_)));
    auto& win = windows_[std::min(w, windows_.size() - 1)];
    win.hits += hits;
    win.opportunities += path_len;
    win.packets += 1;
  }

  Duration window() const { return window_; }
  const std::vector<FlowCounters>& flows() const { return flows_; }
  const FlowCounters& flow(FlowId id) const { return flows_.at(id.index); }
  const std::vector<WindowCounters>& windows() const { return windows_; }

  std::uint64_t total_hits() const { return sum(&FlowCounters::hits); }
  std::uint64_t total_opportunities() const { return sum(&FlowCounters::opportunities); }
  std::uint64_t total_packets() const { return sum(&FlowCounters::packets); }
  std::uint64_t total_misses() const { return total_opportunities() - total_hits(); }

  // Cumulative ratio at the end of each window; NaN until the first packet.
  std::vector<double> cumulative_series(RatioMode mode = RatioMode::Normalized) const {
    std::vector<double> out;
    out.reserve(windows_.size());
    std::uint64_t h = 0, d = 0;
    for (const auto& w : windows_) {
      h += w.hits;
      d += mode == RatioMode::Normalized ? w.opportunities : w.packets;
      out.push_back(d == 0 ? std::numeric_limits<double>::quiet_NaN()
                           : static_cast<double>(h) / static_cast<double>(d));
    }
    return out;
  }

  friend bool operator==(const MetricsLedger&, const MetricsLedger&) = default;

 private:
  std::uint64_t sum(std::uint64_t FlowCounters::*field) const {
    std::uint64_t s = 0;
    for (const auto& f : flows_) s += f.*field;
    return s;
  }

  Duration window_ = 10.0;
  std::vector<FlowCounters> flows_;
  std::vector<WindowCounters> windows_;
};

inline double hit_ratio_flow(const MetricsLedger& ledger, FlowId flow, RatioMode mode = RatioMode::Normalized) {
  const auto& f = ledger.flow(flow);
  const auto denom = mode == RatioMode::Normalized ? f.opportunities : f.packets;
  if (denom == 0) throw UndefinedRatioError("flow " + std::to_string(flow.index) + " saw no packets");
  return static_cast<double>(f.hits) / static_cast<double>(denom);
}

inline double hit_ratio_total(const MetricsLedger& ledger, RatioMode mode = RatioMode::Normalized) {
  const auto denom = mode == RatioMode::Normalized ? ledger.total_opportunities() : ledger.total_packets();
  if (denom == 0) throw UndefinedRatioError("no packets were simulated");
  return static_cast<double>(ledger.total_hits()) / static_cast<double>(denom);
}

// NaN instead of throwing.
inline double hit_ratio_or_nan(const MetricsLedger& ledger, RatioMode mode = RatioMode::Normalized) {
  try {
    return hit_ratio_total(ledger, mode);
  } catch (const UndefinedRatioError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Simulation ------------------------------------------------------------------

struct RunOptions {
  PolicyKind policy = PolicyKind::Fdrc;
  FdrcConfig fdrc;
  Duration sim_end = 3600.0;
  Duration window = 10.0;
  // Verify every switch's capacity after each event; throws CapacityError.
  bool check_invariants = false;
};

// Observer hook for tests: called after every event with the policy state.
using EventObserver = std::function<void(const Event&, const CacheAssignment&)>;

// Drives `policy` with every packet of `scenario` in [0, sim_end).
// Predictable flows also get a PrefetchTick at each burst start when
// `prefetch` is set and the policy supports it.
template <ReplacementPolicy Policy>
MetricsLedger simulate(const Scenario& scenario, Policy& policy, Duration sim_end, Duration window,
                       bool prefetch = false, bool check_invariants = false, const EventObserver& observer = {}) {
  if (!(sim_end > 0.0)) throw ConfigError("sim_end", "must be positive");
  MetricsLedger ledger(scenario.flows.size(), sim_end, window);

  std::vector<ArrivalCursor> cursors;
  cursors.reserve(scenario.flows.size());
  EventQueue queue;
  for (const auto& f : scenario.flows) {
    cursors.emplace_back(f.traffic);
    TimePoint t = cursors.back().next();
    if (t < sim_end) queue.push(Event{t, EventKind::PacketArrival, f.id});
  }

  constexpr bool kCanPrefetch =
      requires(Policy p, std::vector<PrefetchOutcome> & out) { p.on_prefetch(FlowId{}, TimePoint{}, out); };
  std::vector<std::uint64_t> next_burst(scenario.flows.size(), 0);
  if constexpr (kCanPrefetch) {
    if (prefetch)
      for (const auto& f : scenario.flows)
        if (const auto* p = std::get_if<PeriodicModel>(&f.traffic); p && p->burst_start(0) < sim_end)
          queue.push(Event{p->burst_start(0), EventKind::PrefetchTick, f.id});
  }

  std::vector<SwitchOutcome> outcomes;
  [[maybe_unused]] std::vector<PrefetchOutcome> prefetched;
  while (!queue.empty()) {
    const Event e = queue.pop();
    const Flow& f = scenario.flows[e.flow.index];
    if (e.kind == EventKind::PacketArrival) {
      outcomes.clear();
      policy.on_packet(e.flow, e.time, outcomes);
      std::uint64_t hits = 0;
      for (const auto& o : outcomes) hits += o.hit ? 1 : 0;
      ledger.record_packet(e.flow, e.time, hits, f.path.size());
      TimePoint t = cursors[e.flow.index].next();
      if (t < sim_end) queue.push(Event{t, EventKind::PacketArrival, e.flow});
    } else {
      if constexpr (kCanPrefetch) {
        prefetched.clear();
        policy.on_prefetch(e.flow, e.time, prefetched);
        const auto& p = std::get<PeriodicModel>(f.traffic);
        TimePoint t = p.burst_start(++next_burst[e.flow.index]);
        if (t < sim_end) queue.push(Event{t, EventKind::PrefetchTick, e.flow});
      }
    }
    if (check_invariants && !policy.cache().within_capacity())
      throw CapacityError("capacity exceeded after event at " + format_real(e.time));
    if (observer) observer(e, policy.cache());
  }
  return ledger;
}

inline MetricsLedger run(const Scenario& scenario, const RunOptions& options, const EventObserver& observer = {}) {
  scenario.validate();
  switch (options.policy) {
    case PolicyKind::Fifo: {
      FifoPolicy p(scenario);
      return simulate(scenario, p, options.sim_end, options.window, false, options.check_invariants, observer);
    }
    case PolicyKind::Lru: {
      LruPolicy p(scenario);
      return simulate(scenario, p, options.sim_end, options.window, false, options.check_invariants, observer);
    }
    case PolicyKind::Fdrc: {
      FdrcPolicy p(scenario, options.fdrc);
      const bool prefetch = options.fdrc.prefetch_mode == PrefetchMode::ActivePrefetch;
      return simulate(scenario, p, options.sim_end, options.window, prefetch, options.check_invariants, observer);
    }
  }
  throw PreconditionError("unknown policy");
}

// Replication -----------------------------------------------------------------

struct Summary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single run
  friend bool operator==(const Summary&, const Summary&) = default;
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double total = 0.0;
  for (double x : xs) total += x;
  s.mean = total / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

struct ReplicateResult {
  PolicyKind policy = PolicyKind::Fdrc;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsLedger> ledgers;  // one per seed, same order
  std::vector<double> ratios;          // final cumulative ratio per seed
  Summary total;
  std::vector<Summary> windows;  // cumulative ratio per window across seeds
};

struct ReplicateOptions {
  RunOptions run;  // `run.policy` is ignored
  RatioMode ratio_mode = RatioMode::Normalized;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Runs each policy on k instances generated with seeds seed, seed+1, ...,
// seed+k-1. Every policy sees the same k instances. Results are independent
// of the thread count.
inline std::vector<ReplicateResult> replicate(const ScenarioConfig& config, const std::vector<PolicyKind>& policies,
                                              std::uint32_t k, const ReplicateOptions& options) {
  if (k < 1) throw ConfigError("replications", "must be at least 1");
  config.validate();
  options.run.fdrc.validate();

  std::vector<std::vector<MetricsLedger>> ledgers(policies.size(), std::vector<MetricsLedger>(k));
  std::atomic<std::uint32_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::uint32_t r; (r = next.fetch_add(1)) < k;) {
      try {
        ScenarioConfig c = config;
        c.seed = config.seed + r;
        const Scenario sc = generate(c);
        for (std::size_t p = 0; p < policies.size(); ++p) {
          RunOptions ro = options.run;
          ro.policy = policies[p];
          ledgers[p][r] = run(sc, ro);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  unsigned n_threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, k);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<ReplicateResult> results;
  for (std::size_t p = 0; p < policies.size(); ++p) {
    ReplicateResult res;
    res.policy = policies[p];
    for (std::uint32_t r = 0; r < k; ++r) res.seeds.push_back(config.seed + r);
    res.ledgers = std::move(ledgers[p]);
    for (const auto& l : res.ledgers) res.ratios.push_back(hit_ratio_or_nan(l, options.ratio_mode));
    res.total = summarize(res.ratios);
    const std::size_t n_windows = res.ledgers.front().windows().size();
    std::vector<std::vector<double>> series;
    for (const auto& l : res.ledgers) series.push_back(l.cumulative_series(options.ratio_mode));
    for (std::size_t w = 0; w < n_windows; ++w) {
      std::vector<double> xs;
      for (const auto& s : series) xs.push_back(s[w]);
      res.windows.push_back(summarize(xs));
    }
    results.push_back(std::move(res));
  }
  return results;
}

// CSV -------------------------------------------------------------------------

inline std::string format_ratio(double v) { return std::isnan(v) ? std::string("nan") : format_real(v); }

inline constexpr const char* kTimeseriesHeader =
    "run_seed,policy,window_start_s,window_hits,window_opportunities,cumulative_ratio";

// One row per (seed, window).
inline void write_timeseries_csv(std::ostream& os, const ReplicateResult& res,
                                 RatioMode mode = RatioMode::Normalized) {
  os << kTimeseriesHeader << '\n';
  for (std::size_t r = 0; r < res.ledgers.size(); ++r) {
    const auto& l = res.ledgers[r];
    const auto cum = l.cumulative_series(mode);
    for (std::size_t w = 0; w < l.windows().size(); ++w) {
      const auto& win = l.windows()[w];
      os << res.seeds[r] << ',' << to_string(res.policy) << ',' << format_real(win.start) << ',' << win.hits
         << ',' << win.opportunities << ',' << format_ratio(cum[w]) << '\n';
    }
  }
}

}  // namespace rulecache
