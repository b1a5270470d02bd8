#pragma once

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "rulecache/core_model.hpp"
#include "rulecache/policy.hpp"
#include "rulecache/scenario.hpp"
#include "rulecache/traffic.hpp"

namespace rulecache {

enum class PrefetchMode { RetentionOnly, ActivePrefetch };

struct FdrcConfig {
  Duration t_max = 100.0;
  PrefetchMode prefetch_mode = PrefetchMode::RetentionOnly;

  void validate() const {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max", "must be positive");
  }
};

enum class TimerKind { Predictable, Unpredictable };

// Per-flow estimate of the time to the next packet.
//
// Unpredictable flows run an adaptive timer: each packet restarts it with the
// latest inter-arrival gap (t_max for the first packet), and each expiry
// restarts it with double the gap, capped at t_max. A timer that expires while
// already at t_max freezes there until the next packet. Predictable flows only
// record their last arrival; their value comes from the known schedule.
//
// An unpredictable timer starts frozen: before any packet it reads t_max.
struct TimerState {
  FlowId flow;
  TimerKind kind = TimerKind::Unpredictable;
  std::optional<TimePoint> last_arrival;
  Duration delta_t = 0.0;
  TimePoint deadline = std::numeric_limits<double>::infinity();
  bool frozen = true;

  static TimerState initial(FlowId flow, TimerKind kind, Duration t_max) {
    TimerState s;
    s.flow = flow;
    s.kind = kind;
    s.delta_t = t_max;
    s.frozen = kind == TimerKind::Unpredictable;
    return s;
  }

  friend bool operator==(const TimerState&, const TimerState&) = default;
};

inline TimerState on_packet(TimerState s, TimePoint t, Duration t_max) {
  if (s.last_arrival && t < *s.last_arrival) throw OrderingError("timer packet precedes last arrival");
  if (s.kind == TimerKind::Predictable) {
    s.last_arrival = t;
    return s;
  }
  if (s.last_arrival) {
    const Duration gap = t - *s.last_arrival;
    // A repeat at the same instant carries no interval information.
    if (gap <= 0.0) return s;
    s.delta_t = std::min(gap, t_max);
  } else {
    s.delta_t = t_max;
  }
  s.deadline = t + s.delta_t;
  s.frozen = false;
  s.last_arrival = t;
  return s;
}

inline TimerState on_expiry(TimerState s, TimePoint expiry, Duration t_max) {
  if (s.kind != TimerKind::Unpredictable) throw std::logic_error("predictable timers never expire");
  if (s.frozen) throw std::logic_error("expiry on a frozen timer");
  if (expiry != s.deadline) throw std::logic_error("expiry does not match the deadline");
  if (s.delta_t >= t_max) {
    s.frozen = true;
    s.delta_t = t_max;
    s.deadline = std::numeric_limits<double>::infinity();
    return s;
  }
  s.delta_t = std::min(2.0 * s.delta_t, t_max);
  s.deadline = expiry + s.delta_t;
  return s;
}

// Applies every expiry due at or before t. A timer that reaches its deadline
// exactly at t has already restarted when read at t.
inline TimerState advance(TimerState s, TimePoint t, Duration t_max) {
  if (s.kind == TimerKind::Unpredictable)
    while (!s.frozen && s.deadline <= t) s = on_expiry(s, s.deadline, t_max);
  return s;
}

// Time to the next packet as seen at t, in [0, t_max].
//
// Predictable: time until the next scheduled packet at or after t, so 0 at a
// packet instant and (next burst start - t) between the last packet of a
// burst and the next burst. `schedule` must be the flow's periodic model.
inline Duration timer_value(const TimerState& state, TimePoint t, Duration t_max,
                            const PeriodicModel* schedule = nullptr) {
  if (state.kind == TimerKind::Predictable) {
    if (!schedule) throw PreconditionError("predictable timer needs its schedule");
    return std::min(next_arrival_at_or_after(*schedule, t) - t, t_max);
  }
  const TimerState s = advance(state, t, t_max);
  if (s.frozen) return t_max;
  return std::clamp(s.deadline - t, 0.0, t_max);
}

struct PrefetchOutcome {
  SwitchId sw;
  PolicyDecision decision;
  friend bool operator==(const PrefetchOutcome&, const PrefetchOutcome&) = default;
};

// Flow-driven rule caching. A packet that misses anywhere on its path gets
// its rule installed at every path switch that lacks it; a full switch makes
// room by evicting the cached rule whose flow expects its next packet
// furthest in the future (ties: older install, then lower flow id).
class FdrcPolicy {
 public:
  FdrcPolicy(const Scenario& scenario, FdrcConfig config)
      : scenario_(&scenario), config_(config), cache_(scenario.flows.size(), scenario.switches) {
    config_.validate();
    timers_.reserve(scenario.flows.size());
    for (const auto& f : scenario.flows)
      timers_.push_back(TimerState::initial(
          f.id, f.predictable() ? TimerKind::Predictable : TimerKind::Unpredictable, config_.t_max));
  }

  const FdrcConfig& config() const { return config_; }
  const CacheAssignment& cache() const { return cache_; }
  const TimerState& timer(FlowId flow) const { return timers_.at(flow.index); }

  // Timer reading at t; folds elapsed expiries into the stored state.
  Duration timer_value(FlowId flow, TimePoint t) {
    auto& s = timers_.at(flow.index);
    s = advance(s, t, config_.t_max);
    return rulecache::timer_value(s, t, config_.t_max, schedule(flow));
  }

  void on_packet(FlowId flow, TimePoint t, std::vector<SwitchOutcome>& out) {
    advance_clock(t);
    const Flow& f = flow_at(flow);
    for (auto sw : f.path) {
      if (cache_.is_cached(flow, sw)) {
        out.push_back(SwitchOutcome{sw, true, {}});
        continue;
      }
      PolicyDecision d;
      if (cache_.is_full(sw)) {
        const FlowId victim = pick_victim(sw, t);
        cache_.evict(victim, sw);
        d.evicted = victim;
      }
      cache_.install(flow, sw, t);
      d.installed = true;
      out.push_back(SwitchOutcome{sw, false, d});
    }
    auto& s = timers_[flow.index];
    s = rulecache::on_packet(advance(s, t, config_.t_max), t, config_.t_max);
  }

  std::vector<SwitchOutcome> on_packet(FlowId flow, TimePoint t) {
    std::vector<SwitchOutcome> out;
    on_packet(flow, t, out);
    return out;
  }

  // Places a predictable flow's rule ahead of its burst. At a full switch the
  // max-timer entry is displaced only if it expects its next packet later
  // than this flow does; otherwise the switch is left alone.
  void on_prefetch(FlowId flow, TimePoint t, std::vector<PrefetchOutcome>& out) {
    advance_clock(t);
    const Flow& f = flow_at(flow);
    if (!f.predictable()) throw PreconditionError("prefetch is only defined for predictable flows");
    const Duration incoming = timer_value(flow, t);
    for (auto sw : f.path) {
      if (cache_.is_cached(flow, sw)) continue;
      PolicyDecision d;
      if (cache_.is_full(sw)) {
        const FlowId victim = pick_victim(sw, t);
        if (!(timer_value(victim, t) > incoming)) continue;
        cache_.evict(victim, sw);
        d.evicted = victim;
      }
      cache_.install(flow, sw, t);
      d.installed = true;
      out.push_back(PrefetchOutcome{sw, d});
    }
  }

  // Prefetches every predictable flow whose burst starts exactly at t.
  std::vector<PrefetchOutcome> prefetch_tick(TimePoint t) {
    std::vector<PrefetchOutcome> out;
    for (const auto& f : scenario_->flows) {
      const auto* p = std::get_if<PeriodicModel>(&f.traffic);
      if (p && is_burst_start(*p, t)) on_prefetch(f.id, t, out);
    }
    return out;
  }

 private:
  const Flow& flow_at(FlowId flow) const {
    if (flow.index >= scenario_->flows.size()) throw PreconditionError("unknown flow id");
    return scenario_->flows[flow.index];
  }

  const PeriodicModel* schedule(FlowId flow) const {
    return std::get_if<PeriodicModel>(&scenario_->flows[flow.index].traffic);
  }

  void advance_clock(TimePoint t) {
    if (t < now_) throw OrderingError("event at " + format_real(t) + " precedes " + format_real(now_));
    now_ = t;
  }

  FlowId pick_victim(SwitchId sw, TimePoint t) {
    const CacheEntry* best = nullptr;
    Duration best_value = -1.0;
    for (const auto& e : cache_.entries(sw)) {
      const Duration v = timer_value(e.flow, t);
      if (!best || v > best_value ||
          (v == best_value && std::tie(e.installed_at, e.flow) < std::tie(best->installed_at, best->flow))) {
        best = &e;
        best_value = v;
      }
    }
    return best->flow;
  }

  const Scenario* scenario_;
  FdrcConfig config_;
  CacheAssignment cache_;
  std::vector<TimerState> timers_;
  TimePoint now_ = -std::numeric_limits<double>::infinity();
};

static_assert(ReplacementPolicy<FdrcPolicy>);

}  // namespace rulecache
