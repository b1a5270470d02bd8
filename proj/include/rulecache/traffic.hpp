#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <variant>
#include <vector>

#include "rulecache/core_model.hpp"

namespace rulecache {

// On/off traffic: a burst of length `active_duration` starts every `period`
// seconds, the first at `phase`. Inside a burst, packets sit on a fixed grid
// of spacing 1/packet_rate starting at the burst start. A packet at offset
// k/packet_rate belongs to the burst iff k/packet_rate < active_duration.
struct PeriodicModel {
  Duration period = 1.0;
  Duration active_duration = 1.0;
  Duration phase = 0.0;
  double packet_rate = 1.0;

  void validate() const {
    if (!(period > 0.0)) throw ConfigError("period", "must be positive");
    if (!(active_duration > 0.0) || active_duration > period)
      throw ConfigError("active_duration", "must lie in (0, period]");
    if (!(phase >= 0.0) || !(phase < period)) throw ConfigError("phase", "must lie in [0, period)");
    if (!(packet_rate > 0.0) || !std::isfinite(packet_rate))
      throw ConfigError("packet_rate", "must be positive");
  }

  TimePoint burst_start(std::uint64_t n) const { return phase + static_cast<double>(n) * period; }

  Duration grid_offset(std::uint64_t k) const { return static_cast<double>(k) / packet_rate; }

  std::uint64_t packets_per_burst() const {
    auto k = static_cast<std::uint64_t>(std::ceil(active_duration * packet_rate));
    while (k > 1 && grid_offset(k - 1) >= active_duration) --k;
    while (grid_offset(k) < active_duration) ++k;
    return k;
  }

  TimePoint packet_time(std::uint64_t n, std::uint64_t k) const { return burst_start(n) + grid_offset(k); }

  friend bool operator==(const PeriodicModel&, const PeriodicModel&) = default;
};

// Sparse random traffic: inter-arrival gaps are Uniform(0, horizon) draws
// from a generator seeded with `seed`. The first packet comes one gap after 0.
struct RandomModel {
  std::uint64_t seed = 0;
  Duration horizon = 1.0;

  void validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("horizon", "must be positive");
  }

  friend bool operator==(const RandomModel&, const RandomModel&) = default;
};

using TrafficModel = std::variant<PeriodicModel, RandomModel>;

inline bool is_periodic(const TrafficModel& m) { return std::holds_alternative<PeriodicModel>(m); }

inline void validate(const TrafficModel& m) {
  std::visit([](const auto& v) { v.validate(); }, m);
}

// Enumerates a model's packet times in increasing order, from time 0 on.
class ArrivalCursor {
 public:
  explicit ArrivalCursor(const TrafficModel& model) : model_(model) {
    validate(model_);
    if (auto* r = std::get_if<RandomModel>(&model_)) {
      rng_.seed(r->seed);
      gap_ = std::uniform_real_distribution<double>(0.0, r->horizon);
    } else {
      per_burst_ = std::get<PeriodicModel>(model_).packets_per_burst();
    }
  }

  // Next packet time; strictly greater than the previous one.
  TimePoint next() {
    if (auto* p = std::get_if<PeriodicModel>(&model_)) {
      TimePoint t = p->packet_time(burst_, slot_);
      if (++slot_ == per_burst_) {
        slot_ = 0;
        ++burst_;
      }
      return t;
    }
    double g = 0.0;
    while (g == 0.0) g = gap_(rng_);
    clock_ += g;
    return clock_;
  }

  // Next packet time at or after `from`, consuming everything before it.
  TimePoint next_from(TimePoint from) {
    if (auto* p = std::get_if<PeriodicModel>(&model_)) {
      // Jump close to the right burst, then walk.
      if (from > p->phase) {
        auto n = static_cast<std::uint64_t>(std::floor((from - p->phase) / p->period));
        if (n > burst_ + 1) {
          burst_ = n - 1;
          slot_ = 0;
        }
      }
    }
    TimePoint t = next();
    while (t < from) t = next();
    return t;
  }

 private:
  TrafficModel model_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> gap_;
  TimePoint clock_ = 0.0;
  std::uint64_t per_burst_ = 0;
  std::uint64_t burst_ = 0;
  std::uint64_t slot_ = 0;
};

// Packet times of `model` in [from, until), strictly increasing.
inline std::vector<TimePoint> arrivals(const TrafficModel& model, TimePoint from, TimePoint until) {
  if (from > until) throw PreconditionError("arrivals: from > until");
  std::vector<TimePoint> out;
  ArrivalCursor cursor(model);
  for (TimePoint t = cursor.next_from(from); t < until; t = cursor.next()) out.push_back(t);
  return out;
}

namespace detail {

// First packet time of a periodic schedule satisfying `after(t)`.
template <class Pred>
TimePoint first_periodic_arrival(const PeriodicModel& m, TimePoint t, Pred after) {
  const std::uint64_t per_burst = m.packets_per_burst();
  std::uint64_t n = 0;
  if (t > m.phase) {
    auto c = static_cast<std::uint64_t>(std::floor((t - m.phase) / m.period));
    n = c > 0 ? c - 1 : 0;
  }
  for (;; ++n) {
    const TimePoint start = m.burst_start(n);
    if (after(start)) return start;
    std::uint64_t k = 0;
    if (t > start) {
      auto guess = static_cast<std::uint64_t>(std::floor((t - start) * m.packet_rate));
      k = guess > 0 ? guess - 1 : 0;
    }
    for (; k < per_burst; ++k) {
      const TimePoint x = m.packet_time(n, k);
      if (after(x)) return x;
    }
  }
}

}  // namespace detail

// Smallest scheduled packet time strictly greater than t.
inline TimePoint next_arrival(const PeriodicModel& model, TimePoint t) {
  return detail::first_periodic_arrival(model, t, [t](TimePoint x) { return x > t; });
}

// Smallest scheduled packet time at or after t.
inline TimePoint next_arrival_at_or_after(const PeriodicModel& model, TimePoint t) {
  return detail::first_periodic_arrival(model, t, [t](TimePoint x) { return x >= t; });
}

// Whether t is the start instant of one of the model's bursts.
inline bool is_burst_start(const PeriodicModel& model, TimePoint t) {
  if (t < model.phase) return false;
  auto n = static_cast<std::uint64_t>(std::llround((t - model.phase) / model.period));
  return model.burst_start(n) == t;
}

// A flow: its identity, forwarding path and traffic. Predictable flows are
// exactly the periodic ones.
struct Flow {
  FlowId id;
  Path path;
  TrafficModel traffic;

  bool predictable() const { return is_periodic(traffic); }

  friend bool operator==(const Flow&, const Flow&) = default;
};

}  // namespace rulecache
