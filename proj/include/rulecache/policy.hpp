#pragma once

#include <concepts>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "rulecache/core_model.hpp"
#include "rulecache/scenario.hpp"

namespace rulecache {

enum class PolicyKind { Fifo, Lru, Fdrc };

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Fifo: return "fifo";
    case PolicyKind::Lru: return "lru";
    case PolicyKind::Fdrc: return "fdrc";
  }
  return "?";
}

inline PolicyKind parse_policy(std::string_view name) {
  if (name == "fifo") return PolicyKind::Fifo;
  if (name == "lru") return PolicyKind::Lru;
  if (name == "fdrc") return PolicyKind::Fdrc;
  throw ConfigError("policy", "unknown policy '" + std::string(name) + "' (expected fifo, lru or fdrc)");
}

// `evicted` is set only when the install had to make room in a full switch.
struct PolicyDecision {
  std::optional<FlowId> evicted;
  bool installed = false;
  friend bool operator==(const PolicyDecision&, const PolicyDecision&) = default;
};

// What happened to one packet at one switch of its path.
struct SwitchOutcome {
  SwitchId sw;
  bool hit = false;
  PolicyDecision decision;
  friend bool operator==(const SwitchOutcome&, const SwitchOutcome&) = default;
};

// Interface the engine drives. `on_packet` appends one outcome per path
// switch, in path order, to `out`.
template <class P>
concept ReplacementPolicy = requires(P p, const P cp, FlowId f, TimePoint t, std::vector<SwitchOutcome>& out) {
  p.on_packet(f, t, out);
  { cp.cache() } -> std::same_as<const CacheAssignment&>;
};

// Victim rules for the packet-driven baselines. `before(a, b)` is true when
// `a` should be evicted ahead of `b`; equal timestamps go to the lower flow id.
struct FifoVictim {
  static constexpr bool kRefreshOnHit = false;
  static bool before(const CacheEntry& a, const CacheEntry& b) {
    return std::tie(a.installed_at, a.flow) < std::tie(b.installed_at, b.flow);
  }
};

struct LruVictim {
  static constexpr bool kRefreshOnHit = true;
  static bool before(const CacheEntry& a, const CacheEntry& b) {
    return std::tie(a.last_access, a.flow) < std::tie(b.last_access, b.flow);
  }
};

// Classic per-switch replacement: a miss installs the rule only at the switch
// that missed, evicting per `Victim` when that switch is full.
template <class Victim>
class PacketDrivenPolicy {
 public:
  explicit PacketDrivenPolicy(const Scenario& scenario)
      : scenario_(&scenario), cache_(scenario.flows.size(), scenario.switches) {}

  std::pair<bool, PolicyDecision> on_packet_at_switch(SwitchId sw, FlowId flow, TimePoint t) {
    advance_clock(t);
    if (flow.index >= scenario_->flows.size()) throw PreconditionError("unknown flow id");
    if (!scenario_->flows[flow.index].path.contains(sw))
      throw PreconditionError("switch " + std::to_string(sw.index) + " is not on the path of flow " +
                              std::to_string(flow.index));
    return visit(sw, flow, t);
  }

  void on_packet(FlowId flow, TimePoint t, std::vector<SwitchOutcome>& out) {
    advance_clock(t);
    if (flow.index >= scenario_->flows.size()) throw PreconditionError("unknown flow id");
    for (auto sw : scenario_->flows[flow.index].path) {
      auto [hit, decision] = visit(sw, flow, t);
      out.push_back(SwitchOutcome{sw, hit, decision});
    }
  }

  const CacheAssignment& cache() const { return cache_; }

 private:
  void advance_clock(TimePoint t) {
    if (t < now_) throw OrderingError("event at " + format_real(t) + " precedes " + format_real(now_));
    now_ = t;
  }

  std::pair<bool, PolicyDecision> visit(SwitchId sw, FlowId flow, TimePoint t) {
    if (cache_.is_cached(flow, sw)) {
      if constexpr (Victim::kRefreshOnHit) cache_.touch(flow, sw, t);
      return {true, {}};
    }
    PolicyDecision d;
    if (cache_.is_full(sw)) {
      const auto& entries = cache_.entries(sw);
      const CacheEntry* victim = &entries.front();
      for (const auto& e : entries)
        if (Victim::before(e, *victim)) victim = &e;
      d.evicted = victim->flow;
      cache_.evict(victim->flow, sw);
    }
    cache_.install(flow, sw, t);
    d.installed = true;
    return {false, d};
  }

  const Scenario* scenario_;
  CacheAssignment cache_;
  TimePoint now_ = -std::numeric_limits<double>::infinity();
};

using FifoPolicy = PacketDrivenPolicy<FifoVictim>;
using LruPolicy = PacketDrivenPolicy<LruVictim>;

static_assert(ReplacementPolicy<FifoPolicy>);
static_assert(ReplacementPolicy<LruPolicy>);

}  // namespace rulecache
