#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace rulecache {

// Error types ---------------------------------------------------------------

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when an install would push a switch past its capacity.
struct CapacityError : std::logic_error {
  using std::logic_error::logic_error;
};

// Raised when events are delivered out of time order.
struct OrderingError : std::logic_error {
  using std::logic_error::logic_error;
};

// Invalid configuration; `field()` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct UndefinedRatioError : std::domain_error {
  using std::domain_error::domain_error;
};

// Time ----------------------------------------------------------------------

// Simulation time in seconds from origin 0.
using TimePoint = double;
using Duration = double;

// Identifiers ---------------------------------------------------------------

struct FlowId {
  std::uint32_t index = 0;
  friend constexpr auto operator<=>(FlowId, FlowId) = default;
};

struct SwitchId {
  std::uint32_t index = 0;
  friend constexpr auto operator<=>(SwitchId, SwitchId) = default;
};

// One exact-match rule per flow; the rule is named by its flow.
struct Rule {
  FlowId flow;
  friend constexpr auto operator<=>(Rule, Rule) = default;
};

struct Switch {
  SwitchId id;
  std::uint32_t capacity = 1;
};

// Ordered forwarding path; non-empty, no repeated switch.
class Path {
 public:
  Path() = default;

  explicit Path(std::vector<SwitchId> switches) : switches_(std::move(switches)) {
    if (switches_.empty()) throw PreconditionError("path must not be empty");
    std::unordered_set<std::uint32_t> seen;
    for (auto s : switches_) {
      if (!seen.insert(s.index).second)
        throw PreconditionError("path visits switch " + std::to_string(s.index) + " twice");
    }
  }

  const std::vector<SwitchId>& switches() const noexcept { return switches_; }
  std::size_t size() const noexcept { return switches_.size(); }
  bool contains(SwitchId s) const {
    return std::find(switches_.begin(), switches_.end(), s) != switches_.end();
  }

  auto begin() const noexcept { return switches_.begin(); }
  auto end() const noexcept { return switches_.end(); }

  friend bool operator==(const Path&, const Path&) = default;

 private:
  std::vector<SwitchId> switches_;
};

// Cache assignment ------------------------------------------------------------

// Bookkeeping kept with each cached rule; policies read whichever fields
// their victim rule needs.
struct CacheEntry {
  FlowId flow;
  TimePoint installed_at = 0.0;
  TimePoint last_access = 0.0;
};

// The caching indicator X_ij, held per switch. Every switch owns its entry
// set; a dense (flow, switch) slot table gives O(1) membership, install and
// evict. Installing into a full switch is an error: only a policy may make
// room, by evicting first.
class CacheAssignment {
 public:
  CacheAssignment() = default;

  CacheAssignment(std::size_t n_flows, const std::vector<Switch>& switches)
      : n_flows_(n_flows),
        capacity_(switches.size()),
        tables_(switches.size()),
        slot_(n_flows * switches.size(), kAbsent) {
    for (std::size_t j = 0; j < switches.size(); ++j) {
      if (switches[j].id.index != j)
        throw PreconditionError("switch ids must be dense and ordered");
      if (switches[j].capacity < 1)
        throw PreconditionError("switch " + std::to_string(j) + " has zero capacity");
      capacity_[j] = switches[j].capacity;
      tables_[j].reserve(std::min<std::size_t>(switches[j].capacity, n_flows));
    }
  }

  std::size_t flow_count() const noexcept { return n_flows_; }
  std::size_t switch_count() const noexcept { return tables_.size(); }

  bool is_cached(FlowId flow, SwitchId sw) const { return slot_[index(flow, sw)] != kAbsent; }

  std::size_t cached_count(SwitchId sw) const { return table(sw).size(); }

  std::uint32_t capacity(SwitchId sw) const {
    check_switch(sw);
    return capacity_[sw.index];
  }

  bool is_full(SwitchId sw) const { return cached_count(sw) >= capacity(sw); }

  void install(FlowId flow, SwitchId sw, TimePoint t) {
    auto& s = slot_[index(flow, sw)];
    if (s != kAbsent)
      throw PreconditionError("rule " + std::to_string(flow.index) + " already cached at switch " +
                              std::to_string(sw.index));
    auto& tab = tables_[sw.index];
    if (tab.size() >= capacity_[sw.index])
      throw CapacityError("switch " + std::to_string(sw.index) + " is full");
    s = static_cast<std::int32_t>(tab.size());
    tab.push_back(CacheEntry{flow, t, t});
  }

  void evict(FlowId flow, SwitchId sw) {
    auto& s = slot_[index(flow, sw)];
    if (s == kAbsent)
      throw PreconditionError("rule " + std::to_string(flow.index) + " not cached at switch " +
                              std::to_string(sw.index));
    auto& tab = tables_[sw.index];
    auto pos = static_cast<std::size_t>(s);
    if (pos + 1 != tab.size()) {
      tab[pos] = tab.back();
      slot_[index(tab[pos].flow, sw)] = static_cast<std::int32_t>(pos);
    }
    tab.pop_back();
    s = kAbsent;
  }

  void touch(FlowId flow, SwitchId sw, TimePoint t) {
    auto s = slot_[index(flow, sw)];
    if (s == kAbsent) throw PreconditionError("touch on uncached rule");
    tables_[sw.index][static_cast<std::size_t>(s)].last_access = t;
  }

  // Entries cached at `sw`, in no particular order.
  const std::vector<CacheEntry>& entries(SwitchId sw) const { return table(sw); }

  const CacheEntry& entry(FlowId flow, SwitchId sw) const {
    auto s = slot_[index(flow, sw)];
    if (s == kAbsent) throw PreconditionError("entry lookup on uncached rule");
    return tables_[sw.index][static_cast<std::size_t>(s)];
  }

  // Dense X matrix, row-major by flow: x[i * m + j].
  std::vector<bool> matrix() const {
    std::vector<bool> x(slot_.size());
    for (std::size_t k = 0; k < slot_.size(); ++k) x[k] = slot_[k] != kAbsent;
    return x;
  }

  // True when every switch respects its capacity.
  bool within_capacity() const {
    for (std::size_t j = 0; j < tables_.size(); ++j)
      if (tables_[j].size() > capacity_[j]) return false;
    return true;
  }

 private:
  static constexpr std::int32_t kAbsent = -1;

  void check_switch(SwitchId sw) const {
    if (sw.index >= tables_.size())
      throw PreconditionError("unknown switch id " + std::to_string(sw.index));
  }

  const std::vector<CacheEntry>& table(SwitchId sw) const {
    check_switch(sw);
    return tables_[sw.index];
  }

  std::size_t index(FlowId flow, SwitchId sw) const {
    if (flow.index >= n_flows_) throw PreconditionError("unknown flow id " + std::to_string(flow.index));
    check_switch(sw);
    return static_cast<std::size_t>(flow.index) * tables_.size() + sw.index;
  }

  std::size_t n_flows_ = 0;
  std::vector<std::uint32_t> capacity_;
  std::vector<std::vector<CacheEntry>> tables_;
  std::vector<std::int32_t> slot_;
};

inline bool is_cached(const CacheAssignment& a, FlowId flow, SwitchId sw) { return a.is_cached(flow, sw); }
inline std::size_t cached_count(const CacheAssignment& a, SwitchId sw) { return a.cached_count(sw); }

}  // namespace rulecache
