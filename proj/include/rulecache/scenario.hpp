#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "rulecache/core_model.hpp"
#include "rulecache/traffic.hpp"

namespace rulecache {

template <class T>
struct Range {
  T low{};
  T high{};
  friend bool operator==(const Range&, const Range&) = default;
};

// Parameters of one randomly generated network instance.
struct ScenarioConfig {
  std::uint32_t n_flows = 1000;
  std::uint32_t n_switches = 50;
  double predictable_fraction = 0.4;
  Range<std::uint32_t> cache_size_range{15, 25};
  Range<std::uint32_t> path_len_range{1, 10};
  Range<Duration> period_range{2.0, 100.0};
  Duration sim_end = 3600.0;
  double packet_rate = 1.0;
  Duration t_max = 100.0;
  std::uint64_t seed = 1;

  // Every burst lasts at least this long.
  static constexpr Duration kMinActiveDuration = 1.0;

  void validate() const {
    if (n_switches < 1) throw ConfigError("switches", "must be at least 1");
    if (!(predictable_fraction >= 0.0 && predictable_fraction <= 1.0))
      throw ConfigError("predictable_fraction", "must lie in [0, 1]");
    if (cache_size_range.low < 1) throw ConfigError("cache_size_low", "must be at least 1");
    if (cache_size_range.low > cache_size_range.high)
      throw ConfigError("cache_size_low", "exceeds cache_size_high");
    if (path_len_range.low < 1) throw ConfigError("path_len_low", "must be at least 1");
    if (path_len_range.low > path_len_range.high) throw ConfigError("path_len_low", "exceeds path_len_high");
    if (path_len_range.high > n_switches) throw ConfigError("path_len_high", "exceeds the number of switches");
    if (!(period_range.low >= kMinActiveDuration) || !std::isfinite(period_range.high))
      throw ConfigError("period_low", "must be at least 1 second");
    if (period_range.low > period_range.high) throw ConfigError("period_low", "exceeds period_high");
    if (!(sim_end > 0.0) || !std::isfinite(sim_end)) throw ConfigError("sim_end", "must be positive");
    if (!(packet_rate > 0.0) || !std::isfinite(packet_rate)) throw ConfigError("packet_rate", "must be positive");
    if (!(t_max > 0.0) || !std::isfinite(t_max)) throw ConfigError("t_max", "must be positive");
  }

  std::uint32_t predictable_count() const {
    return static_cast<std::uint32_t>(std::llround(static_cast<double>(n_flows) * predictable_fraction));
  }
};

struct Scenario {
  std::vector<Switch> switches;
  std::vector<Flow> flows;

  // Throws PreconditionError on dangling switch references or sparse ids.
  void validate() const {
    for (std::size_t j = 0; j < switches.size(); ++j) {
      if (switches[j].id.index != j) throw PreconditionError("switch ids must be dense");
      if (switches[j].capacity < 1) throw PreconditionError("switch capacity must be at least 1");
    }
    for (std::size_t i = 0; i < flows.size(); ++i) {
      const auto& f = flows[i];
      if (f.id.index != i) throw PreconditionError("flow ids must be dense");
      if (f.path.size() == 0) throw PreconditionError("flow " + std::to_string(i) + " has an empty path");
      for (auto s : f.path)
        if (s.index >= switches.size())
          throw PreconditionError("flow " + std::to_string(i) + " references unknown switch");
      rulecache::validate(f.traffic);
    }
  }

  std::size_t predictable_count() const {
    return static_cast<std::size_t>(
        std::count_if(flows.begin(), flows.end(), [](const Flow& f) { return f.predictable(); }));
  }

  friend bool operator==(const Scenario& a, const Scenario& b) {
    if (a.flows != b.flows || a.switches.size() != b.switches.size()) return false;
    for (std::size_t j = 0; j < a.switches.size(); ++j)
      if (a.switches[j].id != b.switches[j].id || a.switches[j].capacity != b.switches[j].capacity) return false;
    return true;
  }
};

// Integer from Normal((low+high)/2, (high-low)/6), resampled into [low, high]
// and rounded. After 100 rejections the draw is clamped instead.
template <class Rng>
std::int64_t truncated_normal_int(std::int64_t low, std::int64_t high, Rng& rng) {
  if (low > high) throw PreconditionError("truncated_normal_int: low > high");
  if (low == high) return low;
  const double lo = static_cast<double>(low);
  const double hi = static_cast<double>(high);
  std::normal_distribution<double> normal((lo + hi) / 2.0, (hi - lo) / 6.0);
  double x = normal(rng);
  for (int tries = 1; (x < lo || x > hi) && tries < 100; ++tries) x = normal(rng);
  x = std::clamp(x, lo, hi);
  return std::clamp(static_cast<std::int64_t>(std::llround(x)), low, high);
}

namespace detail {

enum class Stream : std::uint32_t { Capacity = 1, Assignment = 2, Path = 3, Periodic = 4, Random = 5 };

// Independent generator per (seed, purpose, index), so that e.g. changing the
// cache-size range leaves every flow untouched.
inline std::mt19937_64 stream_rng(std::uint64_t seed, Stream s, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

template <class Rng>
double uniform(double a, double b, Rng& rng) {
  if (a == b) return a;
  return std::uniform_real_distribution<double>(a, b)(rng);
}

}  // namespace detail

// Random instance per `config`; a pure function of it.
inline Scenario generate(const ScenarioConfig& config) {
  config.validate();
  using detail::Stream;
  using detail::stream_rng;

  Scenario sc;
  sc.switches.reserve(config.n_switches);
  auto cap_rng = stream_rng(config.seed, Stream::Capacity, 0);
  for (std::uint32_t j = 0; j < config.n_switches; ++j) {
    auto b = truncated_normal_int(config.cache_size_range.low, config.cache_size_range.high, cap_rng);
    sc.switches.push_back(Switch{SwitchId{j}, static_cast<std::uint32_t>(b)});
  }

  // The predictable set is a prefix of one shuffled order, so raising the
  // fraction only converts more flows.
  std::vector<std::uint32_t> order(config.n_flows);
  std::iota(order.begin(), order.end(), 0u);
  auto assign_rng = stream_rng(config.seed, Stream::Assignment, 0);
  std::shuffle(order.begin(), order.end(), assign_rng);
  std::vector<bool> predictable(config.n_flows, false);
  for (std::uint32_t k = 0; k < config.predictable_count(); ++k) predictable[order[k]] = true;

  std::vector<SwitchId> pool(config.n_switches);
  sc.flows.reserve(config.n_flows);
  for (std::uint32_t i = 0; i < config.n_flows; ++i) {
    auto path_rng = stream_rng(config.seed, Stream::Path, i);
    auto len = static_cast<std::uint32_t>(
        truncated_normal_int(config.path_len_range.low, config.path_len_range.high, path_rng));
    for (std::uint32_t j = 0; j < config.n_switches; ++j) pool[j] = SwitchId{j};
    for (std::uint32_t k = 0; k < len; ++k) {
      std::uniform_int_distribution<std::uint32_t> pick(k, config.n_switches - 1);
      std::swap(pool[k], pool[pick(path_rng)]);
    }
    Path path(std::vector<SwitchId>(pool.begin(), pool.begin() + len));

    TrafficModel traffic;
    if (predictable[i]) {
      auto prng = stream_rng(config.seed, Stream::Periodic, i);
      PeriodicModel m;
      m.period = detail::uniform(config.period_range.low, config.period_range.high, prng);
      m.active_duration = detail::uniform(ScenarioConfig::kMinActiveDuration, m.period, prng);
      m.phase = detail::uniform(0.0, m.period, prng);
      if (m.phase >= m.period) m.phase = 0.0;
      m.packet_rate = config.packet_rate;
      traffic = m;
    } else {
      auto rrng = stream_rng(config.seed, Stream::Random, i);
      traffic = RandomModel{rrng(), config.sim_end};
    }
    sc.flows.push_back(Flow{FlowId{i}, std::move(path), traffic});
  }
  return sc;
}

// Plain-text scenario files -----------------------------------------------------
//
//   # comment
//   switch <id> <capacity>
//   flow <id> periodic <period> <active_duration> <phase> <packet_rate> path <s>...
//   flow <id> random <seed> <horizon> path <s>...
//
// Reals are written in shortest round-trip form, so dump/load is lossless.

inline std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw std::runtime_error("format_real failed");
  return std::string(buf, end);
}

inline void dump_scenario(const Scenario& sc, std::ostream& os) {
  os << "# rulecache scenario v1\n";
  for (const auto& s : sc.switches) os << "switch " << s.id.index << ' ' << s.capacity << '\n';
  for (const auto& f : sc.flows) {
    os << "flow " << f.id.index << ' ';
    if (const auto* p = std::get_if<PeriodicModel>(&f.traffic)) {
      os << "periodic " << format_real(p->period) << ' ' << format_real(p->active_duration) << ' '
         << format_real(p->phase) << ' ' << format_real(p->packet_rate);
    } else {
      const auto& r = std::get<RandomModel>(f.traffic);
      os << "random " << r.seed << ' ' << format_real(r.horizon);
    }
    os << " path";
    for (auto s : f.path) os << ' ' << s.index;
    os << '\n';
  }
}

struct ScenarioParseError : std::runtime_error {
  ScenarioParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what) {}
};

inline Scenario load_scenario(std::istream& is) {
  Scenario sc;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) { throw ScenarioParseError(lineno, what); };
  auto real = [&](std::istringstream& ls) {
    std::string tok;
    if (!(ls >> tok)) fail("missing number");
    double v = 0.0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size()) fail("bad number '" + tok + "'");
    return v;
  };
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    if (kind == "switch") {
      std::uint32_t id = 0, cap = 0;
      if (!(ls >> id >> cap)) fail("expected 'switch <id> <capacity>'");
      if (id != sc.switches.size()) fail("switch ids must be dense and ascending");
      sc.switches.push_back(Switch{SwitchId{id}, cap});
    } else if (kind == "flow") {
      std::uint32_t id = 0;
      std::string model;
      if (!(ls >> id >> model)) fail("expected 'flow <id> <model> ...'");
      if (id != sc.flows.size()) fail("flow ids must be dense and ascending");
      TrafficModel traffic;
      if (model == "periodic") {
        PeriodicModel m;
        m.period = real(ls);
        m.active_duration = real(ls);
        m.phase = real(ls);
        m.packet_rate = real(ls);
        traffic = m;
      } else if (model == "random") {
        RandomModel m;
        if (!(ls >> m.seed)) fail("bad random seed");
        m.horizon = real(ls);
        traffic = m;
      } else {
        fail("unknown traffic model '" + model + "'");
      }
      std::string kw;
      if (!(ls >> kw) || kw != "path") fail("expected 'path'");
      std::vector<SwitchId> hops;
      for (std::uint32_t s; ls >> s;) hops.push_back(SwitchId{s});
      if (!ls.eof()) fail("bad switch id in path");
      try {
        sc.flows.push_back(Flow{FlowId{id}, Path(std::move(hops)), traffic});
      } catch (const PreconditionError& e) {
        fail(e.what());
      }
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  try {
    sc.validate();
  } catch (const std::exception& e) {
    throw ScenarioParseError(lineno, e.what());
  }
  return sc;
}

}  // namespace rulecache
