#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "rulecache/engine.hpp"
#include "rulecache/fdrc.hpp"
#include "rulecache/policy.hpp"
#include "rulecache/scenario.hpp"

namespace rulecache {

// Everything one invocation needs: the instance generator settings plus how
// to run and report.
struct ExperimentConfig {
  ScenarioConfig scenario;
  std::vector<PolicyKind> policies{PolicyKind::Fdrc, PolicyKind::Lru, PolicyKind::Fifo};
  std::uint32_t replications = 20;
  Duration window = 10.0;
  PrefetchMode prefetch = PrefetchMode::RetentionOnly;
  bool per_packet = false;

  RatioMode ratio_mode() const { return per_packet ? RatioMode::PerPacket : RatioMode::Normalized; }

  ReplicateOptions replicate_options() const {
    ReplicateOptions o;
    o.run.fdrc = FdrcConfig{scenario.t_max, prefetch};
    o.run.sim_end = scenario.sim_end;
    o.run.window = window;
    o.ratio_mode = ratio_mode();
    return o;
  }

  void validate() const {
    scenario.validate();
    if (policies.empty()) throw ConfigError("policy", "at least one policy is required");
    if (replications < 1) throw ConfigError("replications", "must be at least 1");
    if (!(window > 0.0)) throw ConfigError("window", "must be positive");
  }
};

enum class ExperimentName { Hour, Day, CacheSizeSweep, PredictableSweep, Custom };

struct ExperimentSpec {
  ExperimentName name = ExperimentName::Custom;
  ExperimentConfig base;
  std::vector<Range<std::uint32_t>> cache_ranges;
  std::vector<double> fractions;

  void validate() const {
    base.validate();
    if (name == ExperimentName::CacheSizeSweep && cache_ranges.empty())
      throw ConfigError("ranges", "sweep needs at least one range");
    if (name == ExperimentName::PredictableSweep && fractions.empty())
      throw ConfigError("fractions", "sweep needs at least one fraction");
  }
};

inline std::vector<Range<std::uint32_t>> default_cache_ranges() {
  return {{5, 15}, {15, 25}, {25, 35}, {35, 45}, {45, 55}};
}

inline std::vector<double> default_fractions() { return {0.0, 0.2, 0.4, 0.6, 0.8}; }

inline ExperimentSpec make_experiment(ExperimentName name, ExperimentConfig base = {}) {
  ExperimentSpec spec{name, std::move(base), {}, {}};
  switch (name) {
    case ExperimentName::Hour: spec.base.scenario.sim_end = 3600.0; break;
    case ExperimentName::Day: spec.base.scenario.sim_end = 86400.0; break;
    case ExperimentName::CacheSizeSweep: spec.cache_ranges = default_cache_ranges(); break;
    case ExperimentName::PredictableSweep: spec.fractions = default_fractions(); break;
    case ExperimentName::Custom: break;
  }
  return spec;
}

inline ExperimentName parse_experiment_name(std::string_view s) {
  if (s == "hour") return ExperimentName::Hour;
  if (s == "day") return ExperimentName::Day;
  if (s == "cache-size-sweep") return ExperimentName::CacheSizeSweep;
  if (s == "predictable-sweep") return ExperimentName::PredictableSweep;
  if (s == "custom") return ExperimentName::Custom;
  throw ConfigError("experiment", "unknown experiment '" + std::string(s) + "'");
}

// key = value configuration ------------------------------------------------------

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  auto [p, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || p != last) throw ConfigError(key, "cannot parse '" + value + "'");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "on" || value == "true" || value == "1" || value == "yes") return true;
  if (value == "off" || value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key, "expected on/off, got '" + value + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace detail

inline Range<std::uint32_t> parse_cache_range(const std::string& s) {
  const auto dash = s.find('-');
  if (dash == std::string::npos) throw ConfigError("ranges", "expected LOW-HIGH, got '" + s + "'");
  Range<std::uint32_t> r{detail::parse_number<std::uint32_t>("ranges", detail::trim(s.substr(0, dash))),
                         detail::parse_number<std::uint32_t>("ranges", detail::trim(s.substr(dash + 1)))};
  if (r.low < 1) throw ConfigError("ranges", "cache size must be at least 1");
  if (r.low > r.high) throw ConfigError("ranges", "low exceeds high in '" + s + "'");
  return r;
}

inline double parse_fraction(const std::string& s) {
  const double f = detail::parse_number<double>("fractions", detail::trim(s));
  if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("fractions", "fraction " + s + " is outside [0, 1]");
  return f;
}

// Sets one field by its config key. Unknown keys are errors.
inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_number;
  auto& s = c.scenario;
  if (key == "flows") s.n_flows = parse_number<std::uint32_t>(key, value);
  else if (key == "switches") s.n_switches = parse_number<std::uint32_t>(key, value);
  else if (key == "predictable_fraction") s.predictable_fraction = parse_number<double>(key, value);
  else if (key == "cache_size_low") s.cache_size_range.low = parse_number<std::uint32_t>(key, value);
  else if (key == "cache_size_high") s.cache_size_range.high = parse_number<std::uint32_t>(key, value);
  else if (key == "path_len_low") s.path_len_range.low = parse_number<std::uint32_t>(key, value);
  else if (key == "path_len_high") s.path_len_range.high = parse_number<std::uint32_t>(key, value);
  else if (key == "period_low") s.period_range.low = parse_number<double>(key, value);
  else if (key == "period_high") s.period_range.high = parse_number<double>(key, value);
  else if (key == "sim_end") s.sim_end = parse_number<double>(key, value);
  else if (key == "packet_rate") s.packet_rate = parse_number<double>(key, value);
  else if (key == "t_max") s.t_max = parse_number<double>(key, value);
  else if (key == "seed") s.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "replications") c.replications = parse_number<std::uint32_t>(key, value);
  else if (key == "window") c.window = parse_number<double>(key, value);
  else if (key == "prefetch")
    c.prefetch = parse_bool(key, value) ? PrefetchMode::ActivePrefetch : PrefetchMode::RetentionOnly;
  else if (key == "per_packet") c.per_packet = parse_bool(key, value);
  else if (key == "policy") {
    c.policies.clear();
    for (const auto& p : detail::split(value, ',')) c.policies.push_back(parse_policy(p));
  } else {
    throw ConfigError(key, "unknown configuration key");
  }
}

// Reads `key = value` lines; `#` starts a comment.
inline void load_config(std::istream& is, ExperimentConfig& c) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
    apply_setting(c, detail::trim(body.substr(0, eq)), detail::trim(body.substr(eq + 1)));
  }
}

// Fully resolved config in the same `key = value` format load_config reads.
inline void write_config(std::ostream& os, const ExperimentConfig& c) {
  const auto& s = c.scenario;
  std::string pol;
  for (auto p : c.policies) pol += (pol.empty() ? "" : ",") + std::string(to_string(p));
  os << "flows = " << s.n_flows << '\n'
     << "switches = " << s.n_switches << '\n'
     << "predictable_fraction = " << format_real(s.predictable_fraction) << '\n'
     << "cache_size_low = " << s.cache_size_range.low << '\n'
     << "cache_size_high = " << s.cache_size_range.high << '\n'
     << "path_len_low = " << s.path_len_range.low << '\n'
     << "path_len_high = " << s.path_len_range.high << '\n'
     << "period_low = " << format_real(s.period_range.low) << '\n'
     << "period_high = " << format_real(s.period_range.high) << '\n'
     << "sim_end = " << format_real(s.sim_end) << '\n'
     << "packet_rate = " << format_real(s.packet_rate) << '\n'
     << "t_max = " << format_real(s.t_max) << '\n'
     << "seed = " << s.seed << '\n'
     << "replications = " << c.replications << '\n'
     << "window = " << format_real(c.window) << '\n'
     << "prefetch = " << (c.prefetch == PrefetchMode::ActivePrefetch ? "on" : "off") << '\n'
     << "per_packet = " << (c.per_packet ? "on" : "off") << '\n'
     << "policy = " << pol << '\n';
}

// Experiments ------------------------------------------------------------------

inline std::vector<ReplicateResult> run_experiment(const ExperimentConfig& c) {
  c.validate();
  return replicate(c.scenario, c.policies, c.replications, c.replicate_options());
}

inline constexpr const char* kSummaryHeader = "policy,replications,ratio_mode,mean_ratio,sd_ratio";

inline void write_summary_csv(std::ostream& os, const std::vector<ReplicateResult>& results, RatioMode mode) {
  os << kSummaryHeader << '\n';
  for (const auto& r : results)
    os << to_string(r.policy) << ',' << r.ledgers.size() << ','
       << (mode == RatioMode::Normalized ? "normalized" : "per_packet") << ',' << format_ratio(r.total.mean) << ','
       << format_ratio(r.total.sd) << '\n';
}

struct SweepRow {
  std::string point;  // "5-15" or "0.4"
  PolicyKind policy = PolicyKind::Fdrc;
  Summary ratio;
};

inline std::vector<SweepRow> sweep_cache_size(const ExperimentConfig& base,
                                              const std::vector<Range<std::uint32_t>>& ranges) {
  if (ranges.empty()) throw ConfigError("ranges", "sweep needs at least one range");
  std::vector<SweepRow> rows;
  for (const auto& r : ranges) {
    if (r.low > r.high) throw ConfigError("ranges", "low exceeds high");
    ExperimentConfig c = base;
    c.scenario.cache_size_range = r;
    for (const auto& res : run_experiment(c))
      rows.push_back({std::to_string(r.low) + "-" + std::to_string(r.high), res.policy, res.total});
  }
  return rows;
}

inline std::vector<SweepRow> sweep_predictable(const ExperimentConfig& base, const std::vector<double>& fractions) {
  if (fractions.empty()) throw ConfigError("fractions", "sweep needs at least one fraction");
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("fractions", "fraction outside [0, 1]");
    ExperimentConfig c = base;
    c.scenario.predictable_fraction = f;
    for (const auto& res : run_experiment(c)) rows.push_back({format_real(f), res.policy, res.total});
  }
  return rows;
}

// `key_column` is "range" or "fraction".
inline void write_sweep_csv(std::ostream& os, std::string_view key_column, const std::vector<SweepRow>& rows) {
  os << key_column << ",policy,mean_ratio,sd_ratio\n";
  for (const auto& r : rows)
    os << r.point << ',' << to_string(r.policy) << ',' << format_ratio(r.ratio.mean) << ','
       << format_ratio(r.ratio.sd) << '\n';
}

}  // namespace rulecache
