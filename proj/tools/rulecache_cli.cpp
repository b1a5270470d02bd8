// rulecache: command-line front end for the rule caching simulator.
//
//   rulecache run [flags]                 replicated runs, one CSV per policy
//   rulecache sweep-cache-size [flags]    capacity sweep
//   rulecache sweep-predictable [flags]   predictable-fraction sweep
//   rulecache fixture FILE [flags]        replay a scenario file
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rulecache/rulecache.hpp"

namespace fs = std::filesystem;
using namespace rulecache;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flags shared by every subcommand. Values are kept as text and applied
// through the same setter the config file uses, after the file is loaded.
struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::vector<std::string> policies;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;  // config key -> text
  bool per_packet = false;
  std::string experiment;
};

void add_common(CLI::App& app, CommonFlags& f, bool generator_flags) {
  app.add_option("--config", f.config_path, "key = value configuration file");
  app.add_option("--out-dir", f.out_dir, "directory for CSV output");
  app.add_option("--policy", f.policies, "fifo | lru | fdrc (repeatable)");
  app.add_option("--set", f.sets, "override any config key: KEY=VALUE (repeatable)");
  app.add_flag("--per-packet", f.per_packet, "report hits per packet instead of per hit opportunity");
  auto keyed = [&](const char* flag, const char* key, const char* help) {
    app.add_option_function<std::string>(flag, [&f, key](const std::string& v) { f.values[key] = v; }, help);
  };
  keyed("--sim-end", "sim_end", "simulated seconds");
  keyed("--t-max", "t_max", "FDRC timer cap in seconds");
  keyed("--prefetch", "prefetch", "on | off: install predictable rules at burst starts");
  keyed("--window", "window", "time-series window in seconds");
  if (generator_flags) {
    keyed("--seed", "seed", "base seed; replication r uses seed + r");
    keyed("--replications", "replications", "instances per policy");
    keyed("--flows", "flows", "number of flows");
    keyed("--switches", "switches", "number of switches");
    keyed("--packet-rate", "packet_rate", "packets per second inside a burst");
  }
}

ExperimentConfig resolve(const CommonFlags& f, ExperimentConfig c = {}) {
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw IoError("cannot read config file " + f.config_path);
    load_config(in, c);
  }
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("set", "expected KEY=VALUE, got '" + kv + "'");
    apply_setting(c, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
  }
  for (const auto& [k, v] : f.values) apply_setting(c, k, v);
  if (!f.policies.empty()) {
    c.policies.clear();
    for (const auto& p : f.policies) c.policies.push_back(parse_policy(p));
  }
  if (f.per_packet) c.per_packet = true;
  c.validate();
  return c;
}

void print_config(const ExperimentConfig& c) {
  std::ostringstream os;
  write_config(os, c);
  std::istringstream is(os.str());
  std::cout << "# resolved configuration\n";
  for (std::string line; std::getline(is, line);) std::cout << "#   " << line << '\n';
}

template <class Fn>
void write_file(const fs::path& path, Fn&& body) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
  std::cout << "wrote " << path.string() << '\n';
}

void report(const std::vector<ReplicateResult>& results, const ExperimentConfig& c, const fs::path& out_dir) {
  for (const auto& r : results) {
    write_file(out_dir / ("timeseries_" + std::string(to_string(r.policy)) + ".csv"),
               [&](std::ostream& os) { write_timeseries_csv(os, r, c.ratio_mode()); });
  }
  write_file(out_dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, results, c.ratio_mode()); });
  for (const auto& r : results)
    std::cout << to_string(r.policy) << ": mean cumulative ratio " << format_ratio(r.total.mean) << " (sd "
              << format_ratio(r.total.sd) << ", " << r.ledgers.size() << " runs)\n";
}

int cmd_run(const CommonFlags& flags, const std::string& dump_path) {
  ExperimentConfig base;
  if (!flags.experiment.empty()) base = make_experiment(parse_experiment_name(flags.experiment)).base;
  const ExperimentConfig c = resolve(flags, base);
  print_config(c);
  if (!dump_path.empty())
    write_file(dump_path, [&](std::ostream& os) { dump_scenario(generate(c.scenario), os); });
  report(run_experiment(c), c, flags.out_dir);
  return 0;
}

int cmd_sweep_cache_size(const CommonFlags& flags, const std::vector<std::string>& range_text) {
  const ExperimentConfig c = resolve(flags);
  std::vector<Range<std::uint32_t>> ranges;
  for (const auto& r : range_text) ranges.push_back(parse_cache_range(r));
  if (ranges.empty()) ranges = default_cache_ranges();
  print_config(c);
  const auto rows = sweep_cache_size(c, ranges);
  write_file(fs::path(flags.out_dir) / "sweep_cache_size.csv",
             [&](std::ostream& os) { write_sweep_csv(os, "range", rows); });
  write_sweep_csv(std::cout, "range", rows);
  return 0;
}

int cmd_sweep_predictable(const CommonFlags& flags, const std::vector<std::string>& fraction_text) {
  const ExperimentConfig c = resolve(flags);
  std::vector<double> fractions;
  for (const auto& f : fraction_text) fractions.push_back(parse_fraction(f));
  if (fractions.empty()) fractions = default_fractions();
  print_config(c);
  const auto rows = sweep_predictable(c, fractions);
  write_file(fs::path(flags.out_dir) / "sweep_predictable.csv",
             [&](std::ostream& os) { write_sweep_csv(os, "fraction", rows); });
  write_sweep_csv(std::cout, "fraction", rows);
  return 0;
}

int cmd_fixture(const CommonFlags& flags, const std::string& path, bool check) {
  const ExperimentConfig c = resolve(flags);
  std::ifstream in(path);
  if (!in) throw IoError("cannot read scenario file " + path);
  const Scenario sc = load_scenario(in);
  print_config(c);
  std::cout << "# scenario " << path << ": " << sc.switches.size() << " switches, " << sc.flows.size()
            << " flows\n";
  std::vector<ReplicateResult> results;
  for (auto policy : c.policies) {
    RunOptions ro = c.replicate_options().run;
    ro.policy = policy;
    ro.check_invariants = check;
    ReplicateResult r;
    r.policy = policy;
    r.seeds = {0};
    r.ledgers = {run(sc, ro)};
    r.ratios = {hit_ratio_or_nan(r.ledgers[0], c.ratio_mode())};
    r.total = summarize(r.ratios);
    results.push_back(std::move(r));
  }
  report(results, c, flags.out_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TCAM rule caching simulator: FDRC, LRU and FIFO"};
  app.require_subcommand(1);

  CommonFlags run_flags, cache_flags, pred_flags, fixture_flags;
  std::string dump_path;
  std::vector<std::string> ranges, fractions;
  std::string fixture_path;
  bool check = false;

  auto* run_cmd = app.add_subcommand("run", "replicated runs over generated instances");
  add_common(*run_cmd, run_flags, true);
  run_cmd->add_option("--experiment", run_flags.experiment, "hour | day | custom: preset before overrides");
  run_cmd->add_option("--dump-scenario", dump_path, "write the base-seed instance to this file");

  auto* cache_cmd = app.add_subcommand("sweep-cache-size", "hit ratio across cache size ranges");
  add_common(*cache_cmd, cache_flags, true);
  cache_cmd->add_option("--ranges", ranges, "LOW-HIGH (repeatable); default 5-15 ... 45-55");

  auto* pred_cmd = app.add_subcommand("sweep-predictable", "hit ratio across predictable fractions");
  add_common(*pred_cmd, pred_flags, true);
  pred_cmd->add_option("--fractions", fractions, "fraction in [0,1] (repeatable); default 0 ... 0.8");

  auto* fixture_cmd = app.add_subcommand("fixture", "replay a scenario file");
  add_common(*fixture_cmd, fixture_flags, false);
  fixture_cmd->add_option("file", fixture_path, "scenario file")->required();
  fixture_cmd->add_flag("--check-invariants", check, "verify capacities after every event");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run_cmd) return cmd_run(run_flags, dump_path);
    if (*cache_cmd) return cmd_sweep_cache_size(cache_flags, ranges);
    if (*pred_cmd) return cmd_sweep_predictable(pred_flags, fractions);
    if (*fixture_cmd) return cmd_fixture(fixture_flags, fixture_path, check);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ScenarioParseError& e) {
    std::cerr << "scenario error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitConfig;
}
