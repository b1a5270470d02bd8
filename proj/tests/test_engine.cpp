#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "rulecache/engine.hpp"

using namespace rulecache;

namespace {

ScenarioConfig small_config(std::uint64_t seed) {
  ScenarioConfig c;
  c.n_flows = 60;
  c.n_switches = 12;
  c.cache_size_range = {3, 8};
  c.path_len_range = {1, 6};
  c.sim_end = 600.0;
  c.seed = seed;
  return c;
}

RunOptions options(PolicyKind k, Duration sim_end) {
  RunOptions o;
  o.policy = k;
  o.sim_end = sim_end;
  return o;
}

constexpr PolicyKind kAll[] = {PolicyKind::Fifo, PolicyKind::Lru, PolicyKind::Fdrc};

}  // namespace

TEST(EventQueue, OrdersByTimeThenKindThenFlow) {
  EventQueue q;
  q.push({5.0, EventKind::PacketArrival, FlowId{1}});
  q.push({5.0, EventKind::PrefetchTick, FlowId{7}});
  q.push({5.0, EventKind::PacketArrival, FlowId{0}});
  q.push({1.0, EventKind::PacketArrival, FlowId{9}});
  EXPECT_EQ(q.pop(), (Event{1.0, EventKind::PacketArrival, FlowId{9}}));
  EXPECT_EQ(q.pop(), (Event{5.0, EventKind::PrefetchTick, FlowId{7}}));
  EXPECT_EQ(q.pop(), (Event{5.0, EventKind::PacketArrival, FlowId{0}}));
  EXPECT_EQ(q.pop(), (Event{5.0, EventKind::PacketArrival, FlowId{1}}));
  EXPECT_TRUE(q.empty());
}

TEST(Ratios, PerFlow) {
  MetricsLedger l(3, 10.0, 10.0);
  l.record_packet(FlowId{0}, 0.0, 0, 2);
  EXPECT_EQ(hit_ratio_flow(l, FlowId{0}), 0.0);
  l.record_packet(FlowId{1}, 0.0, 3, 3);
  EXPECT_EQ(hit_ratio_flow(l, FlowId{1}), 1.0);
  // Six packets over a three-switch path: 0+2+3+3+3+3 = 14 hits of 18.
  MetricsLedger m(1, 10.0, 10.0);
  for (std::uint64_t h : {0, 2, 3, 3, 3, 3}) m.record_packet(FlowId{0}, 1.0, h, 3);
  EXPECT_EQ(hit_ratio_flow(m, FlowId{0}), 14.0 / 18.0);
  EXPECT_EQ(hit_ratio_flow(m, FlowId{0}, RatioMode::PerPacket), 14.0 / 6.0);
  EXPECT_THROW(hit_ratio_flow(l, FlowId{2}), UndefinedRatioError);
}

TEST(Ratios, Total) {
  MetricsLedger single(1, 10.0, 10.0);
  single.record_packet(FlowId{0}, 0.0, 1, 3);
  EXPECT_EQ(hit_ratio_total(single), hit_ratio_flow(single, FlowId{0}));

  MetricsLedger two(2, 10.0, 10.0);
  two.record_packet(FlowId{0}, 0.0, 1, 2);
  two.record_packet(FlowId{1}, 0.0, 3, 4);
  EXPECT_EQ(hit_ratio_total(two), 4.0 / 6.0);

  MetricsLedger all(2, 10.0, 10.0);
  all.record_packet(FlowId{0}, 0.0, 2, 2);
  all.record_packet(FlowId{1}, 0.0, 5, 5);
  EXPECT_EQ(hit_ratio_total(all), 1.0);

  EXPECT_THROW(hit_ratio_total(MetricsLedger(2, 10.0, 10.0)), UndefinedRatioError);
}

TEST(Ledger, WindowsPartitionTime) {
  MetricsLedger l(1, 25.0, 10.0);
  ASSERT_EQ(l.windows().size(), 3u);
  l.record_packet(FlowId{0}, 0.0, 0, 1);
  l.record_packet(FlowId{0}, 9.99, 1, 1);
  l.record_packet(FlowId{0}, 10.0, 1, 1);
  l.record_packet(FlowId{0}, 24.0, 0, 1);
  EXPECT_EQ(l.windows()[0].opportunities, 2u);
  EXPECT_EQ(l.windows()[1].hits, 1u);
  EXPECT_EQ(l.windows()[2].start, 20.0);
  const auto cum = l.cumulative_series();
  EXPECT_EQ(cum[0], 0.5);
  EXPECT_EQ(cum[1], 2.0 / 3.0);
  EXPECT_EQ(cum[2], 0.5);
  EXPECT_THROW(MetricsLedger(1, 10.0, 0.0), ConfigError);
}

TEST(Run, EmptyScenarioHasNoOpportunities) {
  ScenarioConfig c;
  c.n_flows = 0;
  const auto sc = generate(c);
  for (auto k : kAll) {
    const auto l = run(sc, options(k, 100.0));
    EXPECT_EQ(l.total_opportunities(), 0u);
    EXPECT_TRUE(std::isnan(hit_ratio_or_nan(l)));
    EXPECT_TRUE(std::isnan(l.cumulative_series().back()));
  }
}

TEST(Run, UnboundedCapacityMissesOnlyFirstPackets) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto sc = oracle::with_unbounded_capacity(generate(small_config(seed)));
    std::uint64_t first_misses = 0;
    for (const auto& f : sc.flows)
      if (!arrivals(f.traffic, 0.0, 600.0).empty()) first_misses += f.path.size();
    const auto fifo = run(sc, options(PolicyKind::Fifo, 600.0));
    EXPECT_EQ(fifo.total_misses(), first_misses);
    EXPECT_EQ(run(sc, options(PolicyKind::Lru, 600.0)), fifo);
    EXPECT_EQ(run(sc, options(PolicyKind::Fdrc, 600.0)), fifo);
  }
}

TEST(Run, LruPathologyFixture) {
  const auto sc = oracle::lru_pathology_fixture();
  auto o = options(PolicyKind::Lru, oracle::kLruPathologyEnd);
  EXPECT_EQ(hit_ratio_total(run(sc, o)), 0.0);
  o.policy = PolicyKind::Fifo;
  EXPECT_EQ(hit_ratio_total(run(sc, o)), 0.0);
  o.policy = PolicyKind::Fdrc;
  EXPECT_EQ(hit_ratio_total(run(sc, o)), 2.0 / 6.0);
}

TEST(Run, ConservationAndPolicyIndependentOpportunities) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto sc = generate(small_config(seed));
    std::vector<MetricsLedger> ledgers;
    for (auto k : kAll) ledgers.push_back(run(sc, options(k, 600.0)));
    for (const auto& l : ledgers) {
      EXPECT_EQ(l.total_hits() + l.total_misses(), l.total_opportunities());
      for (std::size_t i = 0; i < sc.flows.size(); ++i) {
        const auto& f = l.flows()[i];
        EXPECT_LE(f.hits, f.opportunities);
        EXPECT_EQ(f.opportunities, f.packets * sc.flows[i].path.size());
        EXPECT_EQ(f.opportunities, ledgers[0].flows()[i].opportunities);
      }
    }
  }
}

TEST(Run, Deterministic) {
  const auto sc = generate(small_config(9));
  for (auto k : kAll) EXPECT_EQ(run(sc, options(k, 600.0)), run(sc, options(k, 600.0)));
}

TEST(Run, CapacityCheckedAfterEveryEvent) {
  const auto sc = generate(small_config(4));
  for (auto k : kAll) {
    auto o = options(k, 600.0);
    o.check_invariants = true;
    std::size_t events = 0;
    run(sc, o, [&](const Event&, const CacheAssignment& cache) {
      ++events;
      for (const auto& s : sc.switches) ASSERT_LE(cache.cached_count(s.id), s.capacity);
    });
    EXPECT_GT(events, 0u);
  }
}

TEST(Run, EventsArriveInOrder) {
  const auto sc = generate(small_config(5));
  auto o = options(PolicyKind::Fdrc, 600.0);
  o.fdrc.prefetch_mode = PrefetchMode::ActivePrefetch;
  Event last{-1.0, EventKind::PrefetchTick, FlowId{0}};
  std::size_t ticks = 0;
  run(sc, o, [&](const Event& e, const CacheAssignment&) {
    EXPECT_LT(last, e);
    if (e.kind == EventKind::PrefetchTick) {
      ++ticks;
      EXPECT_TRUE(sc.flows[e.flow.index].predictable());
    }
    last = e;
  });
  EXPECT_GT(ticks, 0u);
}

TEST(Run, CumulativeSeriesSettles) {
  ScenarioConfig c;
  c.n_flows = 200;
  c.n_switches = 30;
  c.sim_end = 3600.0;
  const auto sc = generate(c);
  for (auto k : kAll) {
    const auto series = run(sc, options(k, c.sim_end)).cumulative_series();
    const std::size_t q = series.size() / 4;
    auto variance = [&](std::size_t from, std::size_t to) {
      double mean = 0.0;
      for (std::size_t i = from; i < to; ++i) mean += series[i];
      mean /= static_cast<double>(to - from);
      double v = 0.0;
      for (std::size_t i = from; i < to; ++i) v += (series[i] - mean) * (series[i] - mean);
      return v / static_cast<double>(to - from);
    };
    for (double x : series) {
      EXPECT_GE(x, 0.0);
      EXPECT_LE(x, 1.0);
    }
    EXPECT_LT(variance(series.size() - q, series.size()), variance(0, q)) << to_string(k);
  }
}

TEST(Replicate, SingleRunHasZeroSpread) {
  auto c = small_config(3);
  ReplicateOptions o;
  o.run.sim_end = c.sim_end;
  const auto res = replicate(c, {PolicyKind::Fdrc}, 1, o);
  ASSERT_EQ(res.size(), 1u);
  EXPECT_EQ(res[0].total.sd, 0.0);
  EXPECT_EQ(res[0].total.mean, hit_ratio_total(run(generate(c), options(PolicyKind::Fdrc, c.sim_end))));
}

TEST(Replicate, SeedsAreConsecutiveAndResultsRepeat) {
  auto c = small_config(100);
  ReplicateOptions o;
  o.run.sim_end = c.sim_end;
  o.threads = 1;
  const auto a = replicate(c, {PolicyKind::Fifo, PolicyKind::Fdrc}, 4, o);
  o.threads = 3;
  const auto b = replicate(c, {PolicyKind::Fifo, PolicyKind::Fdrc}, 4, o);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[0].seeds, (std::vector<std::uint64_t>{100, 101, 102, 103}));
  for (std::size_t p = 0; p < a.size(); ++p) {
    EXPECT_EQ(a[p].ledgers, b[p].ledgers);
    EXPECT_EQ(a[p].total, b[p].total);
  }
  EXPECT_THROW(replicate(c, {PolicyKind::Fifo}, 0, o), ConfigError);
}

TEST(Csv, TimeseriesSchema) {
  auto c = small_config(1);
  c.sim_end = 30.0;
  ReplicateOptions o;
  o.run.sim_end = c.sim_end;
  const auto res = replicate(c, {PolicyKind::Lru}, 2, o);
  std::ostringstream os;
  write_timeseries_csv(os, res[0]);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "run_seed,policy,window_start_s,window_hits,window_opportunities,cumulative_ratio");
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5);
  }
  EXPECT_EQ(rows, 2u * 3u);
}

TEST(Summarize, MeanAndSampleDeviation) {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(5.0 / 3.0));
}
