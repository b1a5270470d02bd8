#include <gtest/gtest.h>

#include "rulecache/core_model.hpp"

using namespace rulecache;

namespace {

std::vector<Switch> switches(std::initializer_list<std::uint32_t> caps) {
  std::vector<Switch> out;
  std::uint32_t j = 0;
  for (auto c : caps) out.push_back(Switch{SwitchId{j++}, c});
  return out;
}

}  // namespace

TEST(CacheAssignment, EmptyAssignmentCachesNothing) {
  CacheAssignment a(4, switches({2, 3}));
  for (std::uint32_t i = 0; i < 4; ++i)
    for (std::uint32_t j = 0; j < 2; ++j) EXPECT_FALSE(is_cached(a, FlowId{i}, SwitchId{j}));
  EXPECT_EQ(cached_count(a, SwitchId{0}), 0u);
  EXPECT_EQ(cached_count(a, SwitchId{1}), 0u);
}

TEST(CacheAssignment, InstallThenEvict) {
  CacheAssignment a(3, switches({2, 2, 2}));
  a.install(FlowId{1}, SwitchId{2}, 0.0);
  EXPECT_TRUE(is_cached(a, FlowId{1}, SwitchId{2}));
  EXPECT_FALSE(is_cached(a, FlowId{1}, SwitchId{1}));
  a.evict(FlowId{1}, SwitchId{2});
  EXPECT_FALSE(is_cached(a, FlowId{1}, SwitchId{2}));
}

TEST(CacheAssignment, FullSwitchRejectsInstall) {
  CacheAssignment a(3, switches({2}));
  a.install(FlowId{0}, SwitchId{0}, 0.0);
  a.install(FlowId{1}, SwitchId{0}, 0.0);
  EXPECT_EQ(cached_count(a, SwitchId{0}), 2u);
  EXPECT_THROW(a.install(FlowId{2}, SwitchId{0}, 1.0), CapacityError);
  EXPECT_EQ(cached_count(a, SwitchId{0}), 2u);
  EXPECT_FALSE(is_cached(a, FlowId{2}, SwitchId{0}));
}

TEST(CacheAssignment, RejectsUnknownIdsAndDoubleOperations) {
  CacheAssignment a(2, switches({1}));
  EXPECT_THROW((void)a.is_cached(FlowId{2}, SwitchId{0}), PreconditionError);
  EXPECT_THROW((void)a.is_cached(FlowId{0}, SwitchId{1}), PreconditionError);
  EXPECT_THROW((void)a.cached_count(SwitchId{5}), PreconditionError);
  EXPECT_THROW(a.evict(FlowId{0}, SwitchId{0}), PreconditionError);
  a.install(FlowId{0}, SwitchId{0}, 0.0);
  EXPECT_THROW(a.install(FlowId{0}, SwitchId{0}, 0.0), PreconditionError);
}

TEST(CacheAssignment, EvictKeepsSlotsConsistent) {
  CacheAssignment a(5, switches({5}));
  for (std::uint32_t i = 0; i < 5; ++i) a.install(FlowId{i}, SwitchId{0}, static_cast<double>(i));
  a.evict(FlowId{1}, SwitchId{0});
  a.evict(FlowId{4}, SwitchId{0});
  EXPECT_EQ(cached_count(a, SwitchId{0}), 3u);
  for (std::uint32_t i : {0u, 2u, 3u}) {
    ASSERT_TRUE(a.is_cached(FlowId{i}, SwitchId{0}));
    EXPECT_EQ(a.entry(FlowId{i}, SwitchId{0}).installed_at, static_cast<double>(i));
  }
  a.touch(FlowId{3}, SwitchId{0}, 9.0);
  EXPECT_EQ(a.entry(FlowId{3}, SwitchId{0}).last_access, 9.0);
}

TEST(CacheAssignment, MatrixViewMatchesMembership) {
  CacheAssignment a(3, switches({2, 2}));
  a.install(FlowId{2}, SwitchId{1}, 0.0);
  a.install(FlowId{0}, SwitchId{0}, 0.0);
  const auto x = a.matrix();
  ASSERT_EQ(x.size(), 6u);
  for (std::uint32_t i = 0; i < 3; ++i)
    for (std::uint32_t j = 0; j < 2; ++j) EXPECT_EQ(x[i * 2 + j], a.is_cached(FlowId{i}, SwitchId{j}));
}

TEST(Path, RejectsEmptyAndDuplicates) {
  EXPECT_THROW(Path(std::vector<SwitchId>{}), PreconditionError);
  EXPECT_THROW(Path({SwitchId{1}, SwitchId{2}, SwitchId{1}}), PreconditionError);
  Path p({SwitchId{1}, SwitchId{2}, SwitchId{5}});
  EXPECT_EQ(p.size(), 3u);
  EXPECT_TRUE(p.contains(SwitchId{5}));
  EXPECT_FALSE(p.contains(SwitchId{0}));
}

TEST(CacheAssignment, RejectsZeroCapacity) {
  EXPECT_THROW(CacheAssignment(1, switches({0})), PreconditionError);
}
