#include <gtest/gtest.h>

#include <random>

#include "streamcnn/timing.hpp"
#include "test_support.hpp"

namespace streamcnn::timing {
namespace {

TEST(Timing, EffectiveReuseTiesGoToTheLargerDivisor) {
  EXPECT_EQ(effective_reuse(432, 1), 1);
  EXPECT_EQ(effective_reuse(432, 4), 4);
  EXPECT_EQ(effective_reuse(432, 5), 6);
  EXPECT_EQ(effective_reuse(432, 7), 8);
  EXPECT_EQ(effective_reuse(12, 5), 6);
  EXPECT_EQ(effective_reuse(12, 100), 12);
  EXPECT_EQ(effective_reuse(13, 5), 1);
  EXPECT_EQ(effective_reuse(13, 8), 13);
  EXPECT_EQ(effective_reuse(0, 4), 1);
}

TEST(Timing, EffectiveReuseIsTheNearestDivisor) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t slots = rng() % 3000 + 1;
    const int requested = static_cast<int>(rng() % 200) + 1;
    const int r = effective_reuse(slots, requested);
    ASSERT_EQ(slots % static_cast<std::size_t>(r), 0u);
    const long dist = std::labs(static_cast<long>(r) - requested);
    for (std::size_t d = 1; d <= slots; ++d) {
      if (slots % d) continue;
      const long dd = std::labs(static_cast<long>(d) - requested);
      ASSERT_TRUE(dd > dist || (dd == dist && static_cast<int>(d) <= r)) << slots << " " << requested;
    }
  }
}

TEST(Timing, SlotsAndItemCounts) {
  const auto& g = testing::svhn_baseline();
  EXPECT_EQ(multiplier_slots(*g.find("conv0"), {32, 32, 3}), 432u);
  const auto items = input_item_counts(g);
  EXPECT_EQ(items.front(), 1024u);
  EXPECT_EQ(items.back(), 1u);
}

TEST(Timing, SvhnScheduleAtUnitReuse) {
  const auto s = schedule(testing::svhn_baseline());
  EXPECT_EQ(s.ii, 1029u);
  EXPECT_EQ(s.latency, 1035u);
  EXPECT_DOUBLE_EQ(cycles_to_us(s.latency, 200.0), 5.175);
}

TEST(Timing, LatencyIsAffineInReuse) {
  for (int r : {1, 2, 3, 4, 6}) {
    ModelGraph g = testing::svhn_baseline();
    for (auto& l : g.layers) l.reuse_factor = r;
    const auto s = schedule(g);
    EXPECT_EQ(s.latency, 1024u * static_cast<std::size_t>(r) + 11) << r;
  }
}

TEST(Timing, PipelineDepthAndDrainAreParameters) {
  CycleParams p;
  p.pipeline_depth = 9;
  p.drain_cycles = 3;
  const auto s = schedule(testing::svhn_baseline(), p);
  EXPECT_EQ(s.ii, 1024u + 9);
  EXPECT_EQ(s.latency, 1024u + 9 + 6 * 3);
}

}  // namespace
}  // namespace streamcnn::timing
