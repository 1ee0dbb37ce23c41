// Copyright 2026 The ctcguide Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctcguide/pruning.h"

#include <random>

#include "ctcguide/error.h"
#include "ctcguide/oracle.h"
#include "gtest/gtest.h"

namespace ctcguide {
namespace {

// A random monotone trace u_0..u_{T-1} ending at U with unit steps.
std::vector<int32_t> RandomTrace(int32_t num_frames, int32_t num_labels,
                                 std::mt19937_64 *rng) {
  std::vector<int32_t> steps(num_frames, 0);
  for (int32_t i = 0; i < num_labels; ++i) steps[i] = 1;
  std::shuffle(steps.begin(), steps.end(), *rng);
  std::vector<int32_t> trace(num_frames);
  int32_t u = 0;
  for (int32_t t = 0; t < num_frames; ++t) trace[t] = (u += steps[t]);
  return trace;
}

TEST(ConfidenceRegionTest, UnboundedHeightCoversEverything) {
  std::vector<int32_t> trace = {0, 1, 1, 2, 3, 3, 3};
  auto region = BuildConfidenceRegions(trace, 3, std::nullopt, 3);
  ASSERT_EQ(region.strips.size(), 3u);
  for (const auto &s : region.strips) {
    EXPECT_EQ(s.u_lo, 0);
    EXPECT_EQ(s.u_hi, 3);
  }
  EXPECT_EQ(region.strips.back().t_begin, 6);
  EXPECT_EQ(region.strips.back().t_end, 7);
  EXPECT_EQ(PrunedCellCount(region), 7 * 4);
}

TEST(ConfidenceRegionTest, OverlapRepairOnDiagonalTrace) {
  std::vector<int32_t> trace = {0, 0, 1, 1, 2, 2};
  auto region = BuildConfidenceRegions(trace, 2, 1, 2);
  std::vector<RegionStrip> expected = {
      {0, 2, 0, 0}, {2, 4, 0, 1}, {4, 6, 1, 2}};
  EXPECT_EQ(region.strips, expected);
  EXPECT_TRUE(RegionAdmitsPath(region));
  EXPECT_EQ(PrunedCellCount(region), 10);
}

TEST(ConfidenceRegionTest, SingleTallStripClampsToFullRange) {
  std::vector<int32_t> trace = {0, 1, 2, 2};
  auto region = BuildConfidenceRegions(trace, 8, 5, 2);
  ASSERT_EQ(region.strips.size(), 1u);
  EXPECT_EQ(region.strips[0].u_lo, 0);
  EXPECT_EQ(region.strips[0].u_hi, 2);
}

TEST(ConfidenceRegionTest, HeightOneWithoutRepairIsOneCellPerFrame) {
  std::vector<int32_t> trace = {0, 0, 0, 0};
  auto region = BuildConfidenceRegions(trace, 1, 1, 0);
  EXPECT_EQ(PrunedCellCount(region), 4);
}

TEST(ConfidenceRegionTest, CentroidRoundsHalfUp) {
  // Mean 0.5 rounds to 1; mean 1.5 rounds to 2.
  std::vector<int32_t> trace = {0, 1, 1, 2};
  auto region = BuildConfidenceRegions(trace, 2, 1, 4);
  EXPECT_EQ(region.strips[0].u_hi, 1);
  EXPECT_EQ(region.strips[1].u_lo, 1);
  // The last strip is extended up to U=4.
  EXPECT_EQ(region.strips[1].u_hi, 4);
}

TEST(ConfidenceRegionTest, EvenHeightSplitsFloorBelowCeilAbove) {
  std::vector<int32_t> trace(4, 5);
  auto region = BuildConfidenceRegions(trace, 4, 4, 10);
  // centroid 5, band [5-1, 5+2], then extended to 0 and 10 as the only strip.
  EXPECT_EQ(region.strips[0].u_lo, 0);
  EXPECT_EQ(region.strips[0].u_hi, 10);
  std::vector<int32_t> trace2 = {0, 0, 5, 5, 5, 5, 10, 10};
  auto region2 = BuildConfidenceRegions(trace2, 2, 4, 10);
  EXPECT_EQ(region2.strips[1].u_lo, 2);  // lowered to overlap strip 0 ([0,2])
  EXPECT_EQ(region2.strips[1].u_hi, 7);
  EXPECT_EQ(region2.strips[2].u_lo, 4);
}

TEST(ConfidenceRegionTest, RejectsBadConfig) {
  std::vector<int32_t> trace = {0, 1};
  EXPECT_THROW(BuildConfidenceRegions(trace, 0, 3, 1), ConfigError);
  EXPECT_THROW(BuildConfidenceRegions(trace, 2, 0, 1), ConfigError);
}

bool IsSubRegion(const ConfidenceRegion &inner, const ConfidenceRegion &outer) {
  for (int32_t t = 0; t < inner.num_frames; ++t) {
    const RegionStrip &a = inner.StripOf(t), &b = outer.StripOf(t);
    if (a.u_lo < b.u_lo || a.u_hi > b.u_hi) return false;
  }
  return true;
}

TEST(ConfidenceRegionTest, PropertyRegionsAlwaysFeasibleAndMonotone) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const int32_t num_frames = 1 + trial % 40;
    const int32_t num_labels = std::min<int32_t>(num_frames, trial % 13);
    auto trace = RandomTrace(num_frames, num_labels, &rng);
    const int32_t width = 1 + trial % 9;
    for (int32_t h = 1; h <= num_labels + 2; ++h) {
      auto region = BuildConfidenceRegions(trace, width, h, num_labels);
      EXPECT_TRUE(RegionAdmitsPath(region)) << "trial " << trial;
      for (size_t i = 1; i < region.strips.size(); ++i) {
        EXPECT_LE(region.strips[i - 1].u_lo, region.strips[i].u_lo);
        EXPECT_LE(region.strips[i - 1].u_hi, region.strips[i].u_hi);
        EXPECT_LE(region.strips[i].u_lo, region.strips[i - 1].u_hi);
      }
      EXPECT_LE(PrunedCellCount(region),
                static_cast<int64_t>(num_frames) * (num_labels + 1));
    }
  }
}

TEST(PrunedLossTest, UnboundedHeightEqualsFullLoss) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int32_t t = 1 + trial % 9, u = trial % 5;
    JointGrid grid = oracle::RandomJointGrid(t, u, 4, &rng);
    LabelSequence labels = oracle::RandomLabels(u, 4, &rng);
    auto region = BuildConfidenceRegions(
        std::vector<int32_t>(t, 0), 1 + trial % 4, std::nullopt, u);
    GridJointSupplier supplier(grid);
    auto pruned = PrunedRnntLoss(supplier, labels, region);
    auto full = RnntLoss(grid, labels);
    EXPECT_NEAR(pruned.loss, full.loss, 1e-12);
    EXPECT_LE((pruned.grad.blank - full.grad.blank).cwiseAbs().maxCoeff(),
              1e-12);
    if (u > 0) {
      EXPECT_LE((pruned.grad.emit - full.grad.emit).cwiseAbs().maxCoeff(),
                1e-12);
    }
    EXPECT_EQ(pruned.cells_evaluated, static_cast<int64_t>(t) * (u + 1));
  }
}

TEST(PrunedLossTest, HandBuiltRegionKeepsSinglePath) {
  std::mt19937_64 rng(42);
  JointGrid grid = oracle::RandomJointGrid(2, 1, 3, &rng);
  LabelSequence labels = {2};
  ConfidenceRegion region;
  region.strip_width = 1;
  region.height = 2;
  region.num_frames = 2;
  region.num_labels = 1;
  region.strips = {{0, 1, 0, 1}, {1, 2, 1, 1}};
  GridJointSupplier supplier(grid);
  auto result = PrunedRnntLoss(supplier, labels, region);
  EXPECT_NEAR(result.loss,
              -(grid(0, 0, 2) + grid(0, 1, kBlankId) + grid(1, 1, kBlankId)),
              1e-12);
  EXPECT_EQ(result.cells_evaluated, 3);
}

TEST(PrunedLossTest, MatchesFilteredEnumeration) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    JointGrid grid = oracle::RandomJointGrid(6, 3, 3, &rng);
    LabelSequence labels = oracle::RandomLabels(3, 3, &rng);
    auto trace = RandomTrace(6, 3, &rng);
    auto region = BuildConfidenceRegions(trace, 2, 3, 3);
    GridJointSupplier supplier(grid);
    auto result = PrunedRnntLoss(supplier, labels, region);
    EXPECT_NEAR(result.loss,
                -oracle::PrunedRnntLogLikeByEnumeration(grid, labels, region),
                1e-9);
    EXPECT_GE(result.loss, RnntLoss(grid, labels).loss - 1e-12);
    EXPECT_EQ(result.cells_evaluated, PrunedCellCount(region));
  }
}

TEST(PrunedLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(44);
  JointGrid grid = oracle::RandomJointGrid(7, 3, 3, &rng);
  LabelSequence labels = oracle::RandomLabels(3, 3, &rng);
  auto region = BuildConfidenceRegions(RandomTrace(7, 3, &rng), 2, 2, 3);
  GridJointSupplier supplier(grid);
  JointGrid analytic =
      PrunedRnntLoss(supplier, labels, region).grad.ToDense(labels, 4);
  auto f = [&](std::span<const double> p) {
    JointGrid g(7, 3, 4);
    std::copy(p.begin(), p.end(), g.Data().begin());
    GridJointSupplier s(g);
    return PrunedRnntLoss(s, labels, region).loss;
  };
  auto numeric = FiniteDifferenceGradient(f, grid.Data(), 1e-6);
  EXPECT_LE(RelativeError(analytic.Data(), numeric), 1e-6);
}

// The overlap repair lowers a band to the previous band's top, which rises
// with the height, so regions of different heights are not always nested.
// Where they are, the larger one must not lose probability mass.
TEST(PrunedLossTest, LossNonIncreasingOverNestedRegions) {
  std::mt19937_64 rng(45);
  int nested_pairs = 0;
  for (int trial = 0; trial < 20; ++trial) {
    JointGrid grid = oracle::RandomJointGrid(20, 6, 5, &rng);
    LabelSequence labels = oracle::RandomLabels(6, 5, &rng);
    auto trace = RandomTrace(20, 6, &rng);
    GridJointSupplier supplier(grid);
    const double full = RnntLoss(grid, labels).loss;
    std::vector<ConfidenceRegion> regions;
    std::vector<double> losses;
    for (int32_t h = 1; h <= 8; ++h) {
      regions.push_back(BuildConfidenceRegions(trace, 4, h, 6));
      losses.push_back(PrunedRnntLoss(supplier, labels, regions.back()).loss);
      EXPECT_GE(losses.back(), full - 1e-12);
    }
    for (size_t i = 0; i < regions.size(); ++i)
      for (size_t j = i + 1; j < regions.size(); ++j)
        if (IsSubRegion(regions[i], regions[j])) {
          ++nested_pairs;
          EXPECT_GE(losses[i], losses[j] - 1e-12);
        }
  }
  EXPECT_GT(nested_pairs, 100);
}

TEST(PrunedLossTest, EmptyRegionThrows) {
  std::mt19937_64 rng(46);
  JointGrid grid = oracle::RandomJointGrid(2, 2, 3, &rng);
  ConfidenceRegion region;
  region.strip_width = 1;
  region.num_frames = 2;
  region.num_labels = 2;
  region.strips = {{0, 1, 0, 0}, {1, 2, 2, 2}};
  GridJointSupplier supplier(grid);
  try {
    PrunedRnntLoss(supplier, {1, 2}, region);
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_STREQ(e.what(), "empty confidence region");
  }
}

}  // namespace
}  // namespace ctcguide
