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

#include "ctcguide/rnnt.h"

#include <random>

#include "ctcguide/error.h"
#include "ctcguide/oracle.h"
#include "gtest/gtest.h"

namespace ctcguide {
namespace {

// Records the largest block ever requested.
class CountingSupplier : public JointSupplier {
 public:
  explicit CountingSupplier(const JointGrid &grid) : inner_(grid) {}
  int32_t NumFrames() const override { return inner_.NumFrames(); }
  int32_t NumLabels() const override { return inner_.NumLabels(); }
  int32_t NumSymbols() const override { return inner_.NumSymbols(); }
  void ComputeBlock(int32_t t_begin, int32_t t_end, int32_t u_begin,
                    int32_t u_end, std::span<double> out) const override {
    max_block_ = std::max<size_t>(max_block_, out.size());
    inner_.ComputeBlock(t_begin, t_end, u_begin, u_end, out);
  }
  size_t max_block() const { return max_block_; }

 private:
  GridJointSupplier inner_;
  mutable size_t max_block_ = 0;
};

double MaxAbsDiff(const LatticeGradient &a, const LatticeGradient &b) {
  double d = (a.blank - b.blank).cwiseAbs().maxCoeff();
  if (a.emit.size() > 0)
    d = std::max(d, (a.emit - b.emit).cwiseAbs().maxCoeff());
  return d;
}

TEST(RnntLossTest, SingleFrameSingleLabel) {
  std::mt19937_64 rng(1);
  JointGrid grid = oracle::RandomJointGrid(1, 1, 2, &rng);
  LabelSequence labels = {2};
  EXPECT_NEAR(RnntLoss(grid, labels).loss,
              -(grid(0, 0, 2) + grid(0, 1, kBlankId)), 1e-12);
}

TEST(RnntLossTest, EmptyLabelsIsAllBlank) {
  std::mt19937_64 rng(2);
  JointGrid grid = oracle::RandomJointGrid(2, 0, 3, &rng);
  EXPECT_NEAR(RnntLoss(grid, {}).loss,
              -(grid(0, 0, kBlankId) + grid(1, 0, kBlankId)), 1e-12);
}

TEST(RnntLossTest, TwoFramesOneLabelClosedForm) {
  std::mt19937_64 rng(3);
  JointGrid grid = oracle::RandomJointGrid(2, 1, 3, &rng);
  LabelSequence labels = {3};
  auto c = [&](int t, int u) { return grid(t, u, labels[u]); };
  auto phi = [&](int t, int u) { return grid(t, u, kBlankId); };
  double expected = -std::log(std::exp(c(0, 0) + phi(0, 1) + phi(1, 1)) +
                              std::exp(phi(0, 0) + c(1, 0) + phi(1, 1)));
  EXPECT_NEAR(RnntLoss(grid, labels).loss, expected, 1e-12);
}

TEST(RnntLossTest, PropertyMatchesPathEnumeration) {
  std::mt19937_64 rng(4);
  for (int32_t t = 1; t <= 5; ++t) {
    for (int32_t u = 0; u <= 3; ++u) {
      for (int seed = 0; seed < 5; ++seed) {
        const int32_t vocab = 1 + seed % 3;
        JointGrid grid = oracle::RandomJointGrid(t, u, vocab, &rng);
        LabelSequence labels = oracle::RandomLabels(u, vocab, &rng);
        auto paths = EnumerateRnntPaths(t, u);
        std::vector<double> lps;
        for (const auto &p : paths)
          lps.push_back(RnntPathLogProb(grid, p, labels));
        double loss = RnntLoss(grid, labels).loss;
        EXPECT_NEAR(std::exp(-loss), std::exp(LogSumExp(lps)), 1e-9);
        EXPECT_NEAR(loss, -oracle::RnntLogLikeByEnumeration(grid, labels),
                    1e-9);
      }
    }
  }
}

TEST(RnntLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (auto [t, u] : std::vector<std::pair<int, int>>{{1, 0}, {3, 2}, {4, 3}}) {
    JointGrid grid = oracle::RandomJointGrid(t, u, 3, &rng);
    LabelSequence labels = oracle::RandomLabels(u, 3, &rng);
    JointGrid analytic = RnntLoss(grid, labels).grad.ToDense(labels, 4);
    auto f = [&](std::span<const double> p) {
      JointGrid g(t, u, 4);
      std::copy(p.begin(), p.end(), g.Data().begin());
      return RnntLoss(g, labels).loss;
    };
    auto numeric = FiniteDifferenceGradient(f, grid.Data(), 1e-6);
    EXPECT_LE(RelativeError(analytic.Data(), numeric), 1e-6);
  }
}

TEST(RnntLossTest, GradientOnlyOnBlankAndNextLabel) {
  std::mt19937_64 rng(6);
  JointGrid grid = oracle::RandomJointGrid(4, 2, 4, &rng);
  LabelSequence labels = {3, 1};
  JointGrid dense = RnntLoss(grid, labels).grad.ToDense(labels, 5);
  for (int32_t t = 0; t < 4; ++t)
    for (int32_t u = 0; u <= 2; ++u)
      for (int32_t k = 0; k < 5; ++k) {
        bool allowed = k == kBlankId || (u < 2 && k == labels[u]);
        if (!allowed) {
          EXPECT_EQ(dense(t, u, k), 0.0);
        }
      }
}

TEST(RnntLossTest, RaisingFinalBlankLowersLoss) {
  // Unnormalized fibers: bump only phi(T-1, U).
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    JointGrid grid = oracle::RandomJointGrid(4, 2, 3, &rng);
    LabelSequence labels = oracle::RandomLabels(2, 3, &rng);
    double before = RnntLoss(grid, labels).loss;
    grid(3, 2, kBlankId) += 0.25;
    EXPECT_LT(RnntLoss(grid, labels).loss, before);
  }
}

TEST(RnntLossTest, ZeroFramesIsInfeasible) {
  JointGrid grid(0, 1, 3);
  EXPECT_THROW(RnntLoss(grid, {1}), InfeasibleAlignment);
}

TEST(RnntLossTest, LabelCountMustMatchGrid) {
  std::mt19937_64 rng(8);
  JointGrid grid = oracle::RandomJointGrid(2, 2, 3, &rng);
  EXPECT_THROW(RnntLoss(grid, {1}), ShapeError);
}

TEST(RnntStripwiseTest, EqualsWholeLatticeForEveryWidth) {
  std::mt19937_64 rng(9);
  for (auto [t, u] :
       std::vector<std::pair<int, int>>{{1, 0}, {5, 2}, {7, 3}, {16, 4}}) {
    JointGrid grid = oracle::RandomJointGrid(t, u, 5, &rng);
    LabelSequence labels = oracle::RandomLabels(u, 5, &rng);
    auto whole = RnntLoss(grid, labels);
    GridJointSupplier supplier(grid);
    for (int32_t width = 1; width <= t + 2; ++width) {
      auto strip = RnntLossStripwise(supplier, labels, width);
      EXPECT_NEAR(strip.loss, whole.loss, 1e-12) << "width " << width;
      EXPECT_LE(MaxAbsDiff(strip.grad, whole.grad), 1e-12) << "width " << width;
    }
  }
}

TEST(RnntStripwiseTest, ResidentBlockIsOneStrip) {
  std::mt19937_64 rng(10);
  JointGrid grid = oracle::RandomJointGrid(16, 4, 5, &rng);
  LabelSequence labels = oracle::RandomLabels(4, 5, &rng);
  CountingSupplier supplier(grid);
  auto result = RnntLossStripwise(supplier, labels, 8);
  EXPECT_NEAR(result.loss, RnntLoss(grid, labels).loss, 1e-12);
  EXPECT_EQ(supplier.max_block(), static_cast<size_t>(8 * 5 * 6));
}

TEST(RnntStripwiseTest, RejectsZeroWidth) {
  std::mt19937_64 rng(11);
  JointGrid grid = oracle::RandomJointGrid(2, 1, 2, &rng);
  GridJointSupplier supplier(grid);
  EXPECT_THROW(RnntLossStripwise(supplier, {1}, 0), ConfigError);
}

TEST(RnntPathTest, SimplePaths) {
  std::mt19937_64 rng(12);
  JointGrid g1 = oracle::RandomJointGrid(1, 0, 2, &rng);
  EXPECT_EQ(RnntPathLogProb(g1, {RnntMove::kBlank}, {}), g1(0, 0, kBlankId));
  JointGrid g2 = oracle::RandomJointGrid(1, 1, 2, &rng);
  EXPECT_EQ(RnntPathLogProb(g2, {RnntMove::kEmit, RnntMove::kBlank}, {2}),
            g2(0, 0, 2) + g2(0, 1, kBlankId));
}

TEST(RnntPathTest, UniformGridGivesConstantPathProbability) {
  JointGrid grid(3, 2, 5, std::log(0.2));
  for (const auto &path : EnumerateRnntPaths(3, 2))
    EXPECT_NEAR(RnntPathLogProb(grid, path, {1, 4}), 5 * std::log(0.2), 1e-12);
}

TEST(RnntPathTest, InvalidShapesThrow) {
  JointGrid grid(2, 1, 3, std::log(1.0 / 3));
  EXPECT_THROW(RnntPathLogProb(grid, {RnntMove::kBlank, RnntMove::kBlank}, {1}),
               Error);
  EXPECT_THROW(RnntPathLogProb(grid,
                               {RnntMove::kBlank, RnntMove::kBlank,
                                RnntMove::kEmit},
                               {1}),
               Error);
}

TEST(RnntEnumerateTest, CountsAreBinomial) {
  EXPECT_EQ(EnumerateRnntPaths(1, 0).size(), 1u);
  EXPECT_EQ(EnumerateRnntPaths(2, 1).size(), 2u);
  EXPECT_EQ(EnumerateRnntPaths(4, 2).size(), 10u);
  for (int32_t t = 1; t <= 6; ++t)
    for (int32_t u = 0; u <= 4; ++u)
      EXPECT_EQ(static_cast<double>(EnumerateRnntPaths(t, u).size()),
                BinomialCoefficient(t + u - 1, u));
}

TEST(RnntEnumerateTest, PathsAreValidAndDistinct) {
  auto paths = EnumerateRnntPaths(4, 3);
  std::sort(paths.begin(), paths.end());
  EXPECT_EQ(std::unique(paths.begin(), paths.end()), paths.end());
  for (const auto &p : paths) {
    EXPECT_EQ(std::count(p.begin(), p.end(), RnntMove::kBlank), 4);
    EXPECT_EQ(p.back(), RnntMove::kBlank);
  }
}

TEST(RnntEnumerateTest, GuardRejectsHugeLattices) {
  EXPECT_THROW(EnumerateRnntPaths(40, 20), Error);
}

}  // namespace
}  // namespace ctcguide
