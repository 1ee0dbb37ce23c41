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

#include "ctcguide/ctc.h"

#include <random>

#include "ctcguide/error.h"
#include "ctcguide/oracle.h"
#include "gtest/gtest.h"

namespace ctcguide {
namespace {

// Builds a normalized grid whose frame t puts `mass` on symbols[t] and
// spreads the rest evenly.
PosteriorGrid PeakedGrid(const std::vector<int32_t> &symbols,
                         int32_t vocab_size, double mass) {
  const int32_t k = vocab_size + 1;
  PosteriorGrid grid{Matrix::Constant(static_cast<Eigen::Index>(symbols.size()),
                                      k, std::log((1.0 - mass) / (k - 1)))};
  for (size_t t = 0; t < symbols.size(); ++t)
    grid.log_post(static_cast<Eigen::Index>(t), symbols[t]) = std::log(mass);
  return grid;
}

TEST(CtcLossTest, SingleFrameSingleLabel) {
  PosteriorGrid grid{Matrix(1, 2)};
  grid.log_post << std::log(0.4), std::log(0.6);
  auto result = CtcLoss(grid, {1});
  EXPECT_NEAR(result.loss, 0.5108256237659907, 1e-12);
  EXPECT_NEAR(result.grad(0, 1), -1.0, 1e-12);
  EXPECT_EQ(result.grad(0, 0), 0.0);
}

TEST(CtcLossTest, EmptyLabelsIsAllBlankPath) {
  std::mt19937_64 rng(5);
  PosteriorGrid grid = oracle::RandomPosteriorGrid(2, 3, &rng);
  auto result = CtcLoss(grid, {});
  EXPECT_NEAR(result.loss, -(grid.log_post(0, 0) + grid.log_post(1, 0)),
              1e-12);
}

TEST(CtcLossTest, MatchesEnumerationOnFourFrames) {
  std::mt19937_64 rng(2024);
  PosteriorGrid grid = oracle::RandomPosteriorGrid(4, 3, &rng);
  LabelSequence labels = {2, 3};
  auto brute = oracle::EnumerateCtc(grid, labels);
  EXPECT_NEAR(CtcLoss(grid, labels).loss, -brute.log_like, 1e-10);
}

TEST(CtcLossTest, FrozenValueOnHandWrittenGrid) {
  // Expected value from oracle::EnumerateCtc on the same grid.
  PosteriorGrid grid{Matrix(3, 3)};
  grid.log_post << 0.5, 0.3, 0.2,  //
      0.2, 0.6, 0.2,               //
      0.7, 0.1, 0.2;
  grid.log_post = grid.log_post.array().log().matrix();
  // Paths collapsing to [1]: 1__, _1_, __1, 11_, _11, 111 with _ = blank.
  // 0.3*.2*.7 + .5*.6*.7 + .5*.2*.1 + .3*.6*.7 + .5*.6*.1 + .3*.6*.1
  const double expected = -std::log(0.042 + 0.21 + 0.01 + 0.126 + 0.03 + 0.018);
  EXPECT_NEAR(CtcLoss(grid, {1}).loss, expected, 1e-12);
  EXPECT_NEAR(-oracle::EnumerateCtc(grid, {1}).log_like, expected, 1e-12);
}

TEST(CtcLossTest, InfeasibleThrows) {
  std::mt19937_64 rng(1);
  PosteriorGrid grid = oracle::RandomPosteriorGrid(2, 3, &rng);
  EXPECT_THROW(CtcLoss(grid, {1, 1}), InfeasibleAlignment);
  EXPECT_THROW(CtcLoss(grid, {1, 2, 3}), InfeasibleAlignment);
  EXPECT_NO_THROW(CtcLoss(grid, {1, 2}));
  EXPECT_EQ(CtcMinFrames({1, 1, 2, 2}), 6);
}

TEST(CtcLossTest, RejectsOutOfVocabularyLabels) {
  std::mt19937_64 rng(1);
  PosteriorGrid grid = oracle::RandomPosteriorGrid(4, 2, &rng);
  EXPECT_THROW(CtcLoss(grid, {3}), Error);
  EXPECT_THROW(CtcLoss(grid, {0}), Error);
}

TEST(CtcLossTest, PropertyProbabilityMatchesEnumeration) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 150; ++trial) {
    const int32_t num_frames = 1 + trial % 6;
    const int32_t vocab = 1 + (trial / 6) % 3;
    const int32_t num_labels = (trial / 18) % 4;
    LabelSequence labels = oracle::RandomLabels(num_labels, vocab, &rng);
    if (CtcMinFrames(labels) > num_frames) continue;
    PosteriorGrid grid = oracle::RandomPosteriorGrid(num_frames, vocab, &rng);
    double loss = CtcLoss(grid, labels).loss;
    EXPECT_GE(loss, 0.0);
    EXPECT_LE(std::exp(-loss), 1.0 + 1e-12);
    EXPECT_NEAR(loss, -oracle::EnumerateCtc(grid, labels).log_like, 1e-9);
  }
}

TEST(CtcLossTest, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(17);
  for (const auto &[frames, labels] :
       std::vector<std::pair<int32_t, LabelSequence>>{
           {3, {1}}, {3, {2, 3}}, {6, {1, 1, 2}}, {5, {}}}) {
    PosteriorGrid grid = oracle::RandomPosteriorGrid(frames, 3, &rng);
    auto analytic = CtcLoss(grid, labels).grad;
    auto f = [&](std::span<const double> p) {
      PosteriorGrid g{Eigen::Map<const Matrix>(p.data(), grid.NumFrames(),
                                               grid.NumSymbols())};
      return CtcLoss(g, labels).loss;
    };
    auto numeric = FiniteDifferenceGradient(f, AsSpan(grid.log_post), 1e-6);
    EXPECT_LE(RelativeError(AsSpan(analytic), numeric), 1e-6);
  }
}

TEST(CtcAlignmentTest, SingleFrameIsForced) {
  std::mt19937_64 rng(3);
  PosteriorGrid grid = oracle::RandomPosteriorGrid(1, 2, &rng);
  CtcAlignment align = CtcForcedAlignment(grid, {1});
  EXPECT_EQ(align.symbols, std::vector<int32_t>({1}));
  EXPECT_EQ(align.trace, std::vector<int32_t>({1}));
}

TEST(CtcAlignmentTest, PeakedPosteriorsForceThePath) {
  PosteriorGrid grid = PeakedGrid({0, 1, 0}, 1, 0.9);
  CtcAlignment align = CtcForcedAlignment(grid, {1});
  EXPECT_EQ(align.symbols, std::vector<int32_t>({0, 1, 0}));
  EXPECT_EQ(align.trace, std::vector<int32_t>({0, 1, 1}));
}

TEST(CtcAlignmentTest, MatchesEnumerationArgmax) {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 20; ++trial) {
    PosteriorGrid grid = oracle::RandomPosteriorGrid(5, 3, &rng);
    LabelSequence labels = oracle::RandomLabels(2, 3, &rng);
    CtcAlignment align = CtcForcedAlignment(grid, labels);
    auto brute = oracle::EnumerateCtc(grid, labels);
    EXPECT_EQ(align.symbols, brute.best_path);
    EXPECT_NEAR(CtcPathLogProb(grid, align.symbols), brute.best_log_prob,
                1e-12);
  }
}

TEST(CtcAlignmentTest, PropertyTraceAndCollapse) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const int32_t num_frames = 1 + trial % 12;
    LabelSequence labels = oracle::RandomLabels(trial % 5, 4, &rng);
    if (CtcMinFrames(labels) > num_frames) continue;
    PosteriorGrid grid = oracle::RandomPosteriorGrid(num_frames, 4, &rng);
    CtcAlignment align = CtcForcedAlignment(grid, labels);
    EXPECT_EQ(CollapseCtcPath(align.symbols), labels);
    ASSERT_EQ(align.trace.size(), static_cast<size_t>(num_frames));
    EXPECT_LE(align.trace.front(), 1);
    EXPECT_EQ(align.trace.back(), static_cast<int32_t>(labels.size()));
    for (int32_t t = 1; t < num_frames; ++t) {
      int32_t step = align.trace[t] - align.trace[t - 1];
      EXPECT_TRUE(step == 0 || step == 1);
    }
    EXPECT_LE(CtcPathLogProb(grid, align.symbols),
              -CtcLoss(grid, labels).loss + 1e-12);
  }
}

TEST(CtcAlignmentTest, TiesPreferStayingInBlank) {
  // Uniform grid: every admissible path ties; the backtrace stays as long
  // as possible, so the label lands on the first frame it can.
  PosteriorGrid grid{Matrix::Constant(4, 2, std::log(0.5))};
  CtcAlignment align = CtcForcedAlignment(grid, {1});
  EXPECT_EQ(align.symbols, std::vector<int32_t>({1, 0, 0, 0}));
}

TEST(CtcAlignmentTest, InfeasibleThrows) {
  PosteriorGrid grid = PeakedGrid({1}, 2, 0.9);
  EXPECT_THROW(CtcForcedAlignment(grid, {1, 2}), InfeasibleAlignment);
}

TEST(CtcGreedyTest, CollapsesRepeatsAndDropsBlanks) {
  EXPECT_EQ(CtcGreedyDecode(PeakedGrid({1, 1, 0, 2}, 3, 0.9)),
            LabelSequence({1, 2}));
  EXPECT_EQ(CtcGreedyDecode(PeakedGrid({0, 0, 0}, 3, 0.9)), LabelSequence{});
  EXPECT_EQ(CtcGreedyDecode(PeakedGrid({1, 0, 1}, 3, 0.9)),
            LabelSequence({1, 1}));
}

TEST(CtcGreedyTest, IdempotentUnderOneHotReencoding) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    PosteriorGrid grid = oracle::RandomPosteriorGrid(10, 3, &rng, 2.0);
    LabelSequence decoded = CtcGreedyDecode(grid);
    std::vector<int32_t> frames;
    for (size_t i = 0; i < decoded.size(); ++i) {
      if (i > 0 && decoded[i] == decoded[i - 1]) frames.push_back(kBlankId);
      frames.push_back(decoded[i]);
    }
    if (frames.empty()) frames.push_back(kBlankId);
    EXPECT_EQ(CtcGreedyDecode(PeakedGrid(frames, 3, 0.99)), decoded);
  }
}

TEST(BlankPosteriorTest, ProjectsColumnZero) {
  PosteriorGrid uniform{Matrix::Constant(3, 4, std::log(0.25))};
  for (double v : BlankLogPosteriors(uniform)) EXPECT_EQ(v, std::log(0.25));
  PosteriorGrid blanks{Matrix::Constant(2, 3, kLogZero)};
  blanks.log_post.col(0).setZero();
  for (double v : BlankLogPosteriors(blanks)) EXPECT_EQ(v, 0.0);
  std::mt19937_64 rng(4);
  PosteriorGrid grid = oracle::RandomPosteriorGrid(7, 5, &rng);
  auto column = BlankLogPosteriors(grid);
  for (int32_t t = 0; t < 7; ++t) EXPECT_EQ(column[t], grid.log_post(t, 0));
}

}  // namespace
}  // namespace ctcguide
