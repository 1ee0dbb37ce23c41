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

#include "ctcguide/reduction.h"

#include <random>

#include "ctcguide/error.h"
#include "gtest/gtest.h"

namespace ctcguide {
namespace {

std::vector<double> Logs(std::initializer_list<double> probs) {
  std::vector<double> out;
  for (double p : probs) out.push_back(std::log(p));
  return out;
}

Matrix RandomSeq(int rows, int cols, std::mt19937_64 *rng) {
  return RandomMatrix(rows, cols, 1.0, rng);
}

double Dot(const Matrix &a, const Matrix &b) {
  return (a.array() * b.array()).sum();
}

TEST(FrameKeepMaskTest, DropsConfidentBlanks) {
  auto mask = ComputeFrameKeepMask(Logs({0.95, 0.3, 0.99, 0.5}), 0.9);
  EXPECT_EQ(mask.keep, (std::vector<bool>{false, true, false, true}));
  EXPECT_EQ(mask.kept_count, 2);
  EXPECT_DOUBLE_EQ(mask.KeptFraction(), 0.5);
}

TEST(FrameKeepMaskTest, BoundaryFrameIsKept) {
  auto mask = ComputeFrameKeepMask(Logs({0.9}), 0.9);
  EXPECT_TRUE(mask.keep[0]);
  EXPECT_EQ(mask.kept_count, 1);
}

TEST(FrameKeepMaskTest, AllBlankDropsEverything) {
  auto mask = ComputeFrameKeepMask(Logs({0.99, 0.99, 0.99}), 0.9);
  EXPECT_EQ(mask.kept_count, 0);
}

TEST(FrameKeepMaskTest, ThresholdOutsideOpenIntervalIsConfigError) {
  auto lp = Logs({0.5});
  EXPECT_THROW(ComputeFrameKeepMask(lp, 0.0), ConfigError);
  EXPECT_THROW(ComputeFrameKeepMask(lp, 1.0), ConfigError);
  EXPECT_THROW(ComputeFrameKeepMask(lp, -0.2), ConfigError);
  EXPECT_THROW(ComputeFrameKeepMask(lp, std::nan("")), ConfigError);
}

TEST(ApplyFrameReductionTest, Examples) {
  Matrix x(3, 2);
  x << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(ApplyFrameReduction(x, FrameKeepMask::KeepAll(3)), x);

  FrameKeepMask none{{false, false, false}, 0};
  EXPECT_EQ(ApplyFrameReduction(x, none).rows(), 0);

  FrameKeepMask mask{{true, false, true}, 2};
  Matrix expected(2, 2);
  expected << 1, 2, 5, 6;
  EXPECT_EQ(ApplyFrameReduction(x, mask), expected);
}

TEST(ApplyFrameReductionTest, LengthMismatchThrows) {
  Matrix x = Matrix::Zero(3, 2);
  EXPECT_THROW(ApplyFrameReduction(x, FrameKeepMask::KeepAll(2)), ShapeError);
}

TEST(ApplyFrameReductionTest, PropertyThresholdNearOneIsIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> prob(0.0, 0.999);
  for (int trial = 0; trial < 50; ++trial) {
    const int frames = 1 + trial % 13;
    std::vector<double> blank(frames);
    for (double &b : blank) b = std::log(prob(rng));
    Matrix x = RandomSeq(frames, 3, &rng);
    auto mask = ComputeFrameKeepMask(blank, 1.0 - 1e-9);
    EXPECT_EQ(ApplyFrameReduction(x, mask), x);
  }
}

TEST(ApplyFrameReductionTest, PropertyKeptRowsAreOrderedSubsequence) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int frames = 1 + trial % 17;
    std::vector<double> blank(frames);
    for (double &b : blank) b = std::log(prob(rng));
    Matrix x = RandomSeq(frames, 4, &rng);
    auto mask = ComputeFrameKeepMask(blank, 0.5);
    Matrix y = ApplyFrameReduction(x, mask);
    ASSERT_EQ(y.rows(), mask.kept_count);
    Eigen::Index next = 0;
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      while (next < x.rows() && x.row(next) != y.row(r)) ++next;
      ASSERT_LT(next, x.rows());
      ++next;
    }
    EXPECT_EQ(ScatterKeptRows(y, mask).rows(), frames);
  }
}

TEST(LConvTest, ZeroWeightsAreResidualOnly) {
  std::mt19937_64 rng(3);
  Matrix x = RandomSeq(5, 4, &rng);
  LConvParams params = LConvParams::Zeros(4);
  LConvCache cache;
  EXPECT_EQ(LConvForward(x, params, &cache), x);

  Matrix upstream = RandomSeq(5, 4, &rng);
  LConvParams grads = LConvParams::Zeros(4);
  EXPECT_EQ(LConvBackward(cache, params, upstream, &grads), upstream);
}

TEST(LConvTest, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(4);
  LConvParams params = LConvParams::Random(3, &rng);
  Matrix x = RandomSeq(6, 3, &rng);
  LConvCache cache;
  LConvForward(x, params, &cache);
  LConvParams grads = LConvParams::Zeros(3);
  Matrix gx = LConvBackward(cache, params, Matrix::Zero(6, 3), &grads);
  EXPECT_EQ(gx.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grads.pointwise_in.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grads.depthwise.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grads.pointwise_out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(LConvTest, SingleFrameUsesCenterTapOnly) {
  std::mt19937_64 rng(5);
  const int d = 3;
  LConvParams params = LConvParams::Random(d, &rng);
  Matrix x = RandomSeq(1, d, &rng);
  // Direct scalar evaluation, independent of the matrix code path.
  std::vector<double> expected(d);
  std::vector<double> act(d);
  for (int c = 0; c < d; ++c) {
    double a = 0, b = 0;
    for (int i = 0; i < d; ++i) {
      a += x(0, i) * params.pointwise_in(i, c);
      b += x(0, i) * params.pointwise_in(i, d + c);
    }
    double g = a / (1.0 + std::exp(-b));
    double z = params.depthwise(kLConvKernel / 2, c) * g;
    act[c] = z / (1.0 + std::exp(-z));
  }
  for (int c = 0; c < d; ++c) {
    expected[c] = x(0, c);
    for (int i = 0; i < d; ++i) expected[c] += act[i] * params.pointwise_out(i, c);
  }
  Matrix y = LConvForward(x, params, nullptr);
  for (int c = 0; c < d; ++c) EXPECT_NEAR(y(0, c), expected[c], 1e-14);
}

TEST(LConvTest, DimensionMismatchThrows) {
  LConvParams params = LConvParams::Zeros(3);
  EXPECT_THROW(LConvForward(Matrix::Zero(2, 4), params, nullptr), ShapeError);
  params.depthwise = Matrix::Zero(5, 3);
  EXPECT_THROW(LConvForward(Matrix::Zero(2, 3), params, nullptr), ShapeError);
}

TEST(LConvTest, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  const int frames = 9, d = 4;
  LConvParams params = LConvParams::Random(d, &rng);
  Matrix x = RandomSeq(frames, d, &rng);
  Matrix weights = RandomSeq(frames, d, &rng);

  LConvCache cache;
  LConvForward(x, params, &cache);
  LConvParams grads = LConvParams::Zeros(d);
  Matrix gx = LConvBackward(cache, params, weights, &grads);

  auto loss_at = [&](const Matrix &input, const LConvParams &p) {
    return Dot(LConvForward(input, p, nullptr), weights);
  };
  {
    auto f = [&](std::span<const double> v) {
      return loss_at(Eigen::Map<const Matrix>(v.data(), frames, d), params);
    };
    EXPECT_LE(RelativeError(AsSpan(gx), FiniteDifferenceGradient(f, AsSpan(x), 1e-5)),
              1e-4);
  }
  auto check_block = [&](Matrix LConvParams::*member) {
    const Matrix &base = params.*member;
    auto f = [&](std::span<const double> v) {
      LConvParams p = params;
      p.*member = Eigen::Map<const Matrix>(v.data(), base.rows(), base.cols());
      return loss_at(x, p);
    };
    return RelativeError(AsSpan(grads.*member),
                         FiniteDifferenceGradient(f, AsSpan(base), 1e-5));
  };
  EXPECT_LE(check_block(&LConvParams::pointwise_in), 1e-4);
  EXPECT_LE(check_block(&LConvParams::depthwise), 1e-4);
  EXPECT_LE(check_block(&LConvParams::pointwise_out), 1e-4);
}

TEST(ReductionModeTest, NamesRoundTrip) {
  for (auto mode : {ReductionMode::kNone, ReductionMode::kDecoder,
                    ReductionMode::kEncoder})
    EXPECT_EQ(ParseReductionMode(ReductionModeName(mode)), mode);
  EXPECT_THROW(ParseReductionMode("middle"), ConfigError);
}

class SplitTest : public ::testing::Test {
 protected:
  static constexpr int kDim = 4;
  static constexpr int kSymbols = 3;

  void SetUp() override {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2; ++i) shared_.push_back(DenseLayer::Random(kDim, kDim, &rng));
    for (int i = 0; i < 3; ++i) rest_.push_back(DenseLayer::Random(kDim, kDim, &rng));
    lconv_ = LConvParams::Random(kDim, &rng);
    head_ = RandomMatrix(kDim, kSymbols, 2.0, &rng);
    head_bias_ = Matrix::Zero(1, kSymbols);
    x_ = RandomSeq(12, kDim, &rng);
  }

  PosteriorFn Head() const {
    return [this](const Matrix &in) {
      Matrix logits = in * head_;
      logits.rowwise() += head_bias_.row(0);
      LogSoftmaxRows(&logits);
      return logits;
    };
  }

  SplitForwardResult Run(ReductionMode mode, double threshold) const {
    return SplitForward(x_, shared_, rest_, lconv_, {mode, threshold, false},
                        Head());
  }

  std::vector<DenseLayer> shared_, rest_;
  LConvParams lconv_;
  Matrix head_, head_bias_, x_;
};

TEST_F(SplitTest, NoneKeepsEveryFrameAndCountsAllLayers) {
  auto out = Run(ReductionMode::kNone, 0.9);
  EXPECT_EQ(out.rnnt_input.rows(), 12);
  EXPECT_EQ(out.ctc_input.rows(), 12);
  EXPECT_EQ(out.ctc_log_post.rows(), 12);
  EXPECT_EQ(out.encoder_macs, int64_t{5} * 12 * kDim * kDim);
}

TEST_F(SplitTest, DecoderReductionMatchesNoneFlops) {
  // Bias the blank logit so that some frames drop.
  head_bias_(0, 0) = 1.5;
  auto none = Run(ReductionMode::kNone, 0.6);
  auto dec = Run(ReductionMode::kDecoder, 0.6);
  EXPECT_EQ(dec.encoder_macs, none.encoder_macs);
  EXPECT_LT(dec.mask.kept_count, 12);
  EXPECT_GT(dec.mask.kept_count, 0);
  EXPECT_EQ(dec.rnnt_input.rows(), dec.mask.kept_count);
  EXPECT_EQ(dec.rnnt_input, ApplyFrameReduction(none.rnnt_input, dec.mask));
}

TEST_F(SplitTest, EncoderReductionScalesRestFlopsExactly) {
  head_bias_(0, 0) = 1.5;
  for (double threshold : {0.3, 0.5, 0.6, 0.8}) {
    auto enc = Run(ReductionMode::kEncoder, threshold);
    const int64_t per_frame = kDim * kDim;
    EXPECT_EQ(enc.encoder_macs,
              2 * 12 * per_frame + 3 * int64_t{enc.mask.kept_count} * per_frame);
    EXPECT_EQ(enc.rnnt_input.rows(), enc.mask.kept_count);
    EXPECT_EQ(enc.ctc_input.rows(), 12);
  }
}

TEST_F(SplitTest, NearOneThresholdMatchesNone) {
  auto none = Run(ReductionMode::kNone, 0.9);
  auto dec = Run(ReductionMode::kDecoder, 1.0 - 1e-12);
  EXPECT_EQ(dec.rnnt_input, none.rnnt_input);
}

TEST_F(SplitTest, FallbackKeepsEverythingWhenAllDropped) {
  head_bias_(0, 0) = 50.0;
  auto strict = Run(ReductionMode::kDecoder, 0.5);
  EXPECT_EQ(strict.mask.kept_count, 0);
  EXPECT_EQ(strict.rnnt_input.rows(), 0);
  auto fallback = SplitForward(x_, shared_, rest_, lconv_,
                               {ReductionMode::kDecoder, 0.5, true}, Head());
  EXPECT_TRUE(fallback.fell_back);
  EXPECT_EQ(fallback.rnnt_input.rows(), 12);
}

TEST_F(SplitTest, BackwardMatchesFiniteDifferences) {
  head_bias_(0, 0) = 1.0;
  std::mt19937_64 rng(8);
  for (auto mode : {ReductionMode::kNone, ReductionMode::kDecoder,
                    ReductionMode::kEncoder}) {
    auto fwd = Run(mode, 0.6);
    Matrix w_ctc = RandomSeq(fwd.ctc_input.rows(), kDim, &rng);
    Matrix w_rnnt = RandomSeq(fwd.rnnt_input.rows(), kDim, &rng);
    EncoderGrads grads{std::vector<DenseLayer>(2, DenseLayer::Zeros(kDim, kDim)),
                       std::vector<DenseLayer>(3, DenseLayer::Zeros(kDim, kDim)),
                       LConvParams::Zeros(kDim)};
    SplitBackward(fwd, shared_, rest_, lconv_, mode, w_ctc, w_rnnt, &grads);

    // The mask is a constant of the objective.
    auto objective = [&]() {
      auto out = Run(mode, 0.6);
      EXPECT_EQ(out.mask.keep, fwd.mask.keep);
      return Dot(out.ctc_input, w_ctc) + Dot(out.rnnt_input, w_rnnt);
    };
    auto check = [&](Matrix *param, const Matrix &analytic) {
      const Matrix saved = *param;
      auto f = [&](std::span<const double> v) {
        *param = Eigen::Map<const Matrix>(v.data(), saved.rows(), saved.cols());
        return objective();
      };
      auto numeric = FiniteDifferenceGradient(f, AsSpan(saved), 1e-5);
      *param = saved;
      return RelativeError(AsSpan(analytic), numeric);
    };
    const std::string name = ReductionModeName(mode);
    EXPECT_LE(check(&shared_[0].weight, grads.shared[0].weight), 1e-4) << name;
    EXPECT_LE(check(&shared_[1].bias, grads.shared[1].bias), 1e-4) << name;
    EXPECT_LE(check(&rest_[0].weight, grads.rest[0].weight), 1e-4) << name;
    EXPECT_LE(check(&rest_[2].bias, grads.rest[2].bias), 1e-4) << name;
    EXPECT_LE(check(&lconv_.pointwise_in, grads.lconv.pointwise_in), 1e-4) << name;
    EXPECT_LE(check(&lconv_.depthwise, grads.lconv.depthwise), 1e-4) << name;
    EXPECT_LE(check(&lconv_.pointwise_out, grads.lconv.pointwise_out), 1e-4) << name;
  }
}

}  // namespace
}  // namespace ctcguide
