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

#include "ctcguide/numerics.h"

#include <algorithm>
#include <random>

#include "ctcguide/error.h"
#include "gtest/gtest.h"

namespace ctcguide {

TEST(LogSumExpTest, HalvesSumToOne) {
  std::vector<double> v = {std::log(0.5), std::log(0.5)};
  EXPECT_NEAR(LogSumExp(v), 0.0, 1e-15);
}

TEST(LogSumExpTest, ZeroIsAbsorbing) {
  std::vector<double> v = {kLogZero, -3.25};
  EXPECT_EQ(LogSumExp(v), -3.25);
  std::vector<double> zeros = {kLogZero, kLogZero};
  EXPECT_EQ(LogSumExp(zeros), kLogZero);
}

TEST(LogSumExpTest, EmptyInputThrows) {
  std::vector<double> v;
  try {
    LogSumExp(v);
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_STREQ(e.what(), "empty reduction");
  }
}

TEST(LogSumExpTest, MatchesDirectSummation) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-20.0, 0.0);
  std::vector<double> v(64);
  for (double &x : v) x = dist(rng);
  double direct = 0.0;
  for (double x : v) direct += std::exp(x);
  EXPECT_NEAR(LogSumExp(v), std::log(direct), 1e-12);
}

TEST(LogSumExpTest, ShiftAndPermutationInvariant) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-30.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 17);
    for (double &x : v) x = dist(rng);
    const double base = LogSumExp(v);
    const double c = dist(rng) * 10.0;
    std::vector<double> shifted = v;
    for (double &x : shifted) x += c;
    EXPECT_NEAR(LogSumExp(shifted), base + c, 1e-12);
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_NEAR(LogSumExp(v), base, 1e-12);
    const double max_value = *std::max_element(v.begin(), v.end());
    EXPECT_LE(max_value, base);
    EXPECT_LE(base, max_value + std::log(static_cast<double>(v.size())) + 1e-12);
  }
}

TEST(LogAddTest, AgreesWithLogSumExp) {
  EXPECT_NEAR(LogAdd(std::log(0.25), std::log(0.5)), std::log(0.75), 1e-15);
  EXPECT_EQ(LogAdd(kLogZero, kLogZero), kLogZero);
  EXPECT_EQ(LogAdd(-1.0, kLogZero), -1.0);
}

TEST(FiniteDifferenceTest, Quadratic) {
  std::vector<double> x = {3.0};
  auto g = FiniteDifferenceGradient(
      [](std::span<const double> p) { return p[0] * p[0]; }, x, 1e-6);
  EXPECT_NEAR(g[0], 6.0, 1e-6);
}

TEST(FiniteDifferenceTest, ConstantGivesZero) {
  std::vector<double> x = {1.0, -2.0, 0.5};
  auto g = FiniteDifferenceGradient([](std::span<const double>) { return 4.0; },
                                    x, 1e-6);
  for (double v : g) EXPECT_EQ(v, 0.0);
}

TEST(FiniteDifferenceTest, NonFiniteNamesCoordinate) {
  std::vector<double> x = {1.0, 0.0};
  try {
    FiniteDifferenceGradient(
        [](std::span<const double> p) { return p[0] + std::sqrt(p[1]); }, x, 1e-6);
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("coordinate 1"), std::string::npos);
  }
}

TEST(LogSoftmaxTest, BackwardMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix logits(3, 5), weights(3, 5);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    logits.data()[i] = normal(rng);
    weights.data()[i] = normal(rng);
  }
  auto objective = [&](std::span<const double> p) {
    Matrix m = Eigen::Map<const Matrix>(p.data(), 3, 5);
    LogSoftmaxRows(&m);
    return (m.array() * weights.array()).sum();
  };
  Matrix lp = logits;
  LogSoftmaxRows(&lp);
  Matrix analytic = LogSoftmaxBackward(lp, weights);
  auto numeric = FiniteDifferenceGradient(objective, AsSpan(logits), 1e-6);
  EXPECT_LT(RelativeError(AsSpan(analytic), numeric), 1e-8);
}

TEST(ArgMaxTest, TiesGoToLowestIndex) {
  std::vector<double> v = {0.5, 0.5, 0.1};
  EXPECT_EQ(ArgMax(v), 0);
  std::vector<double> w = {0.1, 0.7, 0.7};
  EXPECT_EQ(ArgMax(w), 1);
}

}  // namespace ctcguide
