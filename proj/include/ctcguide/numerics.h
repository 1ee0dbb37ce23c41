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

#ifndef CTCGUIDE_NUMERICS_H_
#define CTCGUIDE_NUMERICS_H_

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ctcguide {

// Row-major dense matrix of doubles. Log-domain grids may hold -inf.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// log(0).
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// log(exp(a) + exp(b)); -inf is absorbing.
inline double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

// log(sum_i exp(values[i])), computed by shifting with the max.
// Throws Error("empty reduction") on empty input.
double LogSumExp(std::span<const double> values);

// In-place log-softmax of every row.
void LogSoftmaxRows(Matrix *m);

// Log-softmax of a single vector, written to out (may alias in).
void LogSoftmax(std::span<const double> in, std::span<double> out);

// Backward of a row-wise log-softmax: given the output log-probs and the
// gradient w.r.t. them, returns the gradient w.r.t. the logits.
Matrix LogSoftmaxBackward(const Matrix &log_probs, const Matrix &grad_out);

// Index of the largest element; ties resolve to the lowest index.
int32_t ArgMax(std::span<const double> values);

using ScalarFunction = std::function<double(std::span<const double>)>;

// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
// Throws if f is not finite at any probe, naming the coordinate.
std::vector<double> FiniteDifferenceGradient(const ScalarFunction &f,
                                             std::span<const double> x,
                                             double eps);

// ||a - b||_2 / max(||a||_2, ||b||_2); zero when both are zero.
double RelativeError(std::span<const double> a, std::span<const double> b);

inline std::span<const double> AsSpan(const Matrix &m) {
  return {m.data(), static_cast<size_t>(m.size())};
}
inline std::span<double> AsSpan(Matrix &m) {
  return {m.data(), static_cast<size_t>(m.size())};
}

}  // namespace ctcguide

#endif  // CTCGUIDE_NUMERICS_H_
