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
#include <string>

#include "ctcguide/error.h"

namespace ctcguide {

double LogSumExp(std::span<const double> values) {
  if (values.empty()) throw Error("empty reduction");
  double max_value = *std::max_element(values.begin(), values.end());
  if (max_value == kLogZero) return kLogZero;
  if (std::isinf(max_value)) return max_value;  // +inf
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max_value);
  return max_value + std::log(sum);
}

void LogSoftmax(std::span<const double> in, std::span<double> out) {
  double max_value = *std::max_element(in.begin(), in.end());
  double sum = 0.0;
  for (double v : in) sum += std::exp(v - max_value);
  double log_norm = max_value + std::log(sum);
  for (size_t k = 0; k < in.size(); ++k) out[k] = in[k] - log_norm;
}

void LogSoftmaxRows(Matrix *m) {
  for (Eigen::Index r = 0; r < m->rows(); ++r) {
    std::span<double> row(m->row(r).data(), m->cols());
    LogSoftmax(row, row);
  }
}

Matrix LogSoftmaxBackward(const Matrix &log_probs, const Matrix &grad_out) {
  Matrix probs = log_probs.array().exp().matrix();
  Eigen::VectorXd row_sums = grad_out.rowwise().sum();
  Matrix grad_in = grad_out;
  grad_in -= (probs.array().colwise() * row_sums.array()).matrix();
  return grad_in;
}

int32_t ArgMax(std::span<const double> values) {
  int32_t best = 0;
  for (size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = static_cast<int32_t>(k);
  return best;
}

std::vector<double> FiniteDifferenceGradient(const ScalarFunction &f,
                                             std::span<const double> x,
                                             double eps) {
  std::vector<double> probe(x.begin(), x.end());
  std::vector<double> grad(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + eps;
    double plus = f(probe);
    probe[i] = x[i] - eps;
    double minus = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(plus) || !std::isfinite(minus))
      throw Error("non-finite function value at coordinate " +
                  std::to_string(i));
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

double RelativeError(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ShapeError("RelativeError: " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  double diff = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    norm_a += a[i] * a[i];
    norm_b += b[i] * b[i];
  }
  double denom = std::sqrt(std::max(norm_a, norm_b));
  if (denom == 0.0) return 0.0;
  return std::sqrt(diff) / denom;
}

}  // namespace ctcguide
