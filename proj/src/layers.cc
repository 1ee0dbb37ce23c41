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

#include "ctcguide/layers.h"

#include <string>

#include "ctcguide/error.h"

namespace ctcguide {

DenseLayer DenseLayer::Zeros(int32_t in, int32_t out) {
  return {Matrix::Zero(in, out), Matrix::Zero(1, out)};
}

DenseLayer DenseLayer::Random(int32_t in, int32_t out, std::mt19937_64 *rng) {
  return {RandomMatrix(in, out, 1.0 / std::sqrt(static_cast<double>(in)), rng),
          Matrix::Zero(1, out)};
}

Matrix RandomMatrix(int32_t rows, int32_t cols, double stddev,
                    std::mt19937_64 *rng) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(*rng);
  return m;
}

Matrix DenseForward(const DenseLayer &layer, const Matrix &x,
                    DenseCache *cache) {
  if (x.cols() != layer.weight.rows())
    throw ShapeError("dense layer expects dim " +
                     std::to_string(layer.weight.rows()) + ", got " +
                     std::to_string(x.cols()));
  Matrix pre = x * layer.weight;
  pre.rowwise() += layer.bias.row(0);
  Matrix y = pre.array().tanh().matrix();
  if (cache) {
    cache->input = x;
    cache->output = y;
  }
  return y;
}

Matrix DenseBackward(const DenseLayer &layer, const DenseCache &cache,
                     const Matrix &grad_out, DenseLayer *grads) {
  if (grad_out.rows() != cache.output.rows() ||
      grad_out.cols() != cache.output.cols())
    throw ShapeError("dense backward gradient shape");
  Matrix grad_pre =
      (grad_out.array() * (1.0 - cache.output.array().square())).matrix();
  grads->weight.noalias() += cache.input.transpose() * grad_pre;
  grads->bias += grad_pre.colwise().sum();
  return grad_pre * layer.weight.transpose();
}

}  // namespace ctcguide
