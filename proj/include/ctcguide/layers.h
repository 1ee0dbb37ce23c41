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

#ifndef CTCGUIDE_LAYERS_H_
#define CTCGUIDE_LAYERS_H_

#include <cstdint>
#include <random>

#include "ctcguide/numerics.h"

namespace ctcguide {

// Per-frame encoder layer: y = tanh(x W + b).
struct DenseLayer {
  Matrix weight;  // in x out
  Matrix bias;    // 1 x out

  int32_t InputDim() const { return static_cast<int32_t>(weight.rows()); }
  int32_t OutputDim() const { return static_cast<int32_t>(weight.cols()); }
  // Multiply-accumulates spent on one frame.
  int64_t MacsPerFrame() const {
    return static_cast<int64_t>(weight.rows()) * weight.cols();
  }

  static DenseLayer Zeros(int32_t in, int32_t out);
  static DenseLayer Random(int32_t in, int32_t out, std::mt19937_64 *rng);
};

struct DenseCache {
  Matrix output;  // tanh activations
  Matrix input;
};

Matrix DenseForward(const DenseLayer &layer, const Matrix &x,
                    DenseCache *cache);

// Accumulates parameter gradients into grads and returns d loss / d x.
Matrix DenseBackward(const DenseLayer &layer, const DenseCache &cache,
                     const Matrix &grad_out, DenseLayer *grads);

// Gaussian init with std 1/sqrt(fan_in).
Matrix RandomMatrix(int32_t rows, int32_t cols, double stddev,
                    std::mt19937_64 *rng);

}  // namespace ctcguide

#endif  // CTCGUIDE_LAYERS_H_
