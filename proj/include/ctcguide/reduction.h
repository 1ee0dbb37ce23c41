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

// Blank-posterior frame reduction, the convolution block run before it, and
// the split encoder that lets reduction happen after the shared layers
// (encoder reduction) or after all layers (decoder reduction).

#ifndef CTCGUIDE_REDUCTION_H_
#define CTCGUIDE_REDUCTION_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctcguide/layers.h"
#include "ctcguide/numerics.h"

namespace ctcguide {

// T x D acoustic embeddings, one frame per row. T may be 0 after reduction.
using EmbeddingSequence = Matrix;

struct FrameKeepMask {
  std::vector<bool> keep;
  int32_t kept_count = 0;

  int32_t NumFrames() const { return static_cast<int32_t>(keep.size()); }
  double KeptFraction() const {
    return keep.empty() ? 1.0 : static_cast<double>(kept_count) / keep.size();
  }
  static FrameKeepMask KeepAll(int32_t num_frames);
};

// Drops frame t iff exp(blank_log_post[t]) > threshold. Frames exactly at
// the threshold are kept. Throws ConfigError unless 0 < threshold < 1.
FrameKeepMask ComputeFrameKeepMask(std::span<const double> blank_log_post,
                                   double threshold);

// Rows with keep[t], in their original order.
EmbeddingSequence ApplyFrameReduction(const EmbeddingSequence &x,
                                      const FrameKeepMask &mask);

// Inverse gather for gradients: places the reduced rows back at their
// source frames, zeros elsewhere.
Matrix ScatterKeptRows(const Matrix &reduced, const FrameKeepMask &mask);

inline constexpr int32_t kLConvKernel = 7;

// Pointwise expand to 2D, GLU back to D, depthwise conv (kernel 7, zero
// padded), swish, pointwise project, residual add.
struct LConvParams {
  Matrix pointwise_in;   // D x 2D
  Matrix depthwise;      // kLConvKernel x D, row j is tap j - 3
  Matrix pointwise_out;  // D x D

  int32_t Dim() const { return static_cast<int32_t>(pointwise_out.rows()); }
  void Validate() const;

  static LConvParams Zeros(int32_t dim);
  static LConvParams Random(int32_t dim, std::mt19937_64 *rng);
};

struct LConvCache {
  Matrix input;     // x
  Matrix expanded;  // x W_in
  Matrix gated;     // GLU output
  Matrix conv;      // depthwise output
  Matrix swish;     // activation output
};

EmbeddingSequence LConvForward(const EmbeddingSequence &x,
                               const LConvParams &params, LConvCache *cache);

// Accumulates into grads and returns d loss / d x.
Matrix LConvBackward(const LConvCache &cache, const LConvParams &params,
                     const Matrix &grad_out, LConvParams *grads);

enum class ReductionMode { kNone, kDecoder, kEncoder };

// "none", "decoder_fr", "encoder_fr".
std::string ReductionModeName(ReductionMode mode);
ReductionMode ParseReductionMode(const std::string &name);

// Maps a CTC-branch embedding sequence to T x (V+1) log-posteriors.
using PosteriorFn = std::function<Matrix(const EmbeddingSequence &)>;

struct SplitOptions {
  ReductionMode mode = ReductionMode::kNone;
  double threshold = 0.9;
  // When every frame would be dropped, keep them all instead (training).
  bool fallback_on_empty = false;
};

struct SplitForwardResult {
  EmbeddingSequence ctc_input;
  EmbeddingSequence rnnt_input;
  Matrix ctc_log_post;
  FrameKeepMask mask;
  int64_t encoder_macs = 0;  // dense-layer multiply-accumulates
  bool fell_back = false;

  std::vector<DenseCache> shared_caches;
  std::vector<DenseCache> rest_caches;
  LConvCache lconv_cache;
};

// Runs the shared layers, then depending on mode:
//   none:       rest layers, CTC head, LConv; every frame kept.
//   decoder_fr: rest layers, CTC head, LConv, drop blank frames.
//   encoder_fr: CTC head, LConv, drop blank frames, rest layers.
// The mask comes from the CTC head's blank column.
SplitForwardResult SplitForward(const EmbeddingSequence &x,
                                std::span<const DenseLayer> shared,
                                std::span<const DenseLayer> rest,
                                const LConvParams &lconv,
                                const SplitOptions &options,
                                const PosteriorFn &ctc_head);

struct EncoderGrads {
  std::vector<DenseLayer> shared;
  std::vector<DenseLayer> rest;
  LConvParams lconv;
};

// Back-propagates gradients w.r.t. ctc_input and rnnt_input into grads.
// Dropped frames receive no gradient through the RNN-T branch.
void SplitBackward(const SplitForwardResult &forward,
                   std::span<const DenseLayer> shared,
                   std::span<const DenseLayer> rest, const LConvParams &lconv,
                   ReductionMode mode, const Matrix &grad_ctc_input,
                   const Matrix &grad_rnnt_input, EncoderGrads *grads);

}  // namespace ctcguide

#endif  // CTCGUIDE_REDUCTION_H_
