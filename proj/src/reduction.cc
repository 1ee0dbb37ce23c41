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

#include <cmath>

#include "ctcguide/error.h"
#include "spdlog/spdlog.h"

namespace ctcguide {
namespace {

constexpr int32_t kHalfKernel = kLConvKernel / 2;

Eigen::ArrayXXd Sigmoid(const Eigen::ArrayXXd &x) {
  return 1.0 / (1.0 + (-x).exp());
}

void CheckShape(const Matrix &m, Eigen::Index rows, Eigen::Index cols,
                const char *what) {
  if (m.rows() != rows || m.cols() != cols)
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) +
                     "x" + std::to_string(cols) + ", got " +
                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

Matrix RunStack(std::span<const DenseLayer> layers, Matrix x,
                std::vector<DenseCache> *caches) {
  caches->resize(layers.size());
  for (size_t i = 0; i < layers.size(); ++i)
    x = DenseForward(layers[i], x, &(*caches)[i]);
  return x;
}

Matrix BackStack(std::span<const DenseLayer> layers,
                 const std::vector<DenseCache> &caches, Matrix grad,
                 std::vector<DenseLayer> *grads) {
  for (size_t i = layers.size(); i-- > 0;)
    grad = DenseBackward(layers[i], caches[i], grad, &(*grads)[i]);
  return grad;
}

int64_t StackMacs(std::span<const DenseLayer> layers, int64_t frames) {
  int64_t macs = 0;
  for (const DenseLayer &layer : layers) macs += layer.MacsPerFrame() * frames;
  return macs;
}

}  // namespace

FrameKeepMask FrameKeepMask::KeepAll(int32_t num_frames) {
  FrameKeepMask mask;
  mask.keep.assign(num_frames, true);
  mask.kept_count = num_frames;
  return mask;
}

FrameKeepMask ComputeFrameKeepMask(std::span<const double> blank_log_post,
                                   double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("threshold must lie in (0, 1), got " +
                      std::to_string(threshold));
  FrameKeepMask mask;
  mask.keep.resize(blank_log_post.size());
  for (size_t t = 0; t < blank_log_post.size(); ++t) {
    const bool keep = !(std::exp(blank_log_post[t]) > threshold);
    mask.keep[t] = keep;
    mask.kept_count += keep;
  }
  return mask;
}

EmbeddingSequence ApplyFrameReduction(const EmbeddingSequence &x,
                                      const FrameKeepMask &mask) {
  if (x.rows() != mask.NumFrames())
    throw ShapeError("mask covers " + std::to_string(mask.NumFrames()) +
                     " frames, sequence has " + std::to_string(x.rows()));
  EmbeddingSequence out(mask.kept_count, x.cols());
  Eigen::Index row = 0;
  for (int32_t t = 0; t < mask.NumFrames(); ++t)
    if (mask.keep[t]) out.row(row++) = x.row(t);
  return out;
}

Matrix ScatterKeptRows(const Matrix &reduced, const FrameKeepMask &mask) {
  if (reduced.rows() != mask.kept_count)
    throw ShapeError("reduced sequence has " + std::to_string(reduced.rows()) +
                     " rows, mask keeps " + std::to_string(mask.kept_count));
  Matrix out = Matrix::Zero(mask.NumFrames(), reduced.cols());
  Eigen::Index row = 0;
  for (int32_t t = 0; t < mask.NumFrames(); ++t)
    if (mask.keep[t]) out.row(t) = reduced.row(row++);
  return out;
}

void LConvParams::Validate() const {
  const int32_t d = Dim();
  CheckShape(pointwise_in, d, 2 * d, "lconv pointwise_in");
  CheckShape(depthwise, kLConvKernel, d, "lconv depthwise");
  CheckShape(pointwise_out, d, d, "lconv pointwise_out");
}

LConvParams LConvParams::Zeros(int32_t dim) {
  return {Matrix::Zero(dim, 2 * dim), Matrix::Zero(kLConvKernel, dim),
          Matrix::Zero(dim, dim)};
}

LConvParams LConvParams::Random(int32_t dim, std::mt19937_64 *rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  LConvParams p;
  p.pointwise_in = RandomMatrix(dim, 2 * dim, scale, rng);
  p.depthwise = RandomMatrix(kLConvKernel, dim,
                             1.0 / std::sqrt(double{kLConvKernel}), rng);
  p.pointwise_out = RandomMatrix(dim, dim, scale, rng);
  return p;
}

EmbeddingSequence LConvForward(const EmbeddingSequence &x,
                               const LConvParams &params, LConvCache *cache) {
  params.Validate();
  const int32_t d = params.Dim();
  if (x.cols() != d)
    throw ShapeError("lconv expects dim " + std::to_string(d) + ", got " +
                     std::to_string(x.cols()));
  const Eigen::Index frames = x.rows();

  Matrix expanded = x * params.pointwise_in;
  Matrix gated = (expanded.leftCols(d).array() *
                  Sigmoid(expanded.rightCols(d).array()))
                     .matrix();
  Matrix conv = Matrix::Zero(frames, d);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int32_t j = 0; j < kLConvKernel; ++j) {
      const Eigen::Index src = t + j - kHalfKernel;
      if (src < 0 || src >= frames) continue;
      conv.row(t).array() +=
          params.depthwise.row(j).array() * gated.row(src).array();
    }
  }
  Matrix swish = (conv.array() * Sigmoid(conv.array())).matrix();
  EmbeddingSequence y = x + swish * params.pointwise_out;

  if (cache) {
    cache->input = x;
    cache->expanded = std::move(expanded);
    cache->gated = std::move(gated);
    cache->conv = std::move(conv);
    cache->swish = std::move(swish);
  }
  return y;
}

Matrix LConvBackward(const LConvCache &cache, const LConvParams &params,
                     const Matrix &grad_out, LConvParams *grads) {
  const int32_t d = params.Dim();
  const Eigen::Index frames = cache.input.rows();
  CheckShape(grad_out, frames, d, "lconv upstream gradient");
  CheckShape(cache.swish, frames, d, "lconv cache");

  grads->pointwise_out.noalias() += cache.swish.transpose() * grad_out;
  Matrix grad_swish = grad_out * params.pointwise_out.transpose();

  Eigen::ArrayXXd sig_z = Sigmoid(cache.conv.array());
  Matrix grad_conv =
      (grad_swish.array() *
       (sig_z + cache.conv.array() * sig_z * (1.0 - sig_z)))
          .matrix();

  Matrix grad_gated = Matrix::Zero(frames, d);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int32_t j = 0; j < kLConvKernel; ++j) {
      const Eigen::Index src = t + j - kHalfKernel;
      if (src < 0 || src >= frames) continue;
      grads->depthwise.row(j).array() +=
          grad_conv.row(t).array() * cache.gated.row(src).array();
      grad_gated.row(src).array() +=
          grad_conv.row(t).array() * params.depthwise.row(j).array();
    }
  }

  Eigen::ArrayXXd a = cache.expanded.leftCols(d).array();
  Eigen::ArrayXXd sig_b = Sigmoid(cache.expanded.rightCols(d).array());
  Matrix grad_expanded(frames, 2 * d);
  grad_expanded.leftCols(d) = (grad_gated.array() * sig_b).matrix();
  grad_expanded.rightCols(d) =
      (grad_gated.array() * a * sig_b * (1.0 - sig_b)).matrix();

  grads->pointwise_in.noalias() += cache.input.transpose() * grad_expanded;
  return grad_out + grad_expanded * params.pointwise_in.transpose();
}

std::string ReductionModeName(ReductionMode mode) {
  switch (mode) {
    case ReductionMode::kNone:
      return "none";
    case ReductionMode::kDecoder:
      return "decoder_fr";
    case ReductionMode::kEncoder:
      return "encoder_fr";
  }
  return "unknown";
}

ReductionMode ParseReductionMode(const std::string &name) {
  if (name == "none") return ReductionMode::kNone;
  if (name == "decoder_fr") return ReductionMode::kDecoder;
  if (name == "encoder_fr") return ReductionMode::kEncoder;
  throw ConfigError("unknown reduction mode '" + name +
                    "' (expected none, decoder_fr or encoder_fr)");
}

SplitForwardResult SplitForward(const EmbeddingSequence &x,
                                std::span<const DenseLayer> shared,
                                std::span<const DenseLayer> rest,
                                const LConvParams &lconv,
                                const SplitOptions &options,
                                const PosteriorFn &ctc_head) {
  SplitForwardResult out;
  const int32_t frames = static_cast<int32_t>(x.rows());
  Matrix h = RunStack(shared, x, &out.shared_caches);

  auto make_mask = [&](const Matrix &log_post) {
    if (options.mode == ReductionMode::kNone)
      return FrameKeepMask::KeepAll(frames);
    Eigen::VectorXd blank = log_post.col(0);
    FrameKeepMask mask = ComputeFrameKeepMask(
        std::span<const double>(blank.data(), blank.size()), options.threshold);
    if (mask.kept_count == 0 && frames > 0 && options.fallback_on_empty) {
      spdlog::warn("frame reduction dropped all {} frames; using the "
                   "unreduced sequence",
                   frames);
      out.fell_back = true;
      return FrameKeepMask::KeepAll(frames);
    }
    return mask;
  };

  if (options.mode == ReductionMode::kEncoder) {
    out.ctc_input = h;
    out.ctc_log_post = ctc_head(out.ctc_input);
    out.mask = make_mask(out.ctc_log_post);
    Matrix smoothed = LConvForward(h, lconv, &out.lconv_cache);
    out.rnnt_input =
        RunStack(rest, ApplyFrameReduction(smoothed, out.mask), &out.rest_caches);
    out.encoder_macs = StackMacs(shared, frames) +
                       StackMacs(rest, out.mask.kept_count);
  } else {
    out.ctc_input = RunStack(rest, h, &out.rest_caches);
    out.ctc_log_post = ctc_head(out.ctc_input);
    out.mask = make_mask(out.ctc_log_post);
    Matrix smoothed = LConvForward(out.ctc_input, lconv, &out.lconv_cache);
    out.rnnt_input = ApplyFrameReduction(smoothed, out.mask);
    out.encoder_macs = StackMacs(shared, frames) + StackMacs(rest, frames);
  }
  return out;
}

void SplitBackward(const SplitForwardResult &forward,
                   std::span<const DenseLayer> shared,
                   std::span<const DenseLayer> rest, const LConvParams &lconv,
                   ReductionMode mode, const Matrix &grad_ctc_input,
                   const Matrix &grad_rnnt_input, EncoderGrads *grads) {
  if (grads->shared.size() != shared.size() ||
      grads->rest.size() != rest.size())
    throw ShapeError("encoder gradient buffers do not match the layer stacks");
  CheckShape(grad_ctc_input, forward.ctc_input.rows(), forward.ctc_input.cols(),
             "ctc branch gradient");
  CheckShape(grad_rnnt_input, forward.rnnt_input.rows(),
             forward.rnnt_input.cols(), "rnnt branch gradient");

  Matrix grad_h;
  if (mode == ReductionMode::kEncoder) {
    Matrix grad_reduced =
        BackStack(rest, forward.rest_caches, grad_rnnt_input, &grads->rest);
    grad_h = grad_ctc_input +
             LConvBackward(forward.lconv_cache, lconv,
                           ScatterKeptRows(grad_reduced, forward.mask),
                           &grads->lconv);
  } else {
    Matrix grad_r =
        grad_ctc_input +
        LConvBackward(forward.lconv_cache, lconv,
                      ScatterKeptRows(grad_rnnt_input, forward.mask),
                      &grads->lconv);
    grad_h = BackStack(rest, forward.rest_caches, grad_r, &grads->rest);
  }
  BackStack(shared, forward.shared_caches, grad_h, &grads->shared);
}

}  // namespace ctcguide
