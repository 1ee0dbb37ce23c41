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

// A small transducer with a CTC branch: split dense encoder with LConv and
// frame reduction, a CTC head, a bigram or recurrent predictor, and an
// additive joiner. Gradients are hand-written.

#ifndef CTCGUIDE_MODEL_H_
#define CTCGUIDE_MODEL_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ctcguide/ctc.h"
#include "ctcguide/numerics.h"
#include "ctcguide/reduction.h"
#include "ctcguide/rnnt.h"

namespace ctcguide {

enum class PredictorKind { kBigram, kRecurrent };

std::string PredictorKindName(PredictorKind kind);  // "bigram", "recurrent"
PredictorKind ParsePredictorKind(const std::string &name);

struct ModelConfig {
  int32_t dim = 16;        // D, also the input embedding size
  int32_t vocab_size = 8;  // V, tokens are 1..V
  int32_t pred_dim = 16;   // P
  int32_t shared_layers = 2;
  int32_t rest_layers = 3;
  PredictorKind predictor = PredictorKind::kBigram;
  uint64_t seed = 1;

  void Validate() const;
};

struct ToyModelParams {
  std::vector<DenseLayer> shared;
  std::vector<DenseLayer> rest;
  LConvParams lconv;
  Matrix ctc_weight;   // D x K
  Matrix ctc_bias;     // 1 x K
  Matrix embedding;    // K x P, row 0 is the start-of-sequence token
  Matrix rec_weight;   // P x P, empty for the bigram predictor
  Matrix rec_bias;     // 1 x P, empty for the bigram predictor
  Matrix joiner_enc;   // D x K
  Matrix joiner_pred;  // P x K
  Matrix joiner_bias;  // 1 x K

  int32_t Dim() const { return static_cast<int32_t>(ctc_weight.rows()); }
  int32_t NumSymbols() const { return static_cast<int32_t>(ctc_weight.cols()); }
  int32_t VocabSize() const { return NumSymbols() - 1; }
  int32_t PredDim() const { return static_cast<int32_t>(embedding.cols()); }
  PredictorKind Predictor() const {
    return rec_weight.size() > 0 ? PredictorKind::kRecurrent
                                 : PredictorKind::kBigram;
  }

  static ToyModelParams Init(const ModelConfig &config);
  // Same shapes, every entry zero.
  ToyModelParams ZerosLike() const;
  void Validate() const;

  // Every parameter matrix with a stable name, in a fixed order. Drives
  // the optimizer, checkpoints and gradient checks.
  std::vector<std::pair<std::string, Matrix *>> Blocks();
  std::vector<std::pair<std::string, const Matrix *>> Blocks() const;
  int64_t NumParameters() const;
};

// Rebuilds a parameter set from named blocks (checkpoint loading).
ToyModelParams ParamsFromBlocks(
    const std::vector<std::pair<std::string, Matrix>> &blocks);

// One predictor update: the state after consuming prev_token. The start
// state is a 1 x P zero row and the start token is the blank id.
RowVector PredictorStep(const ToyModelParams &params, const RowVector &state,
                        int32_t prev_token);

struct PredictorCache {
  std::vector<int32_t> prev_tokens;
  Matrix states;  // (U+1) x P
};

// States for every label prefix l_{<=u}, u = 0..U.
Matrix PredictorForward(const ToyModelParams &params,
                        const LabelSequence &labels, PredictorCache *cache);
void PredictorBackward(const ToyModelParams &params,
                       const PredictorCache &cache, const Matrix &grad_states,
                       ToyModelParams *grads);

// Lazily computed joiner fibers log_softmax(enc_proj[t] + pred_proj[u]).
class ModelJointSupplier : public JointSupplier {
 public:
  ModelJointSupplier(Matrix enc_proj, Matrix pred_proj);

  int32_t NumFrames() const override {
    return static_cast<int32_t>(enc_proj_.rows());
  }
  int32_t NumLabels() const override {
    return static_cast<int32_t>(pred_proj_.rows()) - 1;
  }
  int32_t NumSymbols() const override {
    return static_cast<int32_t>(enc_proj_.cols());
  }
  void ComputeBlock(int32_t t_begin, int32_t t_end, int32_t u_begin,
                    int32_t u_end, std::span<double> out) const override;

  int64_t fibers_computed() const { return fibers_computed_; }

 private:
  Matrix enc_proj_;
  Matrix pred_proj_;
  mutable int64_t fibers_computed_ = 0;
};

// Writes log_softmax(enc_row + pred_row) into out.
void JoinerFiber(const double *enc_row, const double *pred_row,
                 int32_t num_symbols, std::span<double> out);

struct EncoderOutput {
  SplitForwardResult split;
  PosteriorGrid ctc;  // T rows, from the CTC branch
  Matrix enc_proj;    // T' x K, joiner projection of the RNN-T branch
};

EncoderOutput Encode(const ToyModelParams &params, const EmbeddingSequence &x,
                     const SplitOptions &options);

struct ModelForwardResult {
  EncoderOutput encoder;
  PredictorCache predictor;
  Matrix pred_proj;  // (U+1) x K

  ModelJointSupplier Joint() const {
    return ModelJointSupplier(encoder.enc_proj, pred_proj);
  }
};

ModelForwardResult ModelForward(const ToyModelParams &params,
                                const EmbeddingSequence &x,
                                const LabelSequence &labels,
                                const SplitOptions &options);

struct Utterance {
  std::string id;
  EmbeddingSequence frames;
  LabelSequence labels;
  std::vector<int32_t> truth;  // optional per-frame symbols, 0 for silence
};

struct TrainConfig {
  double ctc_weight = 0.1;
  double rnnt_weight = 1.0;
  double threshold = 0.9;
  ReductionMode mode = ReductionMode::kNone;
  int32_t strip_width = 8;
  std::optional<int32_t> height;  // nullopt: full lattice
  double learning_rate = 0.05;
  double lr_decay = 1.0;  // multiplier applied after every epoch
  int32_t epochs = 1;
  int32_t batch_size = 8;
  uint64_t seed = 1;

  void Validate() const;
};

struct UtteranceLoss {
  double ctc_loss = 0.0;
  double rnnt_loss = 0.0;
  double total = 0.0;
  int32_t num_frames = 0;
  int32_t kept_frames = 0;
  bool fell_back = false;
  int64_t lattice_cells = 0;  // fibers evaluated by the transducer loss
};

// Interpolated loss for one utterance. If grads is non-null the gradient
// of the total is added to it.
UtteranceLoss ComputeLoss(const ToyModelParams &params, const Utterance &utt,
                          const TrainConfig &config, ToyModelParams *grads);

struct StepMetrics {
  double ctc_loss = 0.0;   // batch means
  double rnnt_loss = 0.0;
  double total_loss = 0.0;
  double kept_fraction = 0.0;  // kept frames / frames over the batch
  int32_t fallbacks = 0;
  int64_t lattice_cells = 0;
};

// One SGD step on the batch-mean loss. Utterance gradients are summed in
// batch order. Throws Error naming the utterance on a non-finite loss.
StepMetrics CotrainStep(ToyModelParams *params,
                        std::span<const Utterance *const> batch,
                        const TrainConfig &config, double learning_rate);

using StepCallback =
    std::function<void(int64_t step, int32_t epoch, const StepMetrics &)>;

// Epoch loop with a seeded shuffle per epoch.
void Train(ToyModelParams *params, std::span<const Utterance> data,
           const TrainConfig &config, const StepCallback &on_step);

struct SynthConfig {
  int32_t vocab_size = 8;
  int32_t num_utterances = 2000;
  int32_t dim = 16;
  int32_t min_tokens = 2;
  int32_t max_tokens = 6;
  int32_t min_token_frames = 1;
  int32_t max_token_frames = 2;
  int32_t min_gap_frames = 2;
  int32_t max_gap_frames = 5;
  double noise = 0.1;
  bool allow_repeats = false;  // adjacent equal tokens
  uint64_t seed = 1;            // label, length and noise sampling
  uint64_t prototype_seed = 1;  // silence and token embeddings

  void Validate() const;
};

struct SynthDataset {
  std::vector<Utterance> utterances;
  Matrix prototypes;  // K x D, row 0 is silence
  int64_t blank_frames = 0;
  int64_t total_frames = 0;

  double BlankFraction() const {
    return total_frames == 0 ? 0.0
                             : static_cast<double>(blank_frames) / total_frames;
  }
};

// Every token is preceded by a silence gap of g frames and lasts f frames,
// g and f uniform over their ranges. An utterance without tokens is a
// single gap.
SynthDataset GenerateSynthDataset(const SynthConfig &config);

// Pooled blank fraction implied by the ranges.
double ExpectedBlankFraction(const SynthConfig &config);

// Number of tokens started at or before each frame of a truth track.
std::vector<int32_t> TruthTrace(const std::vector<int32_t> &truth);

}  // namespace ctcguide

#endif  // CTCGUIDE_MODEL_H_
