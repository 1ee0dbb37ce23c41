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

// Frame-synchronous transducer decoding, optionally over the frames that
// survive CTC blank-frame reduction.

#ifndef CTCGUIDE_DECODE_H_
#define CTCGUIDE_DECODE_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ctcguide/ctc.h"
#include "ctcguide/model.h"
#include "ctcguide/numerics.h"
#include "ctcguide/reduction.h"

namespace ctcguide {

inline constexpr int32_t kMaxEmitsPerFrame = 10;

// What the decoder needs from a transducer: per-frame joiner fibers given a
// predictor state, and the predictor update.
class TransducerScorer {
 public:
  virtual ~TransducerScorer() = default;

  virtual int32_t NumFrames() const = 0;
  virtual int32_t NumSymbols() const = 0;
  virtual RowVector InitialState() const = 0;
  virtual RowVector NextState(const RowVector &state, int32_t token) const = 0;
  // Log-distribution over blank and tokens at frame t.
  virtual void Fiber(int32_t t, const RowVector &state,
                     std::span<double> out) const = 0;
};

// Joiner of a ToyModelParams over precomputed encoder projections.
class ModelScorer : public TransducerScorer {
 public:
  ModelScorer(const ToyModelParams &params, Matrix enc_proj)
      : params_(params), enc_proj_(std::move(enc_proj)) {}

  int32_t NumFrames() const override {
    return static_cast<int32_t>(enc_proj_.rows());
  }
  int32_t NumSymbols() const override { return params_.NumSymbols(); }
  RowVector InitialState() const override;
  RowVector NextState(const RowVector &state, int32_t token) const override;
  void Fiber(int32_t t, const RowVector &state,
             std::span<double> out) const override;

 private:
  const ToyModelParams &params_;
  Matrix enc_proj_;
};

struct Hypothesis {
  LabelSequence tokens;
  double score = 0.0;  // log-probability of the moves that produced it
  RowVector state;     // predictor state after the last token
};

struct DecodeStats {
  int64_t decoder_steps = 0;  // frames presented to the decoder
  int64_t joiner_evals = 0;   // joiner fibers computed
  int64_t cap_hits = 0;       // frames where the emission cap forced a blank
};

// Emits the argmax token while it is not blank, at most kMaxEmitsPerFrame
// times per frame; argmax ties go to blank. If mask is given, frames with
// keep[t] false are never scored.
Hypothesis GreedyDecode(const TransducerScorer &scorer,
                        const FrameKeepMask *mask, DecodeStats *stats);

// Per frame, hypotheses are expanded in waves: every live hypothesis
// contributes its blank continuation to the next frame's set and its token
// continuations to the next wave. Equal token sequences are merged by
// log-sum. Returns the final hypotheses best first (score, then tokens
// ascending).
std::vector<Hypothesis> BeamSearch(const TransducerScorer &scorer,
                                   int32_t beam_size,
                                   const FrameKeepMask *mask,
                                   DecodeStats *stats);

struct DecodeConfig {
  ReductionMode mode = ReductionMode::kNone;
  double threshold = 0.9;
  int32_t beam_size = 8;
  bool greedy = false;
};

struct DecodeResult {
  Hypothesis best;
  std::vector<Hypothesis> nbest;  // empty for greedy decoding
  int32_t num_frames = 0;
  int32_t kept_frames = 0;
  DecodeStats stats;

  double KeptFraction() const {
    return num_frames == 0 ? 1.0
                           : static_cast<double>(kept_frames) / num_frames;
  }
};

// Encodes x in config.mode (blank frames are removed for decoder_fr and
// encoder_fr), then decodes the surviving frames. When every frame is
// removed the result is the empty hypothesis with zero decoder steps.
DecodeResult DecodeWithFrameSkipping(const ToyModelParams &params,
                                     const EmbeddingSequence &x,
                                     const DecodeConfig &config);

struct EditCounts {
  int64_t substitutions = 0;
  int64_t deletions = 0;
  int64_t insertions = 0;

  int64_t Total() const { return substitutions + deletions + insertions; }
};

// Levenshtein alignment of hyp against ref with unit costs.
EditCounts EditDistance(const LabelSequence &ref, const LabelSequence &hyp);

struct EvalReport {
  int64_t utterances = 0;
  int64_t correct_sequences = 0;
  int64_t ref_tokens = 0;
  EditCounts edits;
  int64_t frames = 0;
  int64_t kept_frames = 0;
  DecodeStats stats;
  std::vector<LabelSequence> hypotheses;

  double TokenErrorRate() const;
  double SequenceAccuracy() const;
  double DeletionRate() const;
  double KeptFraction() const;
};

EvalReport Evaluate(const ToyModelParams &params,
                    std::span<const Utterance> data,
                    const DecodeConfig &config);

}  // namespace ctcguide

#endif  // CTCGUIDE_DECODE_H_
