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

#ifndef CTCGUIDE_CTC_H_
#define CTCGUIDE_CTC_H_

#include <cstdint>
#include <vector>

#include "ctcguide/numerics.h"

namespace ctcguide {

// Symbol 0 is blank in every grid; real tokens are 1..V.
inline constexpr int32_t kBlankId = 0;

// A reference transcription l_1..l_U. May be empty. Never contains blank.
using LabelSequence = std::vector<int32_t>;

// Throws Error if any token is outside 1..vocab_size.
void ValidateLabels(const LabelSequence &labels, int32_t vocab_size);

// Per-frame CTC log-posteriors. Row t is log p(. | x_t) over the blank and
// the V tokens, so the matrix is T x (V+1).
struct PosteriorGrid {
  Matrix log_post;

  int32_t NumFrames() const { return static_cast<int32_t>(log_post.rows()); }
  int32_t NumSymbols() const { return static_cast<int32_t>(log_post.cols()); }
  int32_t VocabSize() const { return NumSymbols() - 1; }

  // True if every row log-sums to 0 within tol.
  bool IsNormalized(double tol = 1e-9) const;
};

// Frame-synchronous best path. symbols[t] is the blank or a token;
// trace[t] is the number of reference labels emitted up to and including
// frame t.
struct CtcAlignment {
  std::vector<int32_t> symbols;
  std::vector<int32_t> trace;
};

struct CtcLossResult {
  double loss = 0.0;
  Matrix grad;  // d loss / d log_post, T x (V+1)
};

// Minimum number of frames needed to align labels: U plus one separating
// blank per adjacent repeated pair.
int32_t CtcMinFrames(const LabelSequence &labels);

// -log sum over all blank-expanded paths collapsing to labels, with the
// gradient w.r.t. the log-posteriors. Throws InfeasibleAlignment when the
// grid has fewer than CtcMinFrames(labels) rows.
CtcLossResult CtcLoss(const PosteriorGrid &grid, const LabelSequence &labels);

// Viterbi path over the 2U+1 blank-expanded states. On equal scores the
// backtrace prefers staying in a state over advancing into it, and the
// final state prefers the trailing blank over the last label.
CtcAlignment CtcForcedAlignment(const PosteriorGrid &grid,
                                const LabelSequence &labels);

// Log-probability of a frame-level symbol path under the grid.
double CtcPathLogProb(const PosteriorGrid &grid,
                      const std::vector<int32_t> &symbols);

// Merge repeats, then drop blanks.
LabelSequence CollapseCtcPath(const std::vector<int32_t> &symbols);

// Per-frame argmax (ties go to the lower id, i.e. blank), collapsed.
LabelSequence CtcGreedyDecode(const PosteriorGrid &grid);

// Column kBlankId of the grid.
std::vector<double> BlankLogPosteriors(const PosteriorGrid &grid);

}  // namespace ctcguide

#endif  // CTCGUIDE_CTC_H_
