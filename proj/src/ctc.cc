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

#include "ctcguide/ctc.h"

#include <algorithm>
#include <string>

#include "ctcguide/error.h"

namespace ctcguide {

namespace {

// The blank-expanded state sequence  # l1 # l2 # ... lU #.
// Even states are blanks, state 2u+1 carries label l_{u+1}.
class ExpandedLabels {
 public:
  explicit ExpandedLabels(const LabelSequence &labels) : labels_(labels) {}

  int32_t NumStates() const {
    return 2 * static_cast<int32_t>(labels_.size()) + 1;
  }
  int32_t Symbol(int32_t s) const {
    return (s % 2 == 0) ? kBlankId : labels_[(s - 1) / 2];
  }
  // Whether state s can be entered directly from s-2 (skipping a blank).
  bool CanSkip(int32_t s) const {
    return s % 2 == 1 && s >= 3 && Symbol(s) != Symbol(s - 2);
  }

 private:
  const LabelSequence &labels_;
};

void CheckFeasible(const PosteriorGrid &grid, const LabelSequence &labels) {
  ValidateLabels(labels, grid.VocabSize());
  int32_t needed = CtcMinFrames(labels);
  if (grid.NumFrames() < std::max(needed, 1))
    throw InfeasibleAlignment("CTC needs " + std::to_string(needed) +
                              " frames, grid has " +
                              std::to_string(grid.NumFrames()));
}

}  // namespace

void ValidateLabels(const LabelSequence &labels, int32_t vocab_size) {
  for (int32_t token : labels)
    if (token < 1 || token > vocab_size)
      throw Error("label " + std::to_string(token) + " outside 1.." +
                  std::to_string(vocab_size));
}

bool PosteriorGrid::IsNormalized(double tol) const {
  for (Eigen::Index t = 0; t < log_post.rows(); ++t) {
    double z = LogSumExp({log_post.row(t).data(),
                          static_cast<size_t>(log_post.cols())});
    if (std::abs(z) > tol) return false;
  }
  return true;
}

int32_t CtcMinFrames(const LabelSequence &labels) {
  int32_t repeats = 0;
  for (size_t i = 1; i < labels.size(); ++i)
    if (labels[i] == labels[i - 1]) ++repeats;
  return static_cast<int32_t>(labels.size()) + repeats;
}

CtcLossResult CtcLoss(const PosteriorGrid &grid, const LabelSequence &labels) {
  CheckFeasible(grid, labels);
  const ExpandedLabels expanded(labels);
  const int32_t num_frames = grid.NumFrames();
  const int32_t num_states = expanded.NumStates();
  const Matrix &lp = grid.log_post;

  Matrix alpha = Matrix::Constant(num_frames, num_states, kLogZero);
  alpha(0, 0) = lp(0, kBlankId);
  if (num_states > 1) alpha(0, 1) = lp(0, expanded.Symbol(1));
  for (int32_t t = 1; t < num_frames; ++t) {
    for (int32_t s = 0; s < num_states; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (expanded.CanSkip(s)) a = LogAdd(a, alpha(t - 1, s - 2));
      alpha(t, s) = a + lp(t, expanded.Symbol(s));
    }
  }

  // beta(t, s) excludes the emission at frame t.
  Matrix beta = Matrix::Constant(num_frames, num_states, kLogZero);
  beta(num_frames - 1, num_states - 1) = 0.0;
  if (num_states > 1) beta(num_frames - 1, num_states - 2) = 0.0;
  for (int32_t t = num_frames - 2; t >= 0; --t) {
    for (int32_t s = 0; s < num_states; ++s) {
      double b = beta(t + 1, s) + lp(t + 1, expanded.Symbol(s));
      if (s + 1 < num_states)
        b = LogAdd(b, beta(t + 1, s + 1) + lp(t + 1, expanded.Symbol(s + 1)));
      if (s + 2 < num_states && expanded.CanSkip(s + 2))
        b = LogAdd(b, beta(t + 1, s + 2) + lp(t + 1, expanded.Symbol(s + 2)));
      beta(t, s) = b;
    }
  }

  double log_like = alpha(num_frames - 1, num_states - 1);
  if (num_states > 1)
    log_like = LogAdd(log_like, alpha(num_frames - 1, num_states - 2));
  if (log_like == kLogZero)
    throw InfeasibleAlignment("all CTC paths have zero probability");

  CtcLossResult result;
  result.loss = -log_like;
  result.grad = Matrix::Zero(num_frames, grid.NumSymbols());
  for (int32_t t = 0; t < num_frames; ++t) {
    for (int32_t s = 0; s < num_states; ++s) {
      double occupancy = alpha(t, s) + beta(t, s) - log_like;
      if (occupancy == kLogZero) continue;
      result.grad(t, expanded.Symbol(s)) -= std::exp(occupancy);
    }
  }
  return result;
}

CtcAlignment CtcForcedAlignment(const PosteriorGrid &grid,
                                const LabelSequence &labels) {
  CheckFeasible(grid, labels);
  const ExpandedLabels expanded(labels);
  const int32_t num_frames = grid.NumFrames();
  const int32_t num_states = expanded.NumStates();
  const Matrix &lp = grid.log_post;

  Matrix delta = Matrix::Constant(num_frames, num_states, kLogZero);
  Eigen::Matrix<int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      back(num_frames, num_states);
  back.setConstant(-1);
  delta(0, 0) = lp(0, kBlankId);
  if (num_states > 1) delta(0, 1) = lp(0, expanded.Symbol(1));
  for (int32_t t = 1; t < num_frames; ++t) {
    for (int32_t s = 0; s < num_states; ++s) {
      // Candidates in order of preference: stay, advance by one, skip.
      int32_t best = s;
      double best_score = delta(t - 1, s);
      if (s >= 1 && delta(t - 1, s - 1) > best_score) {
        best = s - 1;
        best_score = delta(t - 1, s - 1);
      }
      if (expanded.CanSkip(s) && delta(t - 1, s - 2) > best_score) {
        best = s - 2;
        best_score = delta(t - 1, s - 2);
      }
      if (best_score == kLogZero) continue;
      delta(t, s) = best_score + lp(t, expanded.Symbol(s));
      back(t, s) = best;
    }
  }

  int32_t state = num_states - 1;
  if (num_states > 1 &&
      delta(num_frames - 1, num_states - 2) > delta(num_frames - 1, state))
    state = num_states - 2;
  if (delta(num_frames - 1, state) == kLogZero)
    throw InfeasibleAlignment("no CTC path with nonzero probability");

  CtcAlignment align;
  align.symbols.resize(num_frames);
  align.trace.resize(num_frames);
  for (int32_t t = num_frames - 1; t >= 0; --t) {
    align.symbols[t] = expanded.Symbol(state);
    align.trace[t] = (state + 1) / 2;
    if (t > 0) state = back(t, state);
  }
  return align;
}

double CtcPathLogProb(const PosteriorGrid &grid,
                      const std::vector<int32_t> &symbols) {
  if (static_cast<int32_t>(symbols.size()) != grid.NumFrames())
    throw ShapeError("path length " + std::to_string(symbols.size()) +
                     " vs " + std::to_string(grid.NumFrames()) + " frames");
  double total = 0.0;
  for (size_t t = 0; t < symbols.size(); ++t)
    total += grid.log_post(static_cast<Eigen::Index>(t), symbols[t]);
  return total;
}

LabelSequence CollapseCtcPath(const std::vector<int32_t> &symbols) {
  LabelSequence out;
  int32_t prev = kBlankId;
  for (int32_t s : symbols) {
    if (s != kBlankId && s != prev) out.push_back(s);
    prev = s;
  }
  return out;
}

LabelSequence CtcGreedyDecode(const PosteriorGrid &grid) {
  std::vector<int32_t> best(grid.NumFrames());
  for (int32_t t = 0; t < grid.NumFrames(); ++t)
    best[t] = ArgMax({grid.log_post.row(t).data(),
                      static_cast<size_t>(grid.NumSymbols())});
  return CollapseCtcPath(best);
}

std::vector<double> BlankLogPosteriors(const PosteriorGrid &grid) {
  std::vector<double> out(grid.NumFrames());
  for (int32_t t = 0; t < grid.NumFrames(); ++t)
    out[t] = grid.log_post(t, kBlankId);
  return out;
}

}  // namespace ctcguide
