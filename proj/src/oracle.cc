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

#include "ctcguide/oracle.h"

#include <algorithm>
#include <cmath>

#include "ctcguide/error.h"

namespace ctcguide::oracle {

namespace {

// Walks every transducer path of a T x U lattice, calling visit(moves).
template <typename Visit>
void ForEachRnntPath(int32_t num_frames, int32_t num_labels, Visit visit) {
  std::vector<RnntMove> moves;
  auto recurse = [&](auto &self, int32_t t, int32_t u) -> void {
    if (t == num_frames - 1 && u == num_labels) {
      moves.push_back(RnntMove::kBlank);
      visit(moves);
      moves.pop_back();
      return;
    }
    if (u < num_labels) {
      moves.push_back(RnntMove::kEmit);
      self(self, t, u + 1);
      moves.pop_back();
    }
    if (t < num_frames - 1) {
      moves.push_back(RnntMove::kBlank);
      self(self, t + 1, u);
      moves.pop_back();
    }
  };
  recurse(recurse, 0, 0);
}

}  // namespace

CtcEnumeration EnumerateCtc(const PosteriorGrid &grid,
                            const LabelSequence &labels) {
  const int32_t num_frames = grid.NumFrames();
  const int32_t num_symbols = grid.NumSymbols();
  CtcEnumeration out;
  std::vector<int32_t> path(num_frames, 0);
  std::vector<double> admissible;
  while (true) {
    if (CollapseCtcPath(path) == labels) {
      double lp = 0.0;
      for (int32_t t = 0; t < num_frames; ++t) lp += grid.log_post(t, path[t]);
      admissible.push_back(lp);
      if (lp > out.best_log_prob) {
        out.best_log_prob = lp;
        out.best_path = path;
      }
    }
    // Odometer increment, last frame fastest.
    int32_t t = num_frames - 1;
    while (t >= 0 && ++path[t] == num_symbols) path[t--] = 0;
    if (t < 0) break;
  }
  out.num_admissible = static_cast<int64_t>(admissible.size());
  double sum = 0.0;
  for (double lp : admissible) sum += std::exp(lp);
  out.log_like = admissible.empty() ? kLogZero : std::log(sum);
  return out;
}

double RnntLogLikeByEnumeration(const JointGrid &grid,
                                const LabelSequence &labels) {
  double sum = 0.0;
  ForEachRnntPath(grid.NumFrames(), grid.NumLabels(),
                  [&](const std::vector<RnntMove> &moves) {
                    int32_t t = 0, u = 0;
                    double lp = 0.0;
                    for (RnntMove m : moves) {
                      if (m == RnntMove::kEmit) {
                        lp += grid(t, u, labels[u]);
                        ++u;
                      } else {
                        lp += grid(t, u, kBlankId);
                        ++t;
                      }
                    }
                    sum += std::exp(lp);
                  });
  return std::log(sum);
}

double PrunedRnntLogLikeByEnumeration(const JointGrid &grid,
                                      const LabelSequence &labels,
                                      const ConfidenceRegion &region) {
  double sum = 0.0;
  ForEachRnntPath(
      grid.NumFrames(), grid.NumLabels(),
      [&](const std::vector<RnntMove> &moves) {
        int32_t t = 0, u = 0;
        double lp = 0.0;
        bool inside = region.Contains(0, 0);
        for (RnntMove m : moves) {
          if (m == RnntMove::kEmit) {
            lp += grid(t, u, labels[u]);
            ++u;
          } else {
            lp += grid(t, u, kBlankId);
            ++t;
          }
          if (t < grid.NumFrames() && !region.Contains(t, u)) inside = false;
        }
        if (inside) sum += std::exp(lp);
      });
  return sum > 0.0 ? std::log(sum) : kLogZero;
}

PosteriorGrid RandomPosteriorGrid(int32_t num_frames, int32_t vocab_size,
                                  std::mt19937_64 *rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  PosteriorGrid grid{Matrix(num_frames, vocab_size + 1)};
  for (Eigen::Index i = 0; i < grid.log_post.size(); ++i)
    grid.log_post.data()[i] = normal(*rng);
  LogSoftmaxRows(&grid.log_post);
  return grid;
}

JointGrid RandomJointGrid(int32_t num_frames, int32_t num_labels,
                          int32_t vocab_size, std::mt19937_64 *rng,
                          double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  JointGrid grid(num_frames, num_labels, vocab_size + 1);
  for (double &v : grid.Data()) v = normal(*rng);
  for (int32_t t = 0; t < num_frames; ++t)
    for (int32_t u = 0; u <= num_labels; ++u) {
      auto fiber = grid.Fiber(t, u);
      LogSoftmax(fiber, fiber);
    }
  return grid;
}

LabelSequence RandomLabels(int32_t length, int32_t vocab_size,
                           std::mt19937_64 *rng) {
  std::uniform_int_distribution<int32_t> token(1, vocab_size);
  LabelSequence labels(length);
  for (int32_t &l : labels) l = token(*rng);
  return labels;
}

MapEnumeration MapByEnumeration(const TransducerScorer &scorer,
                                int32_t max_length) {
  const int32_t frames = scorer.NumFrames();
  const int32_t symbols = scorer.NumSymbols();
  MapEnumeration result;
  LabelSequence labels;
  std::vector<double> fiber(symbols);
  // Odometer over lengths 0..max_length, shorter sequences first.
  for (int32_t length = 0; length <= max_length; ++length) {
    labels.assign(length, 1);
    while (true) {
      JointGrid grid(frames, length, symbols);
      RowVector state = scorer.InitialState();
      for (int32_t u = 0; u <= length; ++u) {
        for (int32_t t = 0; t < frames; ++t) {
          scorer.Fiber(t, state, fiber);
          std::copy(fiber.begin(), fiber.end(), grid.Fiber(t, u).begin());
        }
        if (u < length) state = scorer.NextState(state, labels[u]);
      }
      const double lp = RnntLogLikeByEnumeration(grid, labels);
      result.covered_mass += std::exp(lp);
      if (lp > result.best_log_prob ||
          (lp == result.best_log_prob && labels < result.best)) {
        result.best_log_prob = lp;
        result.best = labels;
      }
      int32_t pos = length - 1;
      while (pos >= 0 && labels[pos] == symbols - 1) labels[pos--] = 1;
      if (pos < 0) break;
      ++labels[pos];
    }
  }
  return result;
}

}  // namespace ctcguide::oracle
