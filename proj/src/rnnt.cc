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

#include "ctcguide/rnnt.h"

#include <algorithm>
#include <string>

#include "ctcguide/error.h"

namespace ctcguide {

namespace {

void CheckLattice(int32_t num_frames, int32_t num_labels, int32_t num_symbols,
                  const LabelSequence &labels) {
  if (static_cast<int32_t>(labels.size()) != num_labels)
    throw ShapeError("grid has U=" + std::to_string(num_labels) + ", got " +
                     std::to_string(labels.size()) + " labels");
  ValidateLabels(labels, num_symbols - 1);
  if (num_frames < 1)
    throw InfeasibleAlignment("transducer lattice needs at least one frame");
}

// Blank and next-label log-probs of a block of consecutive frames covering
// every label position.
struct StripEdges {
  Matrix blank;  // rows x (U+1)
  Matrix emit;   // rows x U
};

StripEdges FetchStrip(const JointSupplier &supplier,
                      const LabelSequence &labels, int32_t t_begin,
                      int32_t t_end, std::vector<double> *buffer) {
  const int32_t num_labels = supplier.NumLabels();
  const int32_t num_symbols = supplier.NumSymbols();
  const int32_t rows = t_end - t_begin;
  buffer->resize(static_cast<size_t>(rows) * (num_labels + 1) * num_symbols);
  supplier.ComputeBlock(t_begin, t_end, 0, num_labels + 1, *buffer);
  StripEdges edges{Matrix(rows, num_labels + 1), Matrix(rows, num_labels)};
  for (int32_t r = 0; r < rows; ++r) {
    for (int32_t u = 0; u <= num_labels; ++u) {
      const double *fiber =
          buffer->data() +
          (static_cast<size_t>(r) * (num_labels + 1) + u) * num_symbols;
      edges.blank(r, u) = fiber[kBlankId];
      if (u < num_labels) edges.emit(r, u) = fiber[labels[u]];
    }
  }
  return edges;
}

}  // namespace

JointGrid::JointGrid(int32_t num_frames, int32_t num_labels,
                     int32_t num_symbols, double fill)
    : num_frames_(num_frames),
      num_labels_(num_labels),
      num_symbols_(num_symbols),
      data_(static_cast<size_t>(num_frames) * (num_labels + 1) * num_symbols,
            fill) {
  if (num_frames < 0 || num_labels < 0 || num_symbols < 1)
    throw ShapeError("bad JointGrid extents");
}

bool JointGrid::IsNormalized(double tol) const {
  for (int32_t t = 0; t < num_frames_; ++t)
    for (int32_t u = 0; u <= num_labels_; ++u)
      if (std::abs(LogSumExp(Fiber(t, u))) > tol) return false;
  return true;
}

void GridJointSupplier::ComputeBlock(int32_t t_begin, int32_t t_end,
                                     int32_t u_begin, int32_t u_end,
                                     std::span<double> out) const {
  const size_t k = grid_.NumSymbols();
  size_t pos = 0;
  for (int32_t t = t_begin; t < t_end; ++t) {
    for (int32_t u = u_begin; u < u_end; ++u) {
      auto fiber = grid_.Fiber(t, u);
      std::copy(fiber.begin(), fiber.end(), out.begin() + pos);
      pos += k;
    }
  }
}

JointGrid LatticeGradient::ToDense(const LabelSequence &labels,
                                   int32_t num_symbols) const {
  const int32_t num_frames = static_cast<int32_t>(blank.rows());
  const int32_t num_labels = static_cast<int32_t>(blank.cols()) - 1;
  JointGrid dense(num_frames, num_labels, num_symbols, 0.0);
  for (int32_t t = 0; t < num_frames; ++t) {
    for (int32_t u = 0; u <= num_labels; ++u) {
      dense(t, u, kBlankId) = blank(t, u);
      if (u < num_labels) dense(t, u, labels[u]) += emit(t, u);
    }
  }
  return dense;
}

RnntLossResult RnntLoss(const JointGrid &grid, const LabelSequence &labels) {
  const int32_t num_frames = grid.NumFrames();
  const int32_t num_labels = grid.NumLabels();
  CheckLattice(num_frames, num_labels, grid.NumSymbols(), labels);

  auto blank = [&](int32_t t, int32_t u) { return grid(t, u, kBlankId); };
  auto emit = [&](int32_t t, int32_t u) { return grid(t, u, labels[u]); };

  Matrix alpha(num_frames, num_labels + 1);
  for (int32_t t = 0; t < num_frames; ++t) {
    for (int32_t u = 0; u <= num_labels; ++u) {
      double a = (t == 0) ? (u == 0 ? 0.0 : kLogZero)
                          : alpha(t - 1, u) + blank(t - 1, u);
      if (u > 0) a = LogAdd(a, alpha(t, u - 1) + emit(t, u - 1));
      alpha(t, u) = a;
    }
  }
  const int32_t last = num_frames - 1;
  const double log_like = alpha(last, num_labels) + blank(last, num_labels);

  Matrix beta(num_frames, num_labels + 1);
  for (int32_t t = last; t >= 0; --t) {
    for (int32_t u = num_labels; u >= 0; --u) {
      if (t == last && u == num_labels) {
        beta(t, u) = blank(t, u);
        continue;
      }
      double b = (t < last) ? blank(t, u) + beta(t + 1, u) : kLogZero;
      if (u < num_labels) b = LogAdd(b, emit(t, u) + beta(t, u + 1));
      beta(t, u) = b;
    }
  }

  RnntLossResult result;
  result.loss = -log_like;
  result.grad.blank = Matrix::Zero(num_frames, num_labels + 1);
  result.grad.emit = Matrix::Zero(num_frames, num_labels);
  for (int32_t t = 0; t < num_frames; ++t) {
    for (int32_t u = 0; u <= num_labels; ++u) {
      double next = (t < last) ? beta(t + 1, u)
                               : (u == num_labels ? 0.0 : kLogZero);
      double occ = alpha(t, u) + blank(t, u) + next - log_like;
      if (occ != kLogZero) result.grad.blank(t, u) = -std::exp(occ);
      if (u < num_labels) {
        occ = alpha(t, u) + emit(t, u) + beta(t, u + 1) - log_like;
        if (occ != kLogZero) result.grad.emit(t, u) = -std::exp(occ);
      }
    }
  }
  return result;
}

RnntLossResult RnntLossStripwise(const JointSupplier &supplier,
                                 const LabelSequence &labels,
                                 int32_t strip_width) {
  if (strip_width < 1) throw ConfigError("strip width must be >= 1");
  const int32_t num_frames = supplier.NumFrames();
  const int32_t num_labels = supplier.NumLabels();
  CheckLattice(num_frames, num_labels, supplier.NumSymbols(), labels);
  const int32_t num_strips = (num_frames + strip_width - 1) / strip_width;
  const int32_t last = num_frames - 1;
  std::vector<double> buffer;

  // carry_in[s](u) = alpha(t, u) + blank(t, u) for the frame t just before
  // strip s; this is all of the past that strip s needs.
  std::vector<RowVector> carry_in(num_strips);
  RowVector carry(num_labels + 1);
  auto forward_rows = [&](const StripEdges &edges, int32_t t_begin,
                          const RowVector &incoming, Matrix *alpha,
                          RowVector *outgoing) {
    const int32_t rows = static_cast<int32_t>(edges.blank.rows());
    alpha->resize(rows, num_labels + 1);
    for (int32_t r = 0; r < rows; ++r) {
      const int32_t t = t_begin + r;
      for (int32_t u = 0; u <= num_labels; ++u) {
        double a;
        if (r == 0)
          a = (t == 0) ? (u == 0 ? 0.0 : kLogZero) : incoming(u);
        else
          a = (*alpha)(r - 1, u) + edges.blank(r - 1, u);
        if (u > 0) a = LogAdd(a, (*alpha)(r, u - 1) + edges.emit(r, u - 1));
        (*alpha)(r, u) = a;
      }
    }
    *outgoing = alpha->row(rows - 1) + edges.blank.row(rows - 1);
  };

  Matrix alpha;
  RowVector incoming = RowVector::Constant(num_labels + 1, kLogZero);
  for (int32_t s = 0; s < num_strips; ++s) {
    const int32_t t_begin = s * strip_width;
    const int32_t t_end = std::min(num_frames, t_begin + strip_width);
    carry_in[s] = incoming;
    StripEdges edges = FetchStrip(supplier, labels, t_begin, t_end, &buffer);
    forward_rows(edges, t_begin, incoming, &alpha, &carry);
    incoming = carry;
  }
  const double log_like = carry(num_labels);

  RnntLossResult result;
  result.loss = -log_like;
  result.grad.blank = Matrix::Zero(num_frames, num_labels + 1);
  result.grad.emit = Matrix::Zero(num_frames, num_labels);

  // beta of the first frame of the strip after the current one.
  RowVector beta_after = RowVector::Constant(num_labels + 1, kLogZero);
  Matrix beta;
  for (int32_t s = num_strips - 1; s >= 0; --s) {
    const int32_t t_begin = s * strip_width;
    const int32_t t_end = std::min(num_frames, t_begin + strip_width);
    const int32_t rows = t_end - t_begin;
    StripEdges edges = FetchStrip(supplier, labels, t_begin, t_end, &buffer);
    forward_rows(edges, t_begin, carry_in[s], &alpha, &carry);

    beta.resize(rows, num_labels + 1);
    for (int32_t r = rows - 1; r >= 0; --r) {
      const int32_t t = t_begin + r;
      for (int32_t u = num_labels; u >= 0; --u) {
        if (t == last && u == num_labels) {
          beta(r, u) = edges.blank(r, u);
          continue;
        }
        double b = kLogZero;
        if (t < last)
          b = edges.blank(r, u) +
              (r + 1 < rows ? beta(r + 1, u) : beta_after(u));
        if (u < num_labels) b = LogAdd(b, edges.emit(r, u) + beta(r, u + 1));
        beta(r, u) = b;
      }
    }

    for (int32_t r = 0; r < rows; ++r) {
      const int32_t t = t_begin + r;
      for (int32_t u = 0; u <= num_labels; ++u) {
        double next;
        if (t < last)
          next = (r + 1 < rows) ? beta(r + 1, u) : beta_after(u);
        else
          next = (u == num_labels) ? 0.0 : kLogZero;
        double occ = alpha(r, u) + edges.blank(r, u) + next - log_like;
        if (occ != kLogZero) result.grad.blank(t, u) = -std::exp(occ);
        if (u < num_labels) {
          occ = alpha(r, u) + edges.emit(r, u) + beta(r, u + 1) - log_like;
          if (occ != kLogZero) result.grad.emit(t, u) = -std::exp(occ);
        }
      }
    }
    beta_after = beta.row(0);
  }
  return result;
}

double RnntPathLogProb(const JointGrid &grid, const RnntAlignment &path,
                       const LabelSequence &labels) {
  const int32_t num_frames = grid.NumFrames();
  const int32_t num_labels = grid.NumLabels();
  if (static_cast<int32_t>(labels.size()) != num_labels)
    throw ShapeError("labels do not match grid U");
  if (static_cast<int32_t>(path.size()) != num_frames + num_labels ||
      path.empty() || path.back() != RnntMove::kBlank)
    throw Error("invalid transducer path shape");
  int32_t t = 0, u = 0;
  double total = 0.0;
  for (RnntMove move : path) {
    if (t >= num_frames) throw Error("transducer path leaves the lattice");
    if (move == RnntMove::kEmit) {
      if (u >= num_labels) throw Error("transducer path emits past U");
      total += grid(t, u, labels[u]);
      ++u;
    } else {
      total += grid(t, u, kBlankId);
      ++t;
    }
  }
  if (t != num_frames || u != num_labels)
    throw Error("transducer path does not end at (T, U)");
  return total;
}

double BinomialCoefficient(int64_t n, int64_t k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double result = 1.0;
  for (int64_t i = 1; i <= k; ++i)
    result = result * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(result);
}

std::vector<RnntAlignment> EnumerateRnntPaths(int32_t num_frames,
                                              int32_t num_labels) {
  if (num_frames < 1 || num_labels < 0)
    throw Error("path enumeration needs T >= 1 and U >= 0");
  const double count =
      BinomialCoefficient(num_frames + num_labels - 1, num_labels);
  if (count > 1e6)
    throw Error("path enumeration guard: " + std::to_string(count) +
                " paths exceeds 1e6");
  std::vector<RnntAlignment> paths;
  paths.reserve(static_cast<size_t>(count));
  RnntAlignment prefix;
  // Depth-first over the first T+U-1 moves; the last move is always blank.
  auto recurse = [&](auto &self, int32_t blanks_left, int32_t emits_left) {
    if (blanks_left == 0 && emits_left == 0) {
      prefix.push_back(RnntMove::kBlank);
      paths.push_back(prefix);
      prefix.pop_back();
      return;
    }
    if (emits_left > 0) {
      prefix.push_back(RnntMove::kEmit);
      self(self, blanks_left, emits_left - 1);
      prefix.pop_back();
    }
    if (blanks_left > 0) {
      prefix.push_back(RnntMove::kBlank);
      self(self, blanks_left - 1, emits_left);
      prefix.pop_back();
    }
  };
  recurse(recurse, num_frames - 1, num_labels);
  return paths;
}

}  // namespace ctcguide
