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

#ifndef CTCGUIDE_RNNT_H_
#define CTCGUIDE_RNNT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "ctcguide/ctc.h"
#include "ctcguide/numerics.h"

namespace ctcguide {

// Transducer log-probabilities over the T x (U+1) lattice. Entry (t, u, k)
// is log p(k | x_t, l_{<=u}); k = kBlankId is the blank. Laid out with k
// fastest, then u, then t.
class JointGrid {
 public:
  JointGrid() = default;
  JointGrid(int32_t num_frames, int32_t num_labels, int32_t num_symbols,
            double fill = 0.0);

  int32_t NumFrames() const { return num_frames_; }
  // U; the lattice has U+1 label positions.
  int32_t NumLabels() const { return num_labels_; }
  int32_t NumSymbols() const { return num_symbols_; }

  double &operator()(int32_t t, int32_t u, int32_t k) {
    return data_[Offset(t, u) + k];
  }
  double operator()(int32_t t, int32_t u, int32_t k) const {
    return data_[Offset(t, u) + k];
  }
  std::span<double> Fiber(int32_t t, int32_t u) {
    return {data_.data() + Offset(t, u), static_cast<size_t>(num_symbols_)};
  }
  std::span<const double> Fiber(int32_t t, int32_t u) const {
    return {data_.data() + Offset(t, u), static_cast<size_t>(num_symbols_)};
  }
  std::span<double> Data() { return data_; }
  std::span<const double> Data() const { return data_; }

  // True if every (t, u) fiber log-sums to 0 within tol.
  bool IsNormalized(double tol = 1e-9) const;

 private:
  size_t Offset(int32_t t, int32_t u) const {
    return (static_cast<size_t>(t) * (num_labels_ + 1) + u) * num_symbols_;
  }

  int32_t num_frames_ = 0;
  int32_t num_labels_ = 0;
  int32_t num_symbols_ = 0;
  std::vector<double> data_;
};

// Produces lattice fibers on demand, one rectangular block at a time, so
// callers never need the whole T x (U+1) x (V+1) array resident. A supplier
// must be pure: the same block always yields the same values.
class JointSupplier {
 public:
  virtual ~JointSupplier() = default;

  virtual int32_t NumFrames() const = 0;
  virtual int32_t NumLabels() const = 0;
  virtual int32_t NumSymbols() const = 0;

  // Writes the fibers of frames [t_begin, t_end) x label positions
  // [u_begin, u_end) into out, k fastest, then u, then t.
  virtual void ComputeBlock(int32_t t_begin, int32_t t_end, int32_t u_begin,
                            int32_t u_end, std::span<double> out) const = 0;
};

// Serves blocks out of a materialized grid.
class GridJointSupplier : public JointSupplier {
 public:
  explicit GridJointSupplier(const JointGrid &grid) : grid_(grid) {}

  int32_t NumFrames() const override { return grid_.NumFrames(); }
  int32_t NumLabels() const override { return grid_.NumLabels(); }
  int32_t NumSymbols() const override { return grid_.NumSymbols(); }
  void ComputeBlock(int32_t t_begin, int32_t t_end, int32_t u_begin,
                    int32_t u_end, std::span<double> out) const override;

 private:
  const JointGrid &grid_;
};

// Gradient of a transducer loss w.r.t. the grid. Only the blank entry and
// the next-label entry of each fiber can be nonzero, so it is stored
// compactly.
struct LatticeGradient {
  Matrix blank;  // T x (U+1), d loss / d log_probs(t, u, blank)
  Matrix emit;   // T x U,     d loss / d log_probs(t, u, l_{u+1})

  // Expands to the full T x (U+1) x (V+1) layout of a JointGrid.
  JointGrid ToDense(const LabelSequence &labels, int32_t num_symbols) const;
};

struct RnntLossResult {
  double loss = 0.0;
  LatticeGradient grad;
};

enum class RnntMove : uint8_t { kEmit, kBlank };

// T blanks and U emits; starts at (t=0, u=0) and ends with the blank that
// consumes the last frame at label position U.
using RnntAlignment = std::vector<RnntMove>;

// Whole-lattice forward-backward.
RnntLossResult RnntLoss(const JointGrid &grid, const LabelSequence &labels);

// Same loss and gradient, computed strip by strip along the time axis.
// The forward pass keeps only the alpha values crossing strip boundaries;
// the backward pass re-requests each strip's fibers from the supplier.
RnntLossResult RnntLossStripwise(const JointSupplier &supplier,
                                 const LabelSequence &labels,
                                 int32_t strip_width);

// Sum of the edge log-probs along one alignment path.
double RnntPathLogProb(const JointGrid &grid, const RnntAlignment &path,
                       const LabelSequence &labels);

// Every valid alignment for a T x U lattice; there are C(T+U-1, U).
// Throws if that count exceeds one million.
std::vector<RnntAlignment> EnumerateRnntPaths(int32_t num_frames,
                                              int32_t num_labels);

// C(n, k) as a double.
double BinomialCoefficient(int64_t n, int64_t k);

}  // namespace ctcguide

#endif  // CTCGUIDE_RNNT_H_
