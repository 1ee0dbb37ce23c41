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

#ifndef CTCGUIDE_PRUNING_H_
#define CTCGUIDE_PRUNING_H_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ctcguide/ctc.h"
#include "ctcguide/rnnt.h"

namespace ctcguide {

// One strip of a confidence region: frames [t_begin, t_end) may only visit
// label positions u_lo..u_hi (inclusive).
struct RegionStrip {
  int32_t t_begin = 0;
  int32_t t_end = 0;
  int32_t u_lo = 0;
  int32_t u_hi = 0;

  int32_t NumFrames() const { return t_end - t_begin; }
  int32_t Height() const { return u_hi - u_lo + 1; }
  bool operator==(const RegionStrip &) const = default;
};

// Bands of allowed label positions, one per time strip, tiling all frames.
struct ConfidenceRegion {
  std::vector<RegionStrip> strips;
  int32_t strip_width = 0;
  std::optional<int32_t> height;  // nullopt: unbounded
  int32_t num_frames = 0;
  int32_t num_labels = 0;  // U

  const RegionStrip &StripOf(int32_t t) const {
    return strips[t / strip_width];
  }
  bool Contains(int32_t t, int32_t u) const {
    const RegionStrip &s = StripOf(t);
    return u >= s.u_lo && u <= s.u_hi;
  }
};

// Builds a region around a CTC alignment trace (u_t per frame). Each
// strip's centroid is the mean trace value rounded half up; the band spans
// floor((h-1)/2) below and ceil((h-1)/2) above it, clamped to [0, U].
// Afterwards the bands are made monotone, the first band is extended down
// to 0 and the last up to U, and each band is lowered until it overlaps
// the previous one, so at least one lattice path always survives. The
// repair can leave a band taller than the requested height.
ConfidenceRegion BuildConfidenceRegions(std::span<const int32_t> trace,
                                        int32_t strip_width,
                                        std::optional<int32_t> height,
                                        int32_t num_labels);
ConfidenceRegion BuildConfidenceRegions(const CtcAlignment &align,
                                        int32_t strip_width,
                                        std::optional<int32_t> height,
                                        int32_t num_labels);

// Whether some monotone path from (0, 0) to (T-1, U) stays in the region.
bool RegionAdmitsPath(const ConfidenceRegion &region);

// Number of lattice nodes inside the region.
int64_t PrunedCellCount(const ConfidenceRegion &region);

struct PrunedLossResult {
  double loss = 0.0;
  LatticeGradient grad;  // zero outside the region
  int64_t cells_evaluated = 0;  // fibers requested from the supplier
};

// Transducer loss over the paths that stay inside the region. Only in-region
// fibers are requested from the supplier. Throws Error("empty confidence
// region") when no path survives.
PrunedLossResult PrunedRnntLoss(const JointSupplier &supplier,
                                const LabelSequence &labels,
                                const ConfidenceRegion &region);

}  // namespace ctcguide

#endif  // CTCGUIDE_PRUNING_H_
