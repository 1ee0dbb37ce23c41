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

#include "ctcguide/pruning.h"

#include <algorithm>
#include <string>

#include "ctcguide/error.h"

namespace ctcguide {

ConfidenceRegion BuildConfidenceRegions(std::span<const int32_t> trace,
                                        int32_t strip_width,
                                        std::optional<int32_t> height,
                                        int32_t num_labels) {
  if (trace.empty()) throw Error("confidence region needs a non-empty trace");
  if (strip_width < 1) throw ConfigError("strip width must be >= 1");
  if (height && *height < 1) throw ConfigError("region height must be >= 1");
  if (num_labels < 0) throw Error("negative label count");

  ConfidenceRegion region;
  region.strip_width = strip_width;
  region.height = height;
  region.num_frames = static_cast<int32_t>(trace.size());
  region.num_labels = num_labels;

  const int32_t num_frames = region.num_frames;
  for (int32_t t_begin = 0; t_begin < num_frames; t_begin += strip_width) {
    RegionStrip strip;
    strip.t_begin = t_begin;
    strip.t_end = std::min(num_frames, t_begin + strip_width);
    if (!height) {
      strip.u_lo = 0;
      strip.u_hi = num_labels;
    } else {
      int64_t sum = 0;
      for (int32_t t = strip.t_begin; t < strip.t_end; ++t) sum += trace[t];
      const int64_t n = strip.NumFrames();
      // floor(sum / n + 1/2) in integers.
      const int32_t centroid = static_cast<int32_t>((2 * sum + n) / (2 * n));
      const int32_t below = (*height - 1) / 2;
      const int32_t above = *height - 1 - below;
      strip.u_lo = std::clamp(centroid - below, 0, num_labels);
      strip.u_hi = std::clamp(centroid + above, 0, num_labels);
    }
    region.strips.push_back(strip);
  }

  auto &strips = region.strips;
  for (size_t i = 1; i < strips.size(); ++i) {
    strips[i].u_lo = std::max(strips[i].u_lo, strips[i - 1].u_lo);
    strips[i].u_hi = std::max(strips[i].u_hi, strips[i - 1].u_hi);
  }
  strips.front().u_lo = 0;
  strips.back().u_hi = num_labels;
  for (size_t i = 1; i < strips.size(); ++i)
    strips[i].u_lo = std::min(strips[i].u_lo, strips[i - 1].u_hi);
  return region;
}

ConfidenceRegion BuildConfidenceRegions(const CtcAlignment &align,
                                        int32_t strip_width,
                                        std::optional<int32_t> height,
                                        int32_t num_labels) {
  return BuildConfidenceRegions(align.trace, strip_width, height, num_labels);
}

bool RegionAdmitsPath(const ConfidenceRegion &region) {
  const int32_t num_frames = region.num_frames;
  const int32_t num_labels = region.num_labels;
  if (num_frames < 1 || region.strips.empty()) return false;
  std::vector<char> prev(num_labels + 1, 0), cur(num_labels + 1, 0);
  for (int32_t t = 0; t < num_frames; ++t) {
    for (int32_t u = 0; u <= num_labels; ++u) {
      bool reach = false;
      if (region.Contains(t, u)) {
        if (t == 0 && u == 0) reach = true;
        if (t > 0 && prev[u]) reach = true;
        if (u > 0 && cur[u - 1]) reach = true;
      }
      cur[u] = reach;
    }
    std::swap(prev, cur);
  }
  return prev[num_labels];
}

int64_t PrunedCellCount(const ConfidenceRegion &region) {
  int64_t cells = 0;
  for (const RegionStrip &s : region.strips)
    cells += static_cast<int64_t>(s.NumFrames()) * s.Height();
  return cells;
}

PrunedLossResult PrunedRnntLoss(const JointSupplier &supplier,
                                const LabelSequence &labels,
                                const ConfidenceRegion &region) {
  const int32_t num_frames = supplier.NumFrames();
  const int32_t num_labels = supplier.NumLabels();
  const int32_t num_symbols = supplier.NumSymbols();
  if (static_cast<int32_t>(labels.size()) != num_labels)
    throw ShapeError("labels do not match lattice U");
  if (region.num_frames != num_frames || region.num_labels != num_labels)
    throw ShapeError("region is " + std::to_string(region.num_frames) + "x" +
                     std::to_string(region.num_labels) + ", lattice is " +
                     std::to_string(num_frames) + "x" +
                     std::to_string(num_labels));
  ValidateLabels(labels, num_symbols - 1);
  if (num_frames < 1)
    throw InfeasibleAlignment("transducer lattice needs at least one frame");

  // Compact storage: frame t owns slots offset[t] .. offset[t+1]-1, one per
  // label position in its band.
  std::vector<int32_t> lo(num_frames), hi(num_frames);
  std::vector<int64_t> offset(num_frames + 1, 0);
  for (int32_t t = 0; t < num_frames; ++t) {
    const RegionStrip &s = region.StripOf(t);
    if (s.u_lo < 0 || s.u_hi > num_labels || s.u_lo > s.u_hi)
      throw Error("malformed confidence region band");
    lo[t] = s.u_lo;
    hi[t] = s.u_hi;
    offset[t + 1] = offset[t] + (hi[t] - lo[t] + 1);
  }
  const int64_t num_cells = offset[num_frames];
  std::vector<double> blank(num_cells), emit(num_cells, kLogZero);
  auto slot = [&](int32_t t, int32_t u) { return offset[t] + (u - lo[t]); };
  auto inside = [&](int32_t t, int32_t u) {
    return t >= 0 && t < num_frames && u >= lo[t] && u <= hi[t];
  };

  PrunedLossResult result;
  std::vector<double> buffer;
  for (const RegionStrip &s : region.strips) {
    const int32_t height = s.Height();
    buffer.resize(static_cast<size_t>(s.NumFrames()) * height * num_symbols);
    supplier.ComputeBlock(s.t_begin, s.t_end, s.u_lo, s.u_hi + 1, buffer);
    result.cells_evaluated += static_cast<int64_t>(s.NumFrames()) * height;
    for (int32_t t = s.t_begin; t < s.t_end; ++t) {
      for (int32_t u = s.u_lo; u <= s.u_hi; ++u) {
        const double *fiber =
            buffer.data() +
            (static_cast<size_t>(t - s.t_begin) * height + (u - s.u_lo)) *
                num_symbols;
        blank[slot(t, u)] = fiber[kBlankId];
        if (u < num_labels) emit[slot(t, u)] = fiber[labels[u]];
      }
    }
  }

  std::vector<double> alpha(num_cells), beta(num_cells);
  for (int32_t t = 0; t < num_frames; ++t) {
    for (int32_t u = lo[t]; u <= hi[t]; ++u) {
      double a = kLogZero;
      if (t == 0 && u == 0)
        a = 0.0;
      else if (t > 0 && inside(t - 1, u))
        a = alpha[slot(t - 1, u)] + blank[slot(t - 1, u)];
      if (u > lo[t])
        a = LogAdd(a, alpha[slot(t, u - 1)] + emit[slot(t, u - 1)]);
      alpha[slot(t, u)] = a;
    }
  }
  const int32_t last = num_frames - 1;
  double log_like = kLogZero;
  if (inside(last, num_labels))
    log_like = alpha[slot(last, num_labels)] + blank[slot(last, num_labels)];
  if (log_like == kLogZero) throw Error("empty confidence region");

  for (int32_t t = last; t >= 0; --t) {
    for (int32_t u = hi[t]; u >= lo[t]; --u) {
      if (t == last && u == num_labels) {
        beta[slot(t, u)] = blank[slot(t, u)];
        continue;
      }
      double b = kLogZero;
      if (t < last && inside(t + 1, u))
        b = blank[slot(t, u)] + beta[slot(t + 1, u)];
      if (u < hi[t]) b = LogAdd(b, emit[slot(t, u)] + beta[slot(t, u + 1)]);
      beta[slot(t, u)] = b;
    }
  }

  result.loss = -log_like;
  result.grad.blank = Matrix::Zero(num_frames, num_labels + 1);
  result.grad.emit = Matrix::Zero(num_frames, num_labels);
  for (int32_t t = 0; t < num_frames; ++t) {
    for (int32_t u = lo[t]; u <= hi[t]; ++u) {
      const double a = alpha[slot(t, u)];
      double next = kLogZero;
      if (t < last) {
        if (inside(t + 1, u)) next = beta[slot(t + 1, u)];
      } else if (u == num_labels) {
        next = 0.0;
      }
      double occ = a + blank[slot(t, u)] + next - log_like;
      if (occ != kLogZero) result.grad.blank(t, u) = -std::exp(occ);
      if (u < hi[t]) {
        occ = a + emit[slot(t, u)] + beta[slot(t, u + 1)] - log_like;
        if (occ != kLogZero) result.grad.emit(t, u) = -std::exp(occ);
      }
    }
  }
  return result;
}

}  // namespace ctcguide
