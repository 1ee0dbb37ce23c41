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

// Exhaustive-enumeration reference implementations. Exponential in the
// lattice size; only meant for tiny instances in tests and `verify`.
// Nothing here shares code with the dynamic programs it checks.

#ifndef CTCGUIDE_ORACLE_H_
#define CTCGUIDE_ORACLE_H_

#include <cstdint>
#include <random>
#include <vector>

#include "ctcguide/ctc.h"
#include "ctcguide/decode.h"
#include "ctcguide/pruning.h"
#include "ctcguide/rnnt.h"

namespace ctcguide::oracle {

struct CtcEnumeration {
  double log_like = kLogZero;          // log sum over admissible paths
  double best_log_prob = kLogZero;     // max over admissible paths
  std::vector<int32_t> best_path;      // first maximizer in lexicographic order
  int64_t num_admissible = 0;
};

// Visits all (V+1)^T symbol strings and keeps those collapsing to labels.
CtcEnumeration EnumerateCtc(const PosteriorGrid &grid,
                            const LabelSequence &labels);

// log sum over all transducer alignments, in linear-probability order.
double RnntLogLikeByEnumeration(const JointGrid &grid,
                                const LabelSequence &labels);

// Same, restricted to paths whose every visited node lies in the region.
double PrunedRnntLogLikeByEnumeration(const JointGrid &grid,
                                      const LabelSequence &labels,
                                      const ConfidenceRegion &region);

struct MapEnumeration {
  LabelSequence best;
  double best_log_prob = kLogZero;
  // Probability mass of all sequences up to the length bound. If the best
  // probability exceeds 1 - covered_mass no longer sequence can beat it.
  double covered_mass = 0.0;

  bool Certified() const { return std::exp(best_log_prob) > 1.0 - covered_mass; }
};

// Scores every label sequence of length <= max_length under the scorer by
// explicit alignment enumeration. Ties go to the lexicographically smaller
// sequence.
MapEnumeration MapByEnumeration(const TransducerScorer &scorer,
                                int32_t max_length);

// Random normalized grids for property tests, drawn from N(0, scale) logits.
PosteriorGrid RandomPosteriorGrid(int32_t num_frames, int32_t vocab_size,
                                  std::mt19937_64 *rng, double scale = 1.0);
JointGrid RandomJointGrid(int32_t num_frames, int32_t num_labels,
                          int32_t vocab_size, std::mt19937_64 *rng,
                          double scale = 1.0);
LabelSequence RandomLabels(int32_t length, int32_t vocab_size,
                           std::mt19937_64 *rng);

}  // namespace ctcguide::oracle

#endif  // CTCGUIDE_ORACLE_H_
