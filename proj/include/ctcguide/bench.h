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

// Timing harness. Counters (frames, decoder steps, MACs, lattice cells)
// are exact and reproducible; wall times are reported as median and IQR
// over repeated single-threaded runs after warmup.

#ifndef CTCGUIDE_BENCH_H_
#define CTCGUIDE_BENCH_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctcguide/decode.h"
#include "ctcguide/model.h"

namespace ctcguide {

struct TimingStats {
  double median = 0.0;  // seconds
  double q1 = 0.0;
  double q3 = 0.0;
  std::vector<double> samples;

  double Iqr() const { return q3 - q1; }
};

// Quartiles by linear interpolation between order statistics.
TimingStats Summarize(std::vector<double> samples);

// Runs fn warmup times untimed, then repeats times timed.
TimingStats TimeRepeated(const std::function<void()> &fn, int32_t warmup,
                         int32_t repeats);

struct BenchOptions {
  int32_t warmup = 3;
  int32_t repeats = 11;
  double threshold = 0.9;
  int32_t beam_size = 8;
  bool greedy = false;
};

struct ModeCounters {
  ReductionMode mode = ReductionMode::kNone;
  int64_t utterances = 0;
  int64_t frames = 0;
  int64_t kept_frames = 0;
  int64_t decoder_steps = 0;
  int64_t joiner_evals = 0;
  int64_t encoder_macs = 0;
  int64_t shared_macs_per_frame = 0;
  int64_t rest_macs_per_frame = 0;

  double KeptFraction() const;
};

struct ModeBench {
  ModeCounters counters;
  TimingStats encoder;  // summed over the utterances of one pass
  TimingStats decoder;
};

// Encoder and decoder passes over data for each mode. Decoding uses the
// same path as DecodeWithFrameSkipping, split so the two halves can be
// timed separately.
std::vector<ModeBench> BenchDecode(const ToyModelParams &params,
                                   std::span<const Utterance> data,
                                   std::span<const ReductionMode> modes,
                                   const BenchOptions &options);

// Counters of one decode pass without timing.
ModeCounters CountDecode(const ToyModelParams &params,
                         std::span<const Utterance> data, ReductionMode mode,
                         const BenchOptions &options);

struct LossBenchConfig {
  int32_t frames = 400;
  int32_t labels = 100;
  int32_t vocab = 64;
  int32_t height = 25;
  int32_t strip_width = 8;
  uint64_t seed = 1;
};

struct LossBench {
  LossBenchConfig config;
  int64_t lattice_cells = 0;     // T * (U + 1)
  int64_t full_fiber_evals = 0;  // strip-wise loss; strips are fetched twice
  int64_t pruned_cells = 0;      // fibers computed by the pruned loss
  int64_t region_cells = 0;      // PrunedCellCount of the region
  double full_loss = 0.0;
  double pruned_loss = 0.0;
  TimingStats full;
  TimingStats pruned;
};

// Random joiner projections and a diagonal alignment trace.
LossBench BenchLoss(const LossBenchConfig &config, int32_t warmup,
                    int32_t repeats);

// CSV reports. Counter files contain no timings and are reproducible.
std::string DecodeCountersCsv(const std::vector<ModeBench> &rows);
std::string DecodeTimingCsv(const std::vector<ModeBench> &rows);
std::string LossCountersCsv(const LossBench &bench);
std::string LossTimingCsv(const LossBench &bench);

}  // namespace ctcguide

#endif  // CTCGUIDE_BENCH_H_
