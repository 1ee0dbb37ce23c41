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

#include "ctcguide/bench.h"

#include <algorithm>
#include <chrono>
#include <random>

#include <fmt/format.h>

#include "ctcguide/config.h"
#include "ctcguide/error.h"
#include "ctcguide/pruning.h"
#include "ctcguide/rnnt.h"

namespace ctcguide {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double Quantile(const std::vector<double> &sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int64_t StackMacs(const std::vector<DenseLayer> &layers) {
  int64_t macs = 0;
  for (const DenseLayer &l : layers) macs += l.MacsPerFrame();
  return macs;
}

// One decode of one utterance, split into its encoder and decoder halves.
struct DecodePass {
  double encoder_seconds = 0.0;
  double decoder_seconds = 0.0;
};

DecodePass DecodeOnce(const ToyModelParams &params, const Utterance &utt,
                      ReductionMode mode, const BenchOptions &options,
                      ModeCounters *counters) {
  DecodePass pass;
  auto start = Clock::now();
  EncoderOutput enc = Encode(params, utt.frames, {mode, options.threshold, false});
  pass.encoder_seconds = Seconds(start);

  start = Clock::now();
  ModelScorer scorer(params, std::move(enc.enc_proj));
  DecodeStats stats;
  if (options.greedy) {
    GreedyDecode(scorer, nullptr, &stats);
  } else {
    BeamSearch(scorer, options.beam_size, nullptr, &stats);
  }
  pass.decoder_seconds = Seconds(start);

  if (counters != nullptr) {
    ++counters->utterances;
    counters->frames += utt.frames.rows();
    counters->kept_frames += enc.split.mask.kept_count;
    counters->decoder_steps += stats.decoder_steps;
    counters->joiner_evals += stats.joiner_evals;
    counters->encoder_macs += enc.split.encoder_macs;
  }
  return pass;
}

std::string Ratio(int64_t num, int64_t den) {
  return den == 0 ? "nan" : FormatDouble(static_cast<double>(num) / den);
}

std::string Ratio(double num, double den) {
  return den == 0.0 ? "nan" : FormatDouble(num / den);
}

}  // namespace

TimingStats Summarize(std::vector<double> samples) {
  TimingStats s;
  s.samples = samples;
  std::sort(samples.begin(), samples.end());
  s.median = Quantile(samples, 0.5);
  s.q1 = Quantile(samples, 0.25);
  s.q3 = Quantile(samples, 0.75);
  return s;
}

TimingStats TimeRepeated(const std::function<void()> &fn, int32_t warmup,
                         int32_t repeats) {
  if (warmup < 0 || repeats < 1)
    throw ConfigError("timing needs warmup >= 0 and repeats >= 1");
  for (int32_t i = 0; i < warmup; ++i) fn();
  std::vector<double> samples;
  for (int32_t i = 0; i < repeats; ++i) {
    const auto start = Clock::now();
    fn();
    samples.push_back(Seconds(start));
  }
  return Summarize(std::move(samples));
}

double ModeCounters::KeptFraction() const {
  return frames == 0 ? 1.0 : static_cast<double>(kept_frames) / frames;
}

ModeCounters CountDecode(const ToyModelParams &params,
                         std::span<const Utterance> data, ReductionMode mode,
                         const BenchOptions &options) {
  ModeCounters counters;
  counters.mode = mode;
  counters.shared_macs_per_frame = StackMacs(params.shared);
  counters.rest_macs_per_frame = StackMacs(params.rest);
  for (const Utterance &utt : data) DecodeOnce(params, utt, mode, options, &counters);
  return counters;
}

std::vector<ModeBench> BenchDecode(const ToyModelParams &params,
                                   std::span<const Utterance> data,
                                   std::span<const ReductionMode> modes,
                                   const BenchOptions &options) {
  if (options.warmup < 0 || options.repeats < 1)
    throw ConfigError("bench needs warmup >= 0 and repeats >= 1");
  std::vector<ModeBench> rows;
  for (ReductionMode mode : modes) {
    ModeBench row;
    row.counters = CountDecode(params, data, mode, options);
    std::vector<double> enc_samples, dec_samples;
    for (int32_t run = 0; run < options.warmup + options.repeats; ++run) {
      double enc = 0.0, dec = 0.0;
      for (const Utterance &utt : data) {
        const DecodePass pass = DecodeOnce(params, utt, mode, options, nullptr);
        enc += pass.encoder_seconds;
        dec += pass.decoder_seconds;
      }
      if (run >= options.warmup) {
        enc_samples.push_back(enc);
        dec_samples.push_back(dec);
      }
    }
    row.encoder = Summarize(std::move(enc_samples));
    row.decoder = Summarize(std::move(dec_samples));
    rows.push_back(std::move(row));
  }
  return rows;
}

LossBench BenchLoss(const LossBenchConfig &config, int32_t warmup,
                    int32_t repeats) {
  if (config.frames < 1 || config.labels < 0 || config.vocab < 1)
    throw ConfigError("loss bench needs T >= 1, U >= 0, V >= 1");
  std::mt19937_64 rng(config.seed);
  const int32_t k = config.vocab + 1;
  const Matrix enc_proj = RandomMatrix(config.frames, k, 1.0, &rng);
  const Matrix pred_proj = RandomMatrix(config.labels + 1, k, 1.0, &rng);
  std::uniform_int_distribution<int32_t> token(1, config.vocab);
  LabelSequence labels(config.labels);
  for (int32_t &l : labels) l = token(rng);
  std::vector<int32_t> trace(config.frames);
  for (int32_t t = 0; t < config.frames; ++t)
    trace[t] = static_cast<int32_t>(static_cast<int64_t>(t + 1) * config.labels /
                                    config.frames);
  const ConfidenceRegion region =
      BuildConfidenceRegions(trace, config.strip_width, config.height, config.labels);

  LossBench bench;
  bench.config = config;
  bench.region_cells = PrunedCellCount(region);
  bench.lattice_cells = static_cast<int64_t>(config.frames) * (config.labels + 1);
  {
    const ModelJointSupplier supplier(enc_proj, pred_proj);
    bench.full_loss = RnntLossStripwise(supplier, labels, config.strip_width).loss;
    bench.full_fiber_evals = supplier.fibers_computed();
  }
  {
    const ModelJointSupplier supplier(enc_proj, pred_proj);
    const PrunedLossResult r = PrunedRnntLoss(supplier, labels, region);
    bench.pruned_loss = r.loss;
    bench.pruned_cells = supplier.fibers_computed();
  }
  bench.full = TimeRepeated(
      [&] {
        const ModelJointSupplier supplier(enc_proj, pred_proj);
        RnntLossStripwise(supplier, labels, config.strip_width);
      },
      warmup, repeats);
  bench.pruned = TimeRepeated(
      [&] {
        const ModelJointSupplier supplier(enc_proj, pred_proj);
        PrunedRnntLoss(supplier, labels, region);
      },
      warmup, repeats);
  return bench;
}

std::string DecodeCountersCsv(const std::vector<ModeBench> &rows) {
  std::string out =
      "mode,utterances,frames,kept_frames,kept_fraction,decoder_steps,"
      "joiner_evals,encoder_macs,decoder_step_ratio,joiner_eval_ratio,"
      "encoder_mac_ratio,analytic_flops_ratio\n";
  const ModeCounters *base = nullptr;
  for (const ModeBench &row : rows)
    if (row.counters.mode == ReductionMode::kNone) base = &row.counters;
  for (const ModeBench &row : rows) {
    const ModeCounters &c = row.counters;
    const double shared = static_cast<double>(c.shared_macs_per_frame);
    const double rest = static_cast<double>(c.rest_macs_per_frame);
    const double k = c.mode == ReductionMode::kEncoder ? c.KeptFraction() : 1.0;
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       ReductionModeName(c.mode), c.utterances, c.frames,
                       c.kept_frames, FormatDouble(c.KeptFraction()),
                       c.decoder_steps, c.joiner_evals, c.encoder_macs,
                       base ? Ratio(c.decoder_steps, base->decoder_steps) : "nan",
                       base ? Ratio(c.joiner_evals, base->joiner_evals) : "nan",
                       base ? Ratio(c.encoder_macs, base->encoder_macs) : "nan",
                       Ratio(shared + rest * k, shared + rest));
  }
  return out;
}

std::string DecodeTimingCsv(const std::vector<ModeBench> &rows) {
  std::string out =
      "mode,repeats,encoder_median_s,encoder_iqr_s,decoder_median_s,"
      "decoder_iqr_s,encoder_speedup,decoder_speedup\n";
  const ModeBench *base = nullptr;
  for (const ModeBench &row : rows)
    if (row.counters.mode == ReductionMode::kNone) base = &row;
  for (const ModeBench &row : rows) {
    out += fmt::format(
        "{},{},{:.9f},{:.9f},{:.9f},{:.9f},{},{}\n",
        ReductionModeName(row.counters.mode), row.encoder.samples.size(),
        row.encoder.median, row.encoder.Iqr(), row.decoder.median,
        row.decoder.Iqr(),
        base ? Ratio(base->encoder.median, row.encoder.median) : "nan",
        base ? Ratio(base->decoder.median, row.decoder.median) : "nan");
  }
  return out;
}

std::string LossCountersCsv(const LossBench &b) {
  std::string out =
      "frames,labels,vocab,height,strip_width,lattice_cells,full_fiber_evals,"
      "pruned_cells,region_cells,cell_ratio,full_loss,pruned_loss\n";
  out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", b.config.frames,
                     b.config.labels, b.config.vocab, b.config.height,
                     b.config.strip_width, b.lattice_cells, b.full_fiber_evals,
                     b.pruned_cells, b.region_cells,
                     Ratio(b.pruned_cells, b.lattice_cells),
                     FormatDouble(b.full_loss), FormatDouble(b.pruned_loss));
  return out;
}

std::string LossTimingCsv(const LossBench &b) {
  std::string out =
      "repeats,full_median_s,full_iqr_s,pruned_median_s,pruned_iqr_s,speedup\n";
  out += fmt::format("{},{:.9f},{:.9f},{:.9f},{:.9f},{}\n", b.full.samples.size(),
                     b.full.median, b.full.Iqr(), b.pruned.median, b.pruned.Iqr(),
                     Ratio(b.full.median, b.pruned.median));
  return out;
}

}  // namespace ctcguide
