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

#include "ctcguide/decode.h"

#include <algorithm>
#include <map>

#include "ctcguide/error.h"
#include "spdlog/spdlog.h"

namespace ctcguide {
namespace {

bool Better(const Hypothesis &a, const Hypothesis &b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

using HypMap = std::map<LabelSequence, Hypothesis>;

void Merge(HypMap *set, Hypothesis hyp) {
  auto it = set->find(hyp.tokens);
  if (it == set->end()) {
    LabelSequence key = hyp.tokens;
    set->emplace(std::move(key), std::move(hyp));
  } else {
    it->second.score = LogAdd(it->second.score, hyp.score);
  }
}

std::vector<Hypothesis> SortedTop(HypMap set, size_t limit) {
  std::vector<Hypothesis> out;
  out.reserve(set.size());
  for (auto &[key, hyp] : set) out.push_back(std::move(hyp));
  std::sort(out.begin(), out.end(), Better);
  if (out.size() > limit) out.resize(limit);
  return out;
}

bool Presented(const FrameKeepMask *mask, int32_t t) {
  return mask == nullptr || mask->keep[t];
}

void CheckMask(const TransducerScorer &scorer, const FrameKeepMask *mask) {
  if (mask && mask->NumFrames() != scorer.NumFrames())
    throw ShapeError("decode mask covers " + std::to_string(mask->NumFrames()) +
                     " frames, scorer has " + std::to_string(scorer.NumFrames()));
}

}  // namespace

RowVector ModelScorer::InitialState() const {
  return PredictorStep(params_, RowVector::Zero(params_.PredDim()), kBlankId);
}

RowVector ModelScorer::NextState(const RowVector &state, int32_t token) const {
  return PredictorStep(params_, state, token);
}

void ModelScorer::Fiber(int32_t t, const RowVector &state,
                        std::span<double> out) const {
  RowVector pred = state * params_.joiner_pred;
  JoinerFiber(enc_proj_.row(t).data(), pred.data(), NumSymbols(), out);
}

Hypothesis GreedyDecode(const TransducerScorer &scorer,
                        const FrameKeepMask *mask, DecodeStats *stats) {
  CheckMask(scorer, mask);
  DecodeStats local;
  if (!stats) stats = &local;
  Hypothesis hyp;
  hyp.state = scorer.InitialState();
  std::vector<double> fiber(scorer.NumSymbols());
  for (int32_t t = 0; t < scorer.NumFrames(); ++t) {
    if (!Presented(mask, t)) continue;
    ++stats->decoder_steps;
    for (int32_t emits = 0;; ++emits) {
      scorer.Fiber(t, hyp.state, fiber);
      ++stats->joiner_evals;
      const int32_t best = ArgMax(fiber);
      if (best == kBlankId || emits == kMaxEmitsPerFrame) {
        if (best != kBlankId) {
          ++stats->cap_hits;
          spdlog::debug("greedy decode hit the emission cap at frame {}", t);
        }
        hyp.score += fiber[kBlankId];
        break;
      }
      hyp.score += fiber[best];
      hyp.tokens.push_back(best);
      hyp.state = scorer.NextState(hyp.state, best);
    }
  }
  return hyp;
}

std::vector<Hypothesis> BeamSearch(const TransducerScorer &scorer,
                                   int32_t beam_size,
                                   const FrameKeepMask *mask,
                                   DecodeStats *stats) {
  if (beam_size < 1) throw ConfigError("beam size must be >= 1");
  CheckMask(scorer, mask);
  DecodeStats local;
  if (!stats) stats = &local;
  const size_t beam = static_cast<size_t>(beam_size);
  const int32_t num_symbols = scorer.NumSymbols();

  Hypothesis start;
  start.state = scorer.InitialState();
  std::vector<Hypothesis> hyps = {start};
  std::vector<double> fiber(num_symbols);

  for (int32_t t = 0; t < scorer.NumFrames(); ++t) {
    if (!Presented(mask, t)) continue;
    ++stats->decoder_steps;
    HypMap next_frame;
    std::vector<Hypothesis> wave = std::move(hyps);
    for (int32_t round = 0; !wave.empty(); ++round) {
      HypMap next_wave;
      for (const Hypothesis &hyp : wave) {
        scorer.Fiber(t, hyp.state, fiber);
        ++stats->joiner_evals;
        Hypothesis advanced = hyp;
        advanced.score += fiber[kBlankId];
        Merge(&next_frame, std::move(advanced));
        if (round == kMaxEmitsPerFrame) {
          ++stats->cap_hits;
          continue;
        }
        for (int32_t k = 1; k < num_symbols; ++k) {
          Hypothesis grown;
          grown.tokens = hyp.tokens;
          grown.tokens.push_back(k);
          grown.score = hyp.score + fiber[k];
          grown.state = scorer.NextState(hyp.state, k);
          Merge(&next_wave, std::move(grown));
        }
      }
      wave = SortedTop(std::move(next_wave), beam);
      // Extensions only lose probability mass, so a candidate that cannot
      // beat the current beam-th finished score is dropped.
      if (next_frame.size() >= beam) {
        std::vector<double> scores;
        for (const auto &[key, h] : next_frame) scores.push_back(h.score);
        std::nth_element(scores.begin(), scores.begin() + (beam - 1),
                         scores.end(), std::greater<double>());
        const double floor = scores[beam - 1];
        std::erase_if(wave, [&](const Hypothesis &h) { return !(h.score > floor); });
      }
    }
    hyps = SortedTop(std::move(next_frame), beam);
  }
  std::sort(hyps.begin(), hyps.end(), Better);
  return hyps;
}

DecodeResult DecodeWithFrameSkipping(const ToyModelParams &params,
                                     const EmbeddingSequence &x,
                                     const DecodeConfig &config) {
  if (config.beam_size < 1) throw ConfigError("beam size must be >= 1");
  EncoderOutput enc = Encode(params, x, {config.mode, config.threshold, false});
  DecodeResult result;
  result.num_frames = static_cast<int32_t>(x.rows());
  result.kept_frames = enc.split.mask.kept_count;
  ModelScorer scorer(params, std::move(enc.enc_proj));
  if (config.greedy) {
    result.best = GreedyDecode(scorer, nullptr, &result.stats);
  } else {
    result.nbest = BeamSearch(scorer, config.beam_size, nullptr, &result.stats);
    result.best = result.nbest.front();
  }
  return result;
}

EditCounts EditDistance(const LabelSequence &ref, const LabelSequence &hyp) {
  const size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<int64_t>> d(n + 1, std::vector<int64_t>(m + 1));
  for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int64_t>(i);
  for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i)
    for (size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])});
  EditCounts counts;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        d[i][j] == d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1])) {
      counts.substitutions += ref[i - 1] != hyp[j - 1];
      --i;
      --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

double EvalReport::TokenErrorRate() const {
  if (ref_tokens == 0) return edits.Total() == 0 ? 0.0 : 1.0;
  return static_cast<double>(edits.Total()) / ref_tokens;
}

double EvalReport::SequenceAccuracy() const {
  return utterances == 0 ? 0.0
                         : static_cast<double>(correct_sequences) / utterances;
}

double EvalReport::DeletionRate() const {
  return ref_tokens == 0 ? 0.0
                         : static_cast<double>(edits.deletions) / ref_tokens;
}

double EvalReport::KeptFraction() const {
  return frames == 0 ? 1.0 : static_cast<double>(kept_frames) / frames;
}

EvalReport Evaluate(const ToyModelParams &params,
                    std::span<const Utterance> data,
                    const DecodeConfig &config) {
  EvalReport report;
  for (const Utterance &utt : data) {
    DecodeResult r = DecodeWithFrameSkipping(params, utt.frames, config);
    EditCounts e = EditDistance(utt.labels, r.best.tokens);
    ++report.utterances;
    report.correct_sequences += r.best.tokens == utt.labels;
    report.ref_tokens += static_cast<int64_t>(utt.labels.size());
    report.edits.substitutions += e.substitutions;
    report.edits.deletions += e.deletions;
    report.edits.insertions += e.insertions;
    report.frames += r.num_frames;
    report.kept_frames += r.kept_frames;
    report.stats.decoder_steps += r.stats.decoder_steps;
    report.stats.joiner_evals += r.stats.joiner_evals;
    report.stats.cap_hits += r.stats.cap_hits;
    report.hypotheses.push_back(std::move(r.best.tokens));
  }
  return report;
}

}  // namespace ctcguide
