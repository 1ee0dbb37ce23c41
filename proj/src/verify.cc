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

#include "ctcguide/verify.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ctcguide/config.h"
#include "ctcguide/ctc.h"
#include "ctcguide/error.h"
#include "ctcguide/model.h"
#include "ctcguide/oracle.h"
#include "ctcguide/pruning.h"
#include "ctcguide/reduction.h"
#include "ctcguide/rnnt.h"

namespace ctcguide {
namespace {

constexpr double kOracleTol = 1e-9;
constexpr double kExactTol = 1e-12;
constexpr double kGridGradTol = 1e-6;
constexpr double kModelGradTol = 1e-4;
constexpr double kGridFdStep = 1e-6;
constexpr double kModelFdStep = 1e-5;

struct CheckDef {
  std::string name;
  std::function<CheckResult(const VerifyOptions &)> run;
};

CheckResult Result(std::string name, double max_error, double tolerance) {
  CheckResult r;
  r.name = std::move(name);
  r.max_error = max_error;
  r.tolerance = tolerance;
  r.pass = std::isfinite(max_error) && max_error <= tolerance;
  return r;
}

// Distinct, reproducible stream per check and instance.
std::mt19937_64 Rng(uint64_t seed, uint64_t stream) {
  std::seed_seq seq{seed, stream};
  return std::mt19937_64(seq);
}

void MaybeCorrupt(const VerifyOptions &options, const std::string &name,
                  std::span<double> grad) {
  if (options.corrupt == name && !grad.empty()) grad[0] += 1e-2 + std::abs(grad[0]);
}

double MaxAbsDiff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double MaxAbsDiff(const LatticeGradient &a, const LatticeGradient &b) {
  return std::max(MaxAbsDiff(AsSpan(a.blank), AsSpan(b.blank)),
                  MaxAbsDiff(AsSpan(a.emit), AsSpan(b.emit)));
}

std::vector<int32_t> RandomTrace(int32_t num_frames, int32_t num_labels,
                                 std::mt19937_64 *rng) {
  std::vector<int32_t> steps(num_frames, 0);
  for (int32_t i = 0; i < num_labels; ++i) steps[i] = 1;
  std::shuffle(steps.begin(), steps.end(), *rng);
  std::vector<int32_t> trace(num_frames);
  int32_t u = 0;
  for (int32_t t = 0; t < num_frames; ++t) trace[t] = (u += steps[t]);
  return trace;
}

JointGrid GridFromSpan(std::span<const double> p, int32_t t, int32_t u, int32_t k) {
  JointGrid g(t, u, k);
  std::copy(p.begin(), p.end(), g.Data().begin());
  return g;
}

CheckResult CtcGradient(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 11);
  double worst = 0.0;
  for (const auto &[frames, labels] :
       std::vector<std::pair<int32_t, LabelSequence>>{
           {1, {}}, {3, {1}}, {4, {2, 3}}, {6, {1, 1, 2}}, {9, {3, 1, 2, 2}}}) {
    const PosteriorGrid grid = oracle::RandomPosteriorGrid(frames, 3, &rng);
    Matrix analytic = CtcLoss(grid, labels).grad;
    MaybeCorrupt(options, "ctc.gradient", AsSpan(analytic));
    auto f = [&](std::span<const double> p) {
      PosteriorGrid g{Eigen::Map<const Matrix>(p.data(), grid.NumFrames(),
                                               grid.NumSymbols())};
      return CtcLoss(g, labels).loss;
    };
    worst = std::max(worst, RelativeError(AsSpan(analytic),
                                          FiniteDifferenceGradient(
                                              f, AsSpan(grid.log_post), kGridFdStep)));
  }
  return Result("ctc.gradient", worst, kGridGradTol);
}

// The Viterbi path must be an enumeration maximizer and collapse to the
// labels; its trace must count the labels emitted so far.
CheckResult CtcAlignmentCheck(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 12);
  double worst = 0.0;
  for (int32_t frames = 1; frames <= 6; ++frames) {
    for (int32_t u = 0; u <= 3; ++u) {
      for (int32_t trial = 0; trial < 10; ++trial) {
        const LabelSequence labels = oracle::RandomLabels(u, 3, &rng);
        if (CtcMinFrames(labels) > frames) continue;
        const PosteriorGrid grid = oracle::RandomPosteriorGrid(frames, 3, &rng, 2.0);
        const CtcAlignment align = CtcForcedAlignment(grid, labels);
        const auto brute = oracle::EnumerateCtc(grid, labels);
        worst = std::max(worst, std::abs(CtcPathLogProb(grid, align.symbols) -
                                         brute.best_log_prob));
        if (CollapseCtcPath(align.symbols) != labels) worst = INFINITY;
        int32_t emitted = 0;
        int32_t prev = kBlankId;
        for (int32_t t = 0; t < frames; ++t) {
          const int32_t s = align.symbols[t];
          if (s != kBlankId && s != prev) ++emitted;
          prev = s;
          if (align.trace[t] != emitted) worst = INFINITY;
        }
      }
    }
  }
  return Result("ctc.alignment", worst, kOracleTol);
}

CheckResult RnntGradient(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 21);
  double worst = 0.0;
  for (auto [t, u] : std::vector<std::pair<int32_t, int32_t>>{
           {1, 0}, {2, 1}, {3, 2}, {4, 3}, {6, 4}}) {
    const JointGrid grid = oracle::RandomJointGrid(t, u, 3, &rng);
    const LabelSequence labels = oracle::RandomLabels(u, 3, &rng);
    JointGrid analytic = RnntLoss(grid, labels).grad.ToDense(labels, 4);
    MaybeCorrupt(options, "rnnt.gradient", analytic.Data());
    auto f = [&](std::span<const double> p) {
      return RnntLoss(GridFromSpan(p, t, u, 4), labels).loss;
    };
    worst = std::max(worst, RelativeError(analytic.Data(),
                                          FiniteDifferenceGradient(
                                              f, grid.Data(), kGridFdStep)));
  }
  return Result("rnnt.gradient", worst, kGridGradTol);
}

CheckResult RnntStripwise(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 22);
  double worst = 0.0;
  for (auto [t, u] : std::vector<std::pair<int32_t, int32_t>>{
           {1, 0}, {5, 2}, {9, 3}, {17, 5}, {40, 12}}) {
    const JointGrid grid = oracle::RandomJointGrid(t, u, 5, &rng);
    const LabelSequence labels = oracle::RandomLabels(u, 5, &rng);
    const RnntLossResult whole = RnntLoss(grid, labels);
    const GridJointSupplier supplier(grid);
    for (int32_t width : {1, 2, 8, t}) {
      const RnntLossResult strip = RnntLossStripwise(supplier, labels, width);
      worst = std::max({worst, std::abs(strip.loss - whole.loss),
                        MaxAbsDiff(strip.grad, whole.grad)});
    }
  }
  return Result("rnnt.stripwise", worst, kExactTol);
}

CheckResult PruningFullHeight(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 31);
  double worst = 0.0;
  for (auto [t, u] : std::vector<std::pair<int32_t, int32_t>>{
           {1, 0}, {4, 2}, {12, 5}, {30, 9}}) {
    const JointGrid grid = oracle::RandomJointGrid(t, u, 4, &rng);
    const LabelSequence labels = oracle::RandomLabels(u, 4, &rng);
    const RnntLossResult full = RnntLoss(grid, labels);
    const GridJointSupplier supplier(grid);
    for (int32_t width : {1, 3, 8}) {
      const auto region =
          BuildConfidenceRegions(RandomTrace(t, u, &rng), width, std::nullopt, u);
      const PrunedLossResult pruned = PrunedRnntLoss(supplier, labels, region);
      worst = std::max({worst, std::abs(pruned.loss - full.loss),
                        MaxAbsDiff(pruned.grad, full.grad)});
    }
  }
  return Result("pruning.full_height", worst, kExactTol);
}

// 100 random finite-height regions; the error is how far the pruned loss
// falls below the full one, 0 when the bound holds.
CheckResult PruningBound(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 32);
  double worst = 0.0;
  for (int32_t trial = 0; trial < 100; ++trial) {
    const int32_t u = 1 + static_cast<int32_t>(rng() % 8);
    const int32_t t = u + 1 + static_cast<int32_t>(rng() % 20);
    const JointGrid grid = oracle::RandomJointGrid(t, u, 4, &rng);
    const LabelSequence labels = oracle::RandomLabels(u, 4, &rng);
    const int32_t width = 1 + static_cast<int32_t>(rng() % 8);
    const int32_t height = 1 + static_cast<int32_t>(rng() % (u + 1));
    const auto region = BuildConfidenceRegions(RandomTrace(t, u, &rng), width,
                                               height, u);
    const GridJointSupplier supplier(grid);
    const double pruned = PrunedRnntLoss(supplier, labels, region).loss;
    worst = std::max(worst, RnntLoss(grid, labels).loss - pruned);
  }
  return Result("pruning.bound", std::max(worst, 0.0), kExactTol);
}

// Counts regions without a complete lattice path, over random traces and
// over forced-alignment traces of random posteriors.
CheckResult PruningFeasible(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 33);
  int64_t failures = 0;
  for (int32_t trial = 0; trial < 200; ++trial) {
    const int32_t u = static_cast<int32_t>(rng() % 12);
    const int32_t t = std::max(1, 2 * u + 1) + static_cast<int32_t>(rng() % 30);
    std::vector<int32_t> trace;
    if (trial % 2 == 0) {
      trace = RandomTrace(t, u, &rng);
    } else {
      const LabelSequence labels = oracle::RandomLabels(u, 4, &rng);
      trace = CtcForcedAlignment(oracle::RandomPosteriorGrid(t, 4, &rng, 3.0), labels)
                  .trace;
    }
    for (int32_t width : {1, 2, 5, 8}) {
      for (int32_t h = 1; h <= u + 2; ++h)
        if (!RegionAdmitsPath(BuildConfidenceRegions(trace, width, h, u))) ++failures;
      if (!RegionAdmitsPath(BuildConfidenceRegions(trace, width, std::nullopt, u)))
        ++failures;
    }
  }
  return Result("pruning.feasible", static_cast<double>(failures), 0.0);
}

CheckResult PruningOracle(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 34);
  double worst = 0.0;
  for (int32_t t = 1; t <= 6; ++t) {
    for (int32_t u = 0; u <= 3; ++u) {
      for (int32_t trial = 0; trial < 5; ++trial) {
        const JointGrid grid = oracle::RandomJointGrid(t, u, 3, &rng);
        const LabelSequence labels = oracle::RandomLabels(u, 3, &rng);
        const int32_t width = 1 + trial % 3;
        const int32_t height = 1 + static_cast<int32_t>(rng() % (u + 1));
        const auto region =
            BuildConfidenceRegions(RandomTrace(t, u, &rng), width, height, u);
        const GridJointSupplier supplier(grid);
        const double pruned = PrunedRnntLoss(supplier, labels, region).loss;
        worst = std::max(worst,
                         std::abs(pruned + oracle::PrunedRnntLogLikeByEnumeration(
                                               grid, labels, region)));
      }
    }
  }
  return Result("pruning.oracle", worst, kOracleTol);
}

CheckResult PruningGradient(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 35);
  double worst = 0.0;
  for (auto [t, u, width, height] : std::vector<std::tuple<int32_t, int32_t, int32_t, int32_t>>{
           {7, 3, 2, 2}, {9, 4, 3, 1}, {6, 2, 1, 2}}) {
    const JointGrid grid = oracle::RandomJointGrid(t, u, 3, &rng);
    const LabelSequence labels = oracle::RandomLabels(u, 3, &rng);
    const auto region =
        BuildConfidenceRegions(RandomTrace(t, u, &rng), width, height, u);
    const GridJointSupplier supplier(grid);
    JointGrid analytic =
        PrunedRnntLoss(supplier, labels, region).grad.ToDense(labels, 4);
    MaybeCorrupt(options, "pruning.gradient", analytic.Data());
    auto f = [&, t = t, u = u](std::span<const double> p) {
      const JointGrid g = GridFromSpan(p, t, u, 4);
      const GridJointSupplier s(g);
      return PrunedRnntLoss(s, labels, region).loss;
    };
    worst = std::max(worst, RelativeError(analytic.Data(),
                                          FiniteDifferenceGradient(
                                              f, grid.Data(), kGridFdStep)));
  }
  return Result("pruning.gradient", worst, kGridGradTol);
}

CheckResult LConvGradient(const VerifyOptions &options) {
  std::mt19937_64 rng = Rng(options.seed, 41);
  const int32_t frames = 9, dim = 4;
  const LConvParams params = LConvParams::Random(dim, &rng);
  const Matrix x = RandomMatrix(frames, dim, 1.0, &rng);
  const Matrix weights = RandomMatrix(frames, dim, 1.0, &rng);
  auto loss_at = [&](const Matrix &input, const LConvParams &p) {
    return (LConvForward(input, p, nullptr).array() * weights.array()).sum();
  };

  LConvCache cache;
  LConvForward(x, params, &cache);
  LConvParams grads = LConvParams::Zeros(dim);
  Matrix gx = LConvBackward(cache, params, weights, &grads);
  MaybeCorrupt(options, "lconv.gradient", AsSpan(gx));

  auto fx = [&](std::span<const double> v) {
    return loss_at(Eigen::Map<const Matrix>(v.data(), frames, dim), params);
  };
  double worst = RelativeError(AsSpan(gx),
                               FiniteDifferenceGradient(fx, AsSpan(x), kModelFdStep));
  for (Matrix LConvParams::*member :
       {&LConvParams::pointwise_in, &LConvParams::depthwise,
        &LConvParams::pointwise_out}) {
    const Matrix &base = params.*member;
    auto f = [&](std::span<const double> v) {
      LConvParams p = params;
      p.*member = Eigen::Map<const Matrix>(v.data(), base.rows(), base.cols());
      return loss_at(x, p);
    };
    worst = std::max(worst, RelativeError(AsSpan(grads.*member),
                                          FiniteDifferenceGradient(
                                              f, AsSpan(base), kModelFdStep)));
  }
  return Result("lconv.gradient", worst, kGridGradTol);
}

// Interpolated objective through every parameter block, for each reduction
// mode, both predictors and a pruned lattice.
CheckResult ModelGradient(const VerifyOptions &options) {
  struct Case {
    PredictorKind predictor;
    ReductionMode mode;
    std::optional<int32_t> height;
  };
  const std::vector<Case> cases = {
      {PredictorKind::kBigram, ReductionMode::kNone, std::nullopt},
      {PredictorKind::kRecurrent, ReductionMode::kDecoder, std::nullopt},
      {PredictorKind::kRecurrent, ReductionMode::kEncoder, std::nullopt},
      {PredictorKind::kBigram, ReductionMode::kDecoder, 2},
  };
  double worst = 0.0;
  uint64_t stream = 50;
  for (const Case &c : cases) {
    ModelConfig mc;
    mc.dim = 4;
    mc.vocab_size = 3;
    mc.pred_dim = 3;
    mc.shared_layers = 1;
    mc.rest_layers = 2;
    mc.predictor = c.predictor;
    mc.seed = options.seed + stream;
    ToyModelParams params = ToyModelParams::Init(mc);
    params.ctc_bias(0, 0) = 0.8;
    std::mt19937_64 rng = Rng(options.seed, stream++);
    Utterance utt;
    utt.id = "probe";
    utt.frames = RandomMatrix(8, 4, 1.0, &rng);
    utt.labels = {2, 1, 3};
    TrainConfig config;
    config.mode = c.mode;
    config.threshold = 0.5;
    config.strip_width = 3;
    config.height = c.height;

    ToyModelParams grads = params.ZerosLike();
    ComputeLoss(params, utt, config, &grads);
    auto param_blocks = params.Blocks();
    auto grad_blocks = grads.Blocks();
    for (size_t i = 0; i < param_blocks.size(); ++i) {
      Matrix *block = param_blocks[i].second;
      const Matrix saved = *block;
      auto f = [&](std::span<const double> v) {
        *block = Eigen::Map<const Matrix>(v.data(), saved.rows(), saved.cols());
        return ComputeLoss(params, utt, config, nullptr).total;
      };
      const std::vector<double> numeric =
          FiniteDifferenceGradient(f, AsSpan(saved), kModelFdStep);
      *block = saved;
      Matrix analytic = *grad_blocks[i].second;
      if (i == 0) MaybeCorrupt(options, "model.gradient", AsSpan(analytic));
      worst = std::max(worst, RelativeError(AsSpan(analytic), numeric));
    }
  }
  return Result("model.gradient", worst, kModelGradTol);
}

const std::vector<CheckDef> &Checks() {
  static const std::vector<CheckDef> checks = {
      {"ctc.oracle",
       [](const VerifyOptions &o) { return VerifyCtcOracle(o.seed, o.seeds_per_shape); }},
      {"ctc.gradient", CtcGradient},
      {"ctc.alignment", CtcAlignmentCheck},
      {"rnnt.oracle",
       [](const VerifyOptions &o) { return VerifyRnntOracle(o.seed, o.seeds_per_shape); }},
      {"rnnt.path_count", [](const VerifyOptions &) { return VerifyRnntPathCount(); }},
      {"rnnt.gradient", RnntGradient},
      {"rnnt.stripwise", RnntStripwise},
      {"pruning.full_height", PruningFullHeight},
      {"pruning.bound", PruningBound},
      {"pruning.feasible", PruningFeasible},
      {"pruning.oracle", PruningOracle},
      {"pruning.gradient", PruningGradient},
      {"lconv.gradient", LConvGradient},
      {"model.gradient", ModelGradient},
  };
  return checks;
}

bool InScope(const std::string &name, VerifyScope scope) {
  switch (scope) {
    case VerifyScope::kCtc:
      return name.rfind("ctc.", 0) == 0;
    case VerifyScope::kRnnt:
      return name.rfind("rnnt.", 0) == 0;
    case VerifyScope::kPruning:
      return name.rfind("pruning.", 0) == 0;
    case VerifyScope::kGradients:
      return IsGradientCheck(name);
    case VerifyScope::kAll:
      return true;
  }
  return false;
}

}  // namespace

VerifyScope ParseVerifyScope(const std::string &name) {
  if (name == "ctc") return VerifyScope::kCtc;
  if (name == "rnnt") return VerifyScope::kRnnt;
  if (name == "pruning") return VerifyScope::kPruning;
  if (name == "gradients") return VerifyScope::kGradients;
  if (name == "all") return VerifyScope::kAll;
  throw ConfigError("unknown verify scope '" + name +
                    "' (expected ctc, rnnt, pruning, gradients or all)");
}

bool IsGradientCheck(const std::string &name) {
  const std::string suffix = ".gradient";
  return name.size() > suffix.size() &&
         name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::string> VerifyCheckNames(VerifyScope scope) {
  std::vector<std::string> names;
  for (const CheckDef &c : Checks())
    if (InScope(c.name, scope)) names.push_back(c.name);
  return names;
}

// Every (T, U, V) with T <= 6, U <= 3, V <= 3. Infeasible pairs must
// throw and have no admissible path.
CheckResult VerifyCtcOracle(uint64_t seed, int32_t seeds_per_shape) {
  double worst = 0.0;
  for (int32_t v = 1; v <= 3; ++v) {
    for (int32_t t = 1; t <= 6; ++t) {
      for (int32_t u = 0; u <= 3; ++u) {
        std::mt19937_64 rng = Rng(seed, 1000 + 100 * v + 10 * t + u);
        for (int32_t s = 0; s < seeds_per_shape; ++s) {
          const LabelSequence labels = oracle::RandomLabels(u, v, &rng);
          const PosteriorGrid grid = oracle::RandomPosteriorGrid(t, v, &rng);
          const auto brute = oracle::EnumerateCtc(grid, labels);
          if (CtcMinFrames(labels) > t) {
            bool threw = false;
            try {
              CtcLoss(grid, labels);
            } catch (const InfeasibleAlignment &) {
              threw = true;
            }
            if (!threw || brute.num_admissible != 0) worst = INFINITY;
            continue;
          }
          worst = std::max(worst,
                           std::abs(CtcLoss(grid, labels).loss + brute.log_like));
        }
      }
    }
  }
  return Result("ctc.oracle", worst, kOracleTol);
}

CheckResult VerifyRnntOracle(uint64_t seed, int32_t seeds_per_shape) {
  double worst = 0.0;
  for (int32_t v = 1; v <= 3; ++v) {
    for (int32_t t = 1; t <= 5; ++t) {
      for (int32_t u = 0; u <= 3; ++u) {
        std::mt19937_64 rng = Rng(seed, 2000 + 100 * v + 10 * t + u);
        for (int32_t s = 0; s < seeds_per_shape; ++s) {
          const JointGrid grid = oracle::RandomJointGrid(t, u, v, &rng);
          const LabelSequence labels = oracle::RandomLabels(u, v, &rng);
          worst = std::max(worst,
                           std::abs(RnntLoss(grid, labels).loss +
                                    oracle::RnntLogLikeByEnumeration(grid, labels)));
        }
      }
    }
  }
  return Result("rnnt.oracle", worst, kOracleTol);
}

CheckResult VerifyRnntPathCount() {
  double worst = 0.0;
  for (int32_t t = 1; t <= 7; ++t) {
    for (int32_t u = 0; u <= 5; ++u) {
      const double count = static_cast<double>(EnumerateRnntPaths(t, u).size());
      worst = std::max(worst, std::abs(count - BinomialCoefficient(t + u - 1, u)));
    }
  }
  return Result("rnnt.path_count", worst, 0.0);
}

std::vector<CheckResult> RunVerify(const VerifyOptions &options) {
  if (!options.corrupt.empty()) {
    const auto names = VerifyCheckNames(VerifyScope::kAll);
    if (!IsGradientCheck(options.corrupt) ||
        std::find(names.begin(), names.end(), options.corrupt) == names.end())
      throw ConfigError("cannot corrupt '" + options.corrupt +
                        "': not a gradient check");
  }
  if (options.seeds_per_shape < 1) throw ConfigError("seeds_per_shape must be >= 1");
  std::vector<CheckResult> results;
  for (const CheckDef &c : Checks()) {
    if (!InScope(c.name, options.scope)) continue;
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run(options);
    } catch (const ConfigError &) {
      throw;
    } catch (const Error &e) {
      spdlog::error("check {} raised: {}", c.name, e.what());
      r = Result(c.name, INFINITY, 0.0);
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
    results.push_back(r);
  }
  return results;
}

std::string VerifyCsv(const std::vector<CheckResult> &results) {
  std::string out = "name,max_error,tolerance,pass\n";
  for (const CheckResult &r : results)
    out += fmt::format("{},{},{},{}\n", r.name, FormatDouble(r.max_error),
                       FormatDouble(r.tolerance), r.pass ? "true" : "false");
  return out;
}

}  // namespace ctcguide
