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

#include "ctcguide/model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ctcguide/error.h"
#include "ctcguide/pruning.h"

namespace ctcguide {
namespace {

void Expect(bool ok, const std::string &what) {
  if (!ok) throw ShapeError(what);
}

void ExpectShape(const Matrix &m, Eigen::Index rows, Eigen::Index cols,
                 const std::string &name) {
  Expect(m.rows() == rows && m.cols() == cols,
         name + " is " + std::to_string(m.rows()) + "x" +
             std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
             "x" + std::to_string(cols));
}

template <typename Params, typename Ptr>
std::vector<std::pair<std::string, Ptr>> CollectBlocks(Params &p) {
  std::vector<std::pair<std::string, Ptr>> out;
  for (size_t i = 0; i < p.shared.size(); ++i) {
    out.emplace_back("shared." + std::to_string(i) + ".weight", &p.shared[i].weight);
    out.emplace_back("shared." + std::to_string(i) + ".bias", &p.shared[i].bias);
  }
  for (size_t i = 0; i < p.rest.size(); ++i) {
    out.emplace_back("rest." + std::to_string(i) + ".weight", &p.rest[i].weight);
    out.emplace_back("rest." + std::to_string(i) + ".bias", &p.rest[i].bias);
  }
  out.emplace_back("lconv.pointwise_in", &p.lconv.pointwise_in);
  out.emplace_back("lconv.depthwise", &p.lconv.depthwise);
  out.emplace_back("lconv.pointwise_out", &p.lconv.pointwise_out);
  out.emplace_back("ctc.weight", &p.ctc_weight);
  out.emplace_back("ctc.bias", &p.ctc_bias);
  out.emplace_back("predictor.embedding", &p.embedding);
  if (p.rec_weight.size() > 0) {
    out.emplace_back("predictor.rec_weight", &p.rec_weight);
    out.emplace_back("predictor.rec_bias", &p.rec_bias);
  }
  out.emplace_back("joiner.enc_weight", &p.joiner_enc);
  out.emplace_back("joiner.pred_weight", &p.joiner_pred);
  out.emplace_back("joiner.bias", &p.joiner_bias);
  return out;
}

// Uniform integer in [lo, hi].
int32_t UniformInt(int32_t lo, int32_t hi, std::mt19937_64 *rng) {
  return std::uniform_int_distribution<int32_t>(lo, hi)(*rng);
}

}  // namespace

std::string PredictorKindName(PredictorKind kind) {
  return kind == PredictorKind::kBigram ? "bigram" : "recurrent";
}

PredictorKind ParsePredictorKind(const std::string &name) {
  if (name == "bigram") return PredictorKind::kBigram;
  if (name == "recurrent") return PredictorKind::kRecurrent;
  throw ConfigError("unknown predictor '" + name +
                    "' (expected bigram or recurrent)");
}

void ModelConfig::Validate() const {
  if (dim < 1) throw ConfigError("model dim must be >= 1");
  if (vocab_size < 1) throw ConfigError("vocab_size must be >= 1");
  if (pred_dim < 1) throw ConfigError("pred_dim must be >= 1");
  if (shared_layers < 0 || rest_layers < 0)
    throw ConfigError("layer counts must be non-negative");
}

ToyModelParams ToyModelParams::Init(const ModelConfig &config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  const int32_t d = config.dim;
  const int32_t k = config.vocab_size + 1;
  const int32_t p = config.pred_dim;
  ToyModelParams m;
  for (int32_t i = 0; i < config.shared_layers; ++i)
    m.shared.push_back(DenseLayer::Random(d, d, &rng));
  for (int32_t i = 0; i < config.rest_layers; ++i)
    m.rest.push_back(DenseLayer::Random(d, d, &rng));
  m.lconv = LConvParams::Random(d, &rng);
  const double enc_scale = 1.0 / std::sqrt(static_cast<double>(d));
  const double pred_scale = 1.0 / std::sqrt(static_cast<double>(p));
  m.ctc_weight = RandomMatrix(d, k, enc_scale, &rng);
  m.ctc_bias = Matrix::Zero(1, k);
  m.embedding = RandomMatrix(k, p, 1.0, &rng);
  if (config.predictor == PredictorKind::kRecurrent) {
    m.rec_weight = RandomMatrix(p, p, pred_scale, &rng);
    m.rec_bias = Matrix::Zero(1, p);
  }
  m.joiner_enc = RandomMatrix(d, k, enc_scale, &rng);
  m.joiner_pred = RandomMatrix(p, k, pred_scale, &rng);
  m.joiner_bias = Matrix::Zero(1, k);
  return m;
}

ToyModelParams ToyModelParams::ZerosLike() const {
  ToyModelParams z = *this;
  for (auto &[name, block] : z.Blocks()) block->setZero();
  return z;
}

void ToyModelParams::Validate() const {
  const int32_t d = Dim();
  const int32_t k = NumSymbols();
  const int32_t p = PredDim();
  Expect(d >= 1 && k >= 2 && p >= 1, "model needs dim >= 1 and >= 1 token");
  for (const DenseLayer &layer : shared) {
    ExpectShape(layer.weight, d, d, "shared layer weight");
    ExpectShape(layer.bias, 1, d, "shared layer bias");
  }
  for (const DenseLayer &layer : rest) {
    ExpectShape(layer.weight, d, d, "rest layer weight");
    ExpectShape(layer.bias, 1, d, "rest layer bias");
  }
  Expect(lconv.Dim() == d, "lconv dim differs from model dim");
  lconv.Validate();
  ExpectShape(ctc_bias, 1, k, "ctc.bias");
  ExpectShape(embedding, k, p, "predictor.embedding");
  if (rec_weight.size() > 0 || rec_bias.size() > 0) {
    ExpectShape(rec_weight, p, p, "predictor.rec_weight");
    ExpectShape(rec_bias, 1, p, "predictor.rec_bias");
  }
  ExpectShape(joiner_enc, d, k, "joiner.enc_weight");
  ExpectShape(joiner_pred, p, k, "joiner.pred_weight");
  ExpectShape(joiner_bias, 1, k, "joiner.bias");
}

std::vector<std::pair<std::string, Matrix *>> ToyModelParams::Blocks() {
  return CollectBlocks<ToyModelParams, Matrix *>(*this);
}

std::vector<std::pair<std::string, const Matrix *>> ToyModelParams::Blocks()
    const {
  return CollectBlocks<const ToyModelParams, const Matrix *>(*this);
}

int64_t ToyModelParams::NumParameters() const {
  int64_t n = 0;
  for (const auto &[name, block] : Blocks()) n += block->size();
  return n;
}

ToyModelParams ParamsFromBlocks(
    const std::vector<std::pair<std::string, Matrix>> &blocks) {
  std::map<std::string, const Matrix *> by_name;
  for (const auto &[name, m] : blocks) {
    if (!by_name.emplace(name, &m).second)
      throw Error("duplicate parameter block '" + name + "'");
  }
  auto take = [&](const std::string &name) -> Matrix {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw Error("missing parameter block '" + name + "'");
    Matrix m = *it->second;
    by_name.erase(it);
    return m;
  };
  auto take_stack = [&](const std::string &prefix) {
    std::vector<DenseLayer> layers;
    while (by_name.count(prefix + std::to_string(layers.size()) + ".weight")) {
      const std::string base = prefix + std::to_string(layers.size());
      DenseLayer layer;
      layer.weight = take(base + ".weight");
      layer.bias = take(base + ".bias");
      layers.push_back(std::move(layer));
    }
    return layers;
  };

  ToyModelParams p;
  p.shared = take_stack("shared.");
  p.rest = take_stack("rest.");
  p.lconv.pointwise_in = take("lconv.pointwise_in");
  p.lconv.depthwise = take("lconv.depthwise");
  p.lconv.pointwise_out = take("lconv.pointwise_out");
  p.ctc_weight = take("ctc.weight");
  p.ctc_bias = take("ctc.bias");
  p.embedding = take("predictor.embedding");
  if (by_name.count("predictor.rec_weight")) {
    p.rec_weight = take("predictor.rec_weight");
    p.rec_bias = take("predictor.rec_bias");
  }
  p.joiner_enc = take("joiner.enc_weight");
  p.joiner_pred = take("joiner.pred_weight");
  p.joiner_bias = take("joiner.bias");
  if (!by_name.empty())
    throw Error("unknown parameter block '" + by_name.begin()->first + "'");
  p.Validate();
  return p;
}

RowVector PredictorStep(const ToyModelParams &params, const RowVector &state,
                        int32_t prev_token) {
  if (prev_token < 0 || prev_token >= params.NumSymbols())
    throw Error("predictor token " + std::to_string(prev_token) +
                " out of range");
  if (params.Predictor() == PredictorKind::kBigram)
    return params.embedding.row(prev_token);
  RowVector pre = params.embedding.row(prev_token);
  pre += state * params.rec_weight;
  pre += params.rec_bias.row(0);
  return pre.array().tanh().matrix();
}

Matrix PredictorForward(const ToyModelParams &params,
                        const LabelSequence &labels, PredictorCache *cache) {
  const int32_t num_labels = static_cast<int32_t>(labels.size());
  Matrix states(num_labels + 1, params.PredDim());
  std::vector<int32_t> prev(num_labels + 1, kBlankId);
  RowVector state = RowVector::Zero(params.PredDim());
  for (int32_t u = 0; u <= num_labels; ++u) {
    if (u > 0) prev[u] = labels[u - 1];
    state = PredictorStep(params, state, prev[u]);
    states.row(u) = state;
  }
  if (cache) {
    cache->prev_tokens = std::move(prev);
    cache->states = states;
  }
  return states;
}

void PredictorBackward(const ToyModelParams &params,
                       const PredictorCache &cache, const Matrix &grad_states,
                       ToyModelParams *grads) {
  ExpectShape(grad_states, cache.states.rows(), cache.states.cols(),
              "predictor state gradient");
  const Eigen::Index n = cache.states.rows();
  if (params.Predictor() == PredictorKind::kBigram) {
    for (Eigen::Index u = 0; u < n; ++u)
      grads->embedding.row(cache.prev_tokens[u]) += grad_states.row(u);
    return;
  }
  RowVector carry = RowVector::Zero(params.PredDim());
  for (Eigen::Index u = n; u-- > 0;) {
    RowVector g = grad_states.row(u);
    g += carry;
    RowVector pre_grad =
        (g.array() * (1.0 - cache.states.row(u).array().square())).matrix();
    grads->embedding.row(cache.prev_tokens[u]) += pre_grad;
    grads->rec_bias.row(0) += pre_grad;
    if (u > 0)
      grads->rec_weight.noalias() += cache.states.row(u - 1).transpose() * pre_grad;
    carry = pre_grad * params.rec_weight.transpose();
  }
}

void JoinerFiber(const double *enc_row, const double *pred_row,
                 int32_t num_symbols, std::span<double> out) {
  for (int32_t k = 0; k < num_symbols; ++k) out[k] = enc_row[k] + pred_row[k];
  LogSoftmax(out.first(num_symbols), out.first(num_symbols));
}

ModelJointSupplier::ModelJointSupplier(Matrix enc_proj, Matrix pred_proj)
    : enc_proj_(std::move(enc_proj)), pred_proj_(std::move(pred_proj)) {
  Expect(pred_proj_.rows() >= 1, "joiner needs at least one label position");
  Expect(enc_proj_.cols() == pred_proj_.cols(),
         "encoder and predictor projections disagree on the symbol count");
}

void ModelJointSupplier::ComputeBlock(int32_t t_begin, int32_t t_end,
                                      int32_t u_begin, int32_t u_end,
                                      std::span<double> out) const {
  const int32_t k = NumSymbols();
  Expect(t_begin >= 0 && t_end <= NumFrames() && u_begin >= 0 &&
             u_end <= NumLabels() + 1 && t_begin <= t_end && u_begin <= u_end,
         "joint block out of range");
  Expect(out.size() == static_cast<size_t>(t_end - t_begin) *
                           (u_end - u_begin) * k,
         "joint block buffer size");
  size_t offset = 0;
  for (int32_t t = t_begin; t < t_end; ++t) {
    for (int32_t u = u_begin; u < u_end; ++u) {
      JoinerFiber(enc_proj_.row(t).data(), pred_proj_.row(u).data(), k,
                  out.subspan(offset, k));
      offset += k;
    }
  }
  fibers_computed_ += static_cast<int64_t>(t_end - t_begin) * (u_end - u_begin);
}

EncoderOutput Encode(const ToyModelParams &params, const EmbeddingSequence &x,
                     const SplitOptions &options) {
  if (x.cols() != params.Dim())
    throw ShapeError("input frames have dim " + std::to_string(x.cols()) +
                     ", model expects " + std::to_string(params.Dim()));
  PosteriorFn head = [&params](const EmbeddingSequence &in) {
    Matrix logits = in * params.ctc_weight;
    logits.rowwise() += params.ctc_bias.row(0);
    LogSoftmaxRows(&logits);
    return logits;
  };
  EncoderOutput out;
  out.split = SplitForward(x, params.shared, params.rest, params.lconv,
                           options, head);
  out.ctc.log_post = out.split.ctc_log_post;
  out.enc_proj = out.split.rnnt_input * params.joiner_enc;
  out.enc_proj.rowwise() += params.joiner_bias.row(0);
  return out;
}

ModelForwardResult ModelForward(const ToyModelParams &params,
                                const EmbeddingSequence &x,
                                const LabelSequence &labels,
                                const SplitOptions &options) {
  ValidateLabels(labels, params.VocabSize());
  ModelForwardResult out;
  out.encoder = Encode(params, x, options);
  Matrix states = PredictorForward(params, labels, &out.predictor);
  out.pred_proj = states * params.joiner_pred;
  return out;
}

void TrainConfig::Validate() const {
  if (!(ctc_weight >= 0.0) || !(rnnt_weight >= 0.0))
    throw ConfigError("loss weights must be non-negative");
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("threshold must lie in (0, 1)");
  if (strip_width < 1) throw ConfigError("strip_width must be >= 1");
  if (height && *height < 1) throw ConfigError("height must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
  if (!(lr_decay > 0.0)) throw ConfigError("lr_decay must be > 0");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

UtteranceLoss ComputeLoss(const ToyModelParams &params, const Utterance &utt,
                          const TrainConfig &config, ToyModelParams *grads) {
  // Training never reduces an utterance to zero frames.
  const SplitOptions options{config.mode, config.threshold, true};
  ModelForwardResult fwd = ModelForward(params, utt.frames, utt.labels, options);
  const EncoderOutput &enc = fwd.encoder;
  const LabelSequence &labels = utt.labels;
  const int32_t num_labels = static_cast<int32_t>(labels.size());
  const int32_t kept = enc.split.mask.kept_count;

  UtteranceLoss result;
  result.num_frames = static_cast<int32_t>(utt.frames.rows());
  result.kept_frames = kept;
  result.fell_back = enc.split.fell_back;

  CtcLossResult ctc = CtcLoss(enc.ctc, labels);
  ModelJointSupplier joint = fwd.Joint();
  LatticeGradient lattice_grad;
  if (config.height) {
    CtcAlignment align = CtcForcedAlignment(enc.ctc, labels);
    std::vector<int32_t> trace;
    trace.reserve(kept);
    for (int32_t t = 0; t < enc.split.mask.NumFrames(); ++t)
      if (enc.split.mask.keep[t]) trace.push_back(align.trace[t]);
    ConfidenceRegion region = BuildConfidenceRegions(
        trace, config.strip_width, config.height, num_labels);
    PrunedLossResult pruned = PrunedRnntLoss(joint, labels, region);
    result.rnnt_loss = pruned.loss;
    result.lattice_cells = pruned.cells_evaluated;
    lattice_grad = std::move(pruned.grad);
  } else {
    RnntLossResult full = RnntLossStripwise(joint, labels, config.strip_width);
    result.rnnt_loss = full.loss;
    result.lattice_cells = static_cast<int64_t>(kept) * (num_labels + 1);
    lattice_grad = std::move(full.grad);
  }
  result.ctc_loss = ctc.loss;
  result.total = config.ctc_weight * ctc.loss + config.rnnt_weight * result.rnnt_loss;
  if (!grads) return result;

  const int32_t k = params.NumSymbols();

  Matrix ctc_logit_grad = LogSoftmaxBackward(
      enc.ctc.log_post, config.ctc_weight * ctc.grad);
  grads->ctc_weight.noalias() += enc.split.ctc_input.transpose() * ctc_logit_grad;
  grads->ctc_bias += ctc_logit_grad.colwise().sum();
  Matrix grad_ctc_input = ctc_logit_grad * params.ctc_weight.transpose();

  // Fiber gradients are nonzero only on the blank and the next label, so
  // the logit gradient is g_b e_blank + g_e e_label - p (g_b + g_e).
  Matrix enc_grad = Matrix::Zero(kept, k);
  Matrix pred_grad = Matrix::Zero(num_labels + 1, k);
  std::vector<double> fiber(k);
  for (int32_t t = 0; t < kept; ++t) {
    for (int32_t u = 0; u <= num_labels; ++u) {
      const double gb = config.rnnt_weight * lattice_grad.blank(t, u);
      const double ge =
          u < num_labels ? config.rnnt_weight * lattice_grad.emit(t, u) : 0.0;
      if (gb == 0.0 && ge == 0.0) continue;
      JoinerFiber(enc.enc_proj.row(t).data(), fwd.pred_proj.row(u).data(), k,
                  fiber);
      const double total = gb + ge;
      for (int32_t s = 0; s < k; ++s) {
        double d = -std::exp(fiber[s]) * total;
        if (s == kBlankId) d += gb;
        if (u < num_labels && s == labels[u]) d += ge;
        enc_grad(t, s) += d;
        pred_grad(u, s) += d;
      }
    }
  }
  grads->joiner_enc.noalias() += enc.split.rnnt_input.transpose() * enc_grad;
  grads->joiner_bias += enc_grad.colwise().sum();
  Matrix grad_rnnt_input = enc_grad * params.joiner_enc.transpose();
  grads->joiner_pred.noalias() += fwd.predictor.states.transpose() * pred_grad;
  PredictorBackward(params, fwd.predictor,
                    pred_grad * params.joiner_pred.transpose(), grads);

  EncoderGrads enc_grads{std::move(grads->shared), std::move(grads->rest),
                         std::move(grads->lconv)};
  SplitBackward(enc.split, params.shared, params.rest, params.lconv,
                config.mode, grad_ctc_input, grad_rnnt_input, &enc_grads);
  grads->shared = std::move(enc_grads.shared);
  grads->rest = std::move(enc_grads.rest);
  grads->lconv = std::move(enc_grads.lconv);
  return result;
}

StepMetrics CotrainStep(ToyModelParams *params,
                        std::span<const Utterance *const> batch,
                        const TrainConfig &config, double learning_rate) {
  config.Validate();
  if (batch.empty()) throw Error("empty batch");
  ToyModelParams grads = params->ZerosLike();
  StepMetrics metrics;
  int64_t frames = 0, kept = 0;
  for (const Utterance *utt : batch) {
    UtteranceLoss loss;
    try {
      loss = ComputeLoss(*params, *utt, config, &grads);
    } catch (const ConfigError &) {
      throw;
    } catch (const Error &e) {
      throw Error("utterance " + utt->id + ": " + e.what());
    }
    if (!std::isfinite(loss.total))
      throw Error("non-finite loss on utterance " + utt->id +
                  " (ctc=" + std::to_string(loss.ctc_loss) +
                  ", rnnt=" + std::to_string(loss.rnnt_loss) + ")");
    metrics.ctc_loss += loss.ctc_loss;
    metrics.rnnt_loss += loss.rnnt_loss;
    metrics.total_loss += loss.total;
    metrics.fallbacks += loss.fell_back;
    metrics.lattice_cells += loss.lattice_cells;
    frames += loss.num_frames;
    kept += loss.kept_frames;
  }
  const double n = static_cast<double>(batch.size());
  metrics.ctc_loss /= n;
  metrics.rnnt_loss /= n;
  metrics.total_loss /= n;
  metrics.kept_fraction =
      frames == 0 ? 1.0 : static_cast<double>(kept) / static_cast<double>(frames);

  const double scale = learning_rate / n;
  auto param_blocks = params->Blocks();
  auto grad_blocks = grads.Blocks();
  for (size_t i = 0; i < param_blocks.size(); ++i)
    *param_blocks[i].second -= scale * *grad_blocks[i].second;
  return metrics;
}

void Train(ToyModelParams *params, std::span<const Utterance> data,
           const TrainConfig &config, const StepCallback &on_step) {
  config.Validate();
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::mt19937_64 rng(config.seed);
  double lr = config.learning_rate;
  int64_t step = 0;
  std::vector<const Utterance *> batch;
  for (int32_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end = std::min(order.size(), begin + config.batch_size);
      batch.clear();
      for (size_t i = begin; i < end; ++i) batch.push_back(&data[order[i]]);
      StepMetrics m = CotrainStep(params, batch, config, lr);
      if (on_step) on_step(step, epoch, m);
      ++step;
    }
    lr *= config.lr_decay;
  }
}

void SynthConfig::Validate() const {
  if (vocab_size < 2) throw ConfigError("synth vocab_size must be >= 2");
  if (num_utterances < 0) throw ConfigError("num_utterances must be >= 0");
  if (dim < 1) throw ConfigError("synth dim must be >= 1");
  if (min_tokens < 0 || min_tokens > max_tokens)
    throw ConfigError("token count range must satisfy 0 <= min <= max");
  if (min_token_frames < 1 || min_token_frames > max_token_frames)
    throw ConfigError("token frame range must satisfy 1 <= min <= max");
  if (min_gap_frames < 1 || min_gap_frames > max_gap_frames)
    throw ConfigError("gap frame range must satisfy 1 <= min <= max");
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
}

SynthDataset GenerateSynthDataset(const SynthConfig &config) {
  config.Validate();
  SynthDataset data;
  std::mt19937_64 proto_rng(config.prototype_seed);
  data.prototypes =
      RandomMatrix(config.vocab_size + 1, config.dim, 1.0, &proto_rng);
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, config.noise > 0 ? config.noise : 1.0);

  std::vector<RowVector> rows;
  for (int32_t i = 0; i < config.num_utterances; ++i) {
    Utterance utt;
    char id[32];
    std::snprintf(id, sizeof(id), "utt%06d", i);
    utt.id = id;
    const int32_t count = UniformInt(config.min_tokens, config.max_tokens, &rng);
    for (int32_t n = 0; n < count; ++n) {
      int32_t token = UniformInt(1, config.vocab_size, &rng);
      while (!config.allow_repeats && !utt.labels.empty() &&
             token == utt.labels.back())
        token = UniformInt(1, config.vocab_size, &rng);
      utt.labels.push_back(token);
    }

    rows.clear();
    auto push_frames = [&](int32_t symbol, int32_t frames) {
      for (int32_t f = 0; f < frames; ++f) {
        RowVector r = data.prototypes.row(symbol);
        if (config.noise > 0)
          for (Eigen::Index c = 0; c < r.size(); ++c) r[c] += noise(rng);
        rows.push_back(std::move(r));
        utt.truth.push_back(symbol);
      }
    };
    if (utt.labels.empty())
      push_frames(kBlankId,
                  UniformInt(config.min_gap_frames, config.max_gap_frames, &rng));
    for (int32_t token : utt.labels) {
      push_frames(kBlankId,
                  UniformInt(config.min_gap_frames, config.max_gap_frames, &rng));
      push_frames(token, UniformInt(config.min_token_frames,
                                    config.max_token_frames, &rng));
    }

    utt.frames.resize(static_cast<Eigen::Index>(rows.size()), config.dim);
    for (size_t t = 0; t < rows.size(); ++t) utt.frames.row(t) = rows[t];
    for (int32_t s : utt.truth) data.blank_frames += s == kBlankId;
    data.total_frames += static_cast<int64_t>(utt.truth.size());
    data.utterances.push_back(std::move(utt));
  }
  return data;
}

double ExpectedBlankFraction(const SynthConfig &config) {
  config.Validate();
  const double mean_tokens = 0.5 * (config.min_tokens + config.max_tokens);
  const double p_empty =
      config.min_tokens == 0
          ? 1.0 / (config.max_tokens - config.min_tokens + 1)
          : 0.0;
  const double mean_gaps = mean_tokens + p_empty;
  const double gap = 0.5 * (config.min_gap_frames + config.max_gap_frames);
  const double token = 0.5 * (config.min_token_frames + config.max_token_frames);
  return mean_gaps * gap / (mean_gaps * gap + mean_tokens * token);
}

std::vector<int32_t> TruthTrace(const std::vector<int32_t> &truth) {
  std::vector<int32_t> trace(truth.size());
  int32_t count = 0;
  for (size_t t = 0; t < truth.size(); ++t) {
    if (truth[t] != kBlankId && (t == 0 || truth[t - 1] != truth[t])) ++count;
    trace[t] = count;
  }
  return trace;
}

}  // namespace ctcguide
