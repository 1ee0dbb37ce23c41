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

#include "cli.h"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "ctcguide/bench.h"
#include "ctcguide/config.h"
#include "ctcguide/ctc.h"
#include "ctcguide/decode.h"
#include "ctcguide/error.h"
#include "ctcguide/io.h"
#include "ctcguide/model.h"
#include "ctcguide/verify.h"
#include "json.hpp"

namespace ctcguide {
namespace {

// Flags shared by the model commands. Each overrides the config file.
struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;  // section.key=value
  std::optional<double> threshold;
  std::optional<std::string> mode;
  std::optional<int32_t> strip_width;
  std::optional<std::string> height;
  std::optional<int32_t> beam;
  std::optional<uint64_t> seed;
  std::optional<double> ctc_weight;
  std::optional<double> rnnt_weight;
  std::optional<std::string> data;
  std::optional<std::string> checkpoint;
  bool greedy = false;
  bool verbose = false;
};

void AddCommonFlags(CLI::App *cmd, CommonFlags *f) {
  cmd->add_option("-c,--config", f->config_path, "INI run configuration");
  cmd->add_option("--set", f->sets, "Override one key, e.g. --set train.epochs=3");
  cmd->add_option("--threshold", f->threshold,
                  "Blank posterior threshold for training and decoding");
  cmd->add_option("--mode", f->mode, "Frame reduction: none, decoder_fr, encoder_fr");
  cmd->add_option("--strip-width", f->strip_width, "Lattice strip width");
  cmd->add_option("--height", f->height, "Pruning height, an integer or inf");
  cmd->add_option("--beam", f->beam, "Beam size");
  cmd->add_option("--seed", f->seed, "Model initialization and training seed");
  cmd->add_option("--ctc-weight", f->ctc_weight, "Weight of the CTC loss");
  cmd->add_option("--rnnt-weight", f->rnnt_weight, "Weight of the transducer loss");
  cmd->add_option("--data", f->data, "JSON-lines dataset");
  cmd->add_option("--checkpoint", f->checkpoint, "Model checkpoint");
  cmd->add_flag("--greedy", f->greedy, "Greedy instead of beam search");
  cmd->add_flag("-v,--verbose", f->verbose, "Log progress to stderr");
}

// Applies the config file, then --set, then the dedicated flags. Datasets
// named by --data land in train_data for training and test_data otherwise.
RunConfig ResolveConfig(const CommonFlags &f, bool data_is_training) {
  RunConfig config = f.config_path.empty() ? RunConfig{} : LoadRunConfig(f.config_path);
  for (const std::string &kv : f.sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects section.key=value, got '" + kv + "'");
    SetConfigValue(&config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.threshold) {
    config.train.threshold = *f.threshold;
    config.decode.threshold = *f.threshold;
  }
  if (f.mode) {
    config.train.mode = ParseReductionMode(*f.mode);
    config.decode.mode = config.train.mode;
  }
  if (f.strip_width) config.train.strip_width = *f.strip_width;
  if (f.height) SetConfigValue(&config, "train.height", *f.height);
  if (f.beam) config.decode.beam_size = *f.beam;
  if (f.seed) {
    config.train.seed = *f.seed;
    config.model.seed = *f.seed;
  }
  if (f.ctc_weight) config.train.ctc_weight = *f.ctc_weight;
  if (f.rnnt_weight) config.train.rnnt_weight = *f.rnnt_weight;
  if (f.data) (data_is_training ? config.paths.train_data : config.paths.test_data) = *f.data;
  if (f.checkpoint) config.paths.checkpoint = *f.checkpoint;
  if (f.greedy) config.decode.greedy = true;
  config.Validate();
  spdlog::set_level(f.verbose ? spdlog::level::info : spdlog::level::warn);
  return config;
}

std::vector<Utterance> TrainingData(const RunConfig &config) {
  if (!config.paths.train_data.empty()) return ReadDataset(config.paths.train_data);
  return GenerateSynthDataset(config.synth).utterances;
}

std::vector<Utterance> TestData(const RunConfig &config) {
  if (!config.paths.test_data.empty()) return ReadDataset(config.paths.test_data);
  SynthConfig synth = config.synth;
  synth.num_utterances = config.test_utterances;
  synth.seed = config.test_seed;
  return GenerateSynthDataset(synth).utterances;
}

void CheckDataFitsModel(const std::vector<Utterance> &data, int32_t dim,
                        int32_t vocab_size) {
  for (const Utterance &utt : data) {
    if (utt.frames.cols() != dim && utt.frames.rows() > 0)
      throw ConfigError(fmt::format("utterance {} has {}-dim frames, model expects {}",
                                    utt.id, utt.frames.cols(), dim));
    ValidateLabels(utt.labels, vocab_size);
  }
}

std::vector<ReductionMode> ParseModes(const std::vector<std::string> &names,
                                      ReductionMode fallback) {
  if (names.empty()) return {fallback};
  std::vector<ReductionMode> modes;
  for (const std::string &n : names) modes.push_back(ParseReductionMode(n));
  return modes;
}

int CmdVerify(const std::string &scope, uint64_t seed, int32_t seeds_per_shape,
              const std::string &corrupt, bool timings, std::ostream &out,
              std::ostream &err) {
  VerifyOptions options;
  options.scope = ParseVerifyScope(scope);
  options.seed = seed;
  options.seeds_per_shape = seeds_per_shape;
  options.corrupt = corrupt;
  const std::vector<CheckResult> results = RunVerify(options);
  out << VerifyCsv(results);
  int status = kExitOk;
  for (const CheckResult &r : results) {
    if (timings) err << fmt::format("{}: {:.3f}s\n", r.name, r.seconds);
    if (!r.pass) {
      err << fmt::format("verify: check {} failed (max_error {} > tolerance {})\n",
                         r.name, FormatDouble(r.max_error), FormatDouble(r.tolerance));
      status = kExitFailure;
    }
  }
  return status;
}

int CmdTrain(const RunConfig &config, std::ostream &out) {
  const std::vector<Utterance> data = TrainingData(config);
  CheckDataFitsModel(data, config.model.dim, config.model.vocab_size);
  ToyModelParams params = ToyModelParams::Init(config.model);

  std::string metrics = "step,epoch,ctc_loss,rnnt_loss,total_loss,kept_fraction,"
                        "fallbacks,lattice_cells\n";
  StepMetrics last;
  int64_t steps = 0;
  int32_t last_epoch = -1;
  Train(&params, data, config.train,
        [&](int64_t step, int32_t epoch, const StepMetrics &m) {
          metrics += fmt::format("{},{},{},{},{},{},{},{}\n", step, epoch,
                                 FormatDouble(m.ctc_loss), FormatDouble(m.rnnt_loss),
                                 FormatDouble(m.total_loss),
                                 FormatDouble(m.kept_fraction), m.fallbacks,
                                 m.lattice_cells);
          if (epoch != last_epoch) {
            spdlog::info("epoch {} step {} loss {:.4f}", epoch, step, m.total_loss);
            last_epoch = epoch;
          }
          last = m;
          steps = step + 1;
        });
  if (!config.paths.metrics.empty()) WriteFile(config.paths.metrics, metrics);
  SaveCheckpoint(config.paths.checkpoint, params);
  out << "utterances,steps,final_ctc_loss,final_rnnt_loss,final_total_loss,"
         "final_kept_fraction\n";
  out << fmt::format("{},{},{},{},{},{}\n", data.size(), steps,
                     FormatDouble(last.ctc_loss), FormatDouble(last.rnnt_loss),
                     FormatDouble(last.total_loss), FormatDouble(last.kept_fraction));
  return kExitOk;
}

int CmdEval(const RunConfig &config, const std::vector<std::string> &mode_names,
            const std::string &hyps_path, std::optional<double> min_accuracy,
            std::ostream &out, std::ostream &err) {
  const ToyModelParams params = LoadCheckpoint(config.paths.checkpoint);
  const std::vector<Utterance> data = TestData(config);
  CheckDataFitsModel(data, params.Dim(), params.VocabSize());

  out << "mode,threshold,search,utterances,ref_tokens,substitutions,deletions,"
         "insertions,token_error_rate,deletion_rate,sequence_accuracy,"
         "kept_fraction,decoder_steps,joiner_evals\n";
  std::string hyps;
  int status = kExitOk;
  for (ReductionMode mode : ParseModes(mode_names, config.decode.mode)) {
    DecodeConfig dc = config.decode;
    dc.mode = mode;
    const EvalReport r = Evaluate(params, data, dc);
    const std::string search =
        dc.greedy ? "greedy" : fmt::format("beam{}", dc.beam_size);
    out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                       ReductionModeName(mode), FormatDouble(dc.threshold), search,
                       r.utterances, r.ref_tokens, r.edits.substitutions,
                       r.edits.deletions, r.edits.insertions,
                       FormatDouble(r.TokenErrorRate()), FormatDouble(r.DeletionRate()),
                       FormatDouble(r.SequenceAccuracy()),
                       FormatDouble(r.KeptFraction()), r.stats.decoder_steps,
                       r.stats.joiner_evals);
    for (size_t i = 0; i < data.size(); ++i) {
      nlohmann::json j;
      j["id"] = data[i].id;
      j["mode"] = ReductionModeName(mode);
      j["ref"] = data[i].labels;
      j["hyp"] = r.hypotheses[i];
      hyps += j.dump() + "\n";
    }
    if (min_accuracy && r.SequenceAccuracy() < *min_accuracy) {
      err << fmt::format("eval: {} sequence accuracy {} below {}\n",
                         ReductionModeName(mode), FormatDouble(r.SequenceAccuracy()),
                         FormatDouble(*min_accuracy));
      status = kExitFailure;
    }
  }
  if (!hyps_path.empty()) WriteFile(hyps_path, hyps);
  return status;
}

int CmdBench(const RunConfig &config, const std::vector<std::string> &mode_names,
             const std::string &out_dir, bool skip_loss, std::ostream &out) {
  const ToyModelParams params = LoadCheckpoint(config.paths.checkpoint);
  std::vector<Utterance> data = TestData(config);
  CheckDataFitsModel(data, params.Dim(), params.VocabSize());
  if (static_cast<int64_t>(data.size()) > config.bench.max_utterances)
    data.resize(config.bench.max_utterances);
  std::vector<ReductionMode> modes =
      mode_names.empty()
          ? std::vector<ReductionMode>{ReductionMode::kNone, ReductionMode::kDecoder,
                                       ReductionMode::kEncoder}
          : ParseModes(mode_names, ReductionMode::kNone);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);
  BenchOptions options;
  options.warmup = config.bench.warmup;
  options.repeats = config.bench.repeats;
  options.threshold = config.decode.threshold;
  options.beam_size = config.decode.beam_size;
  options.greedy = config.decode.greedy;
  const std::vector<ModeBench> rows = BenchDecode(params, data, modes, options);
  WriteFile((dir / "decode_counters.csv").string(), DecodeCountersCsv(rows));
  WriteFile((dir / "decode_timing.csv").string(), DecodeTimingCsv(rows));
  out << DecodeCountersCsv(rows) << "\n" << DecodeTimingCsv(rows);

  if (!skip_loss) {
    LossBenchConfig lc;
    lc.frames = config.bench.loss_frames;
    lc.labels = config.bench.loss_labels;
    lc.vocab = config.bench.loss_vocab;
    lc.height = config.bench.loss_height;
    lc.strip_width = config.train.strip_width;
    lc.seed = config.bench.seed;
    const LossBench lb = BenchLoss(lc, config.bench.warmup, config.bench.repeats);
    WriteFile((dir / "loss_counters.csv").string(), LossCountersCsv(lb));
    WriteFile((dir / "loss_timing.csv").string(), LossTimingCsv(lb));
    out << "\n" << LossCountersCsv(lb) << "\n" << LossTimingCsv(lb);
  }
  return kExitOk;
}

int CmdAlign(const RunConfig &config, const std::string &out_path, std::ostream &out) {
  const ToyModelParams params = LoadCheckpoint(config.paths.checkpoint);
  const std::vector<Utterance> data = TestData(config);
  std::string dump;
  for (const Utterance &utt : data) {
    nlohmann::json j;
    j["id"] = utt.id;
    j["labels"] = utt.labels;
    try {
      CheckDataFitsModel({utt}, params.Dim(), params.VocabSize());
      const EncoderOutput enc =
          Encode(params, utt.frames, {config.decode.mode, config.decode.threshold, true});
      const CtcAlignment align = CtcForcedAlignment(enc.ctc, utt.labels);
      j["symbols"] = align.symbols;
      j["trace"] = align.trace;
      j["log_prob"] = CtcPathLogProb(enc.ctc, align.symbols);
      if (!utt.truth.empty()) {
        const std::vector<int32_t> truth_trace = TruthTrace(utt.truth);
        j["truth_trace"] = truth_trace;
        j["matches_truth"] = truth_trace == align.trace;
      }
    } catch (const Error &e) {
      j["error"] = e.what();
    }
    dump += j.dump() + "\n";
  }
  if (out_path.empty() || out_path == "-") {
    out << dump;
  } else {
    WriteFile(out_path, dump);
  }
  return kExitOk;
}

int CmdSynth(const RunConfig &config, const std::string &train_out,
             const std::string &test_out, std::ostream &out) {
  const SynthDataset train = GenerateSynthDataset(config.synth);
  WriteDataset(train_out, train.utterances);
  out << "split,path,utterances,frames,blank_fraction\n";
  out << fmt::format("train,{},{},{},{}\n", train_out, train.utterances.size(),
                     train.total_frames, FormatDouble(train.BlankFraction()));
  if (!test_out.empty()) {
    SynthConfig sc = config.synth;
    sc.num_utterances = config.test_utterances;
    sc.seed = config.test_seed;
    const SynthDataset test = GenerateSynthDataset(sc);
    WriteDataset(test_out, test.utterances);
    out << fmt::format("test,{},{},{},{}\n", test_out, test.utterances.size(),
                       test.total_frames, FormatDouble(test.BlankFraction()));
  }
  return kExitOk;
}

}  // namespace

int RunCli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Co-trained CTC and transducer toolkit: loss checks, training, "
               "frame-skipping decoding and benchmarks"};
  app.require_subcommand(1);

  std::string scope = "all";
  uint64_t verify_seed = 1;
  int32_t seeds_per_shape = 100;
  std::string corrupt;
  bool verify_timings = false;
  CLI::App *verify = app.add_subcommand("verify", "Run oracle and gradient checks");
  verify->add_option("--scope", scope, "ctc, rnnt, pruning, gradients or all");
  verify->add_option("--seed", verify_seed, "Seed of the check instances");
  verify->add_option("--seeds-per-shape", seeds_per_shape,
                     "Oracle instances per (T, U, V)");
  verify->add_option("--corrupt", corrupt,
                     "Perturb the analytic gradient of this check");
  verify->add_flag("--timings", verify_timings, "Print check durations to stderr");

  CommonFlags train_flags, eval_flags, bench_flags, align_flags, synth_flags,
      dump_flags;
  CLI::App *train = app.add_subcommand("train", "Train a model and write a checkpoint");
  AddCommonFlags(train, &train_flags);
  std::optional<std::string> metrics_path;
  train->add_option("--metrics", metrics_path, "Per-step metrics CSV");

  CLI::App *eval = app.add_subcommand("eval", "Decode a dataset and score it");
  AddCommonFlags(eval, &eval_flags);
  std::vector<std::string> eval_modes;
  std::string hyps_path;
  std::optional<double> min_accuracy;
  eval->add_option("--modes", eval_modes, "Reduction modes to compare")->delimiter(',');
  eval->add_option("--hyps", hyps_path, "Write hypotheses as JSON lines");
  eval->add_option("--min-accuracy", min_accuracy,
                   "Exit 1 if a mode's sequence accuracy is lower");

  CLI::App *bench = app.add_subcommand("bench", "Time encoder, decoder and losses");
  AddCommonFlags(bench, &bench_flags);
  std::vector<std::string> bench_modes;
  std::string bench_dir = ".";
  bool skip_loss = false;
  bench->add_option("--modes", bench_modes, "Reduction modes")->delimiter(',');
  bench->add_option("--out-dir", bench_dir, "Directory of the CSV reports");
  bench->add_flag("--skip-loss", skip_loss, "Skip the loss benchmark");

  CLI::App *align = app.add_subcommand("align", "Dump CTC forced alignments");
  AddCommonFlags(align, &align_flags);
  std::string align_out;
  align->add_option("-o,--out", align_out, "Output JSON lines, - for stdout");

  CLI::App *synth = app.add_subcommand("synth", "Write synthetic datasets");
  AddCommonFlags(synth, &synth_flags);
  std::string synth_train = "train.jsonl";
  std::string synth_test;
  synth->add_option("-o,--out", synth_train, "Training set path");
  synth->add_option("--test-out", synth_test, "Held-out set path");

  CLI::App *config_cmd = app.add_subcommand("config", "Configuration utilities");
  config_cmd->require_subcommand(1);
  CLI::App *dump = config_cmd->add_subcommand("dump", "Print every key and value");
  AddCommonFlags(dump, &dump_flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (verify->parsed())
      return CmdVerify(scope, verify_seed, seeds_per_shape, corrupt, verify_timings,
                       out, err);
    if (train->parsed()) {
      RunConfig config = ResolveConfig(train_flags, true);
      if (metrics_path) config.paths.metrics = *metrics_path;
      return CmdTrain(config, out);
    }
    if (eval->parsed())
      return CmdEval(ResolveConfig(eval_flags, false), eval_modes, hyps_path,
                     min_accuracy, out, err);
    if (bench->parsed())
      return CmdBench(ResolveConfig(bench_flags, false), bench_modes, bench_dir,
                      skip_loss, out);
    if (align->parsed())
      return CmdAlign(ResolveConfig(align_flags, false), align_out, out);
    if (synth->parsed())
      return CmdSynth(ResolveConfig(synth_flags, true), synth_train, synth_test, out);
    if (dump->parsed()) {
      out << DumpRunConfig(ResolveConfig(dump_flags, true));
      return kExitOk;
    }
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace ctcguide
