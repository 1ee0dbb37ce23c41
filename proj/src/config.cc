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

#include "ctcguide/config.h"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ctcguide/error.h"
#include "ctcguide/io.h"

namespace ctcguide {
namespace {

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig &)> get;
  std::function<void(RunConfig *, const std::string &)> set;
};

template <typename T>
T ParseInteger(const std::string &s) {
  T v{};
  const char *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    throw ConfigError("expected an integer, got '" + s + "'");
  return v;
}

double ParseDouble(const std::string &s) {
  double v = 0.0;
  const char *end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || s.empty() || !std::isfinite(v))
    throw ConfigError("expected a finite number, got '" + s + "'");
  return v;
}

bool ParseBool(const std::string &s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

std::optional<int32_t> ParseHeight(const std::string &s) {
  if (s == "inf") return std::nullopt;
  return ParseInteger<int32_t>(s);
}

std::string FormatHeight(const std::optional<int32_t> &h) {
  return h ? std::to_string(*h) : "inf";
}

// Builds a field over a member reached through an accessor.
template <typename V>
Field MakeField(std::string section, std::string key,
                std::function<V &(RunConfig &)> ref,
                std::function<std::string(const V &)> format,
                std::function<V(const std::string &)> parse) {
  Field f;
  f.section = std::move(section);
  f.key = std::move(key);
  f.get = [ref, format](const RunConfig &c) {
    return format(ref(const_cast<RunConfig &>(c)));
  };
  f.set = [ref, parse](RunConfig *c, const std::string &s) { ref(*c) = parse(s); };
  return f;
}

#define CTCGUIDE_INT(section, member, T)                                    \
  MakeField<T>(#section, #member,                                          \
               [](RunConfig &c) -> T & { return c.section.member; },       \
               [](const T &v) { return std::to_string(v); },                \
               [](const std::string &s) { return ParseInteger<T>(s); })
#define CTCGUIDE_DOUBLE(section, member)                                    \
  MakeField<double>(#section, #member,                                     \
                    [](RunConfig &c) -> double & { return c.section.member; }, \
                    [](const double &v) { return FormatDouble(v); },        \
                    [](const std::string &s) { return ParseDouble(s); })
#define CTCGUIDE_BOOL(section, member)                                      \
  MakeField<bool>(#section, #member,                                       \
                  [](RunConfig &c) -> bool & { return c.section.member; }, \
                  [](const bool &v) { return std::string(v ? "true" : "false"); }, \
                  [](const std::string &s) { return ParseBool(s); })
#define CTCGUIDE_STRING(section, member)                                    \
  MakeField<std::string>(                                                  \
      #section, #member,                                                   \
      [](RunConfig &c) -> std::string & { return c.section.member; },      \
      [](const std::string &v) { return v; },                              \
      [](const std::string &s) { return s; })
#define CTCGUIDE_MODE(section, member)                                      \
  MakeField<ReductionMode>(                                                \
      #section, #member,                                                   \
      [](RunConfig &c) -> ReductionMode & { return c.section.member; },    \
      [](const ReductionMode &v) { return ReductionModeName(v); },         \
      [](const std::string &s) { return ParseReductionMode(s); })

const std::vector<Field> &Fields() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(CTCGUIDE_INT(model, dim, int32_t));
    f.push_back(CTCGUIDE_INT(model, vocab_size, int32_t));
    f.push_back(CTCGUIDE_INT(model, pred_dim, int32_t));
    f.push_back(CTCGUIDE_INT(model, shared_layers, int32_t));
    f.push_back(CTCGUIDE_INT(model, rest_layers, int32_t));
    f.push_back(MakeField<PredictorKind>(
        "model", "predictor",
        [](RunConfig &c) -> PredictorKind & { return c.model.predictor; },
        [](const PredictorKind &v) { return PredictorKindName(v); },
        [](const std::string &s) { return ParsePredictorKind(s); }));
    f.push_back(CTCGUIDE_INT(model, seed, uint64_t));

    f.push_back(CTCGUIDE_DOUBLE(train, ctc_weight));
    f.push_back(CTCGUIDE_DOUBLE(train, rnnt_weight));
    f.push_back(CTCGUIDE_DOUBLE(train, threshold));
    f.push_back(CTCGUIDE_MODE(train, mode));
    f.push_back(CTCGUIDE_INT(train, strip_width, int32_t));
    f.push_back(MakeField<std::optional<int32_t>>(
        "train", "height",
        [](RunConfig &c) -> std::optional<int32_t> & { return c.train.height; },
        [](const std::optional<int32_t> &v) { return FormatHeight(v); },
        [](const std::string &s) { return ParseHeight(s); }));
    f.push_back(CTCGUIDE_DOUBLE(train, learning_rate));
    f.push_back(CTCGUIDE_DOUBLE(train, lr_decay));
    f.push_back(CTCGUIDE_INT(train, epochs, int32_t));
    f.push_back(CTCGUIDE_INT(train, batch_size, int32_t));
    f.push_back(CTCGUIDE_INT(train, seed, uint64_t));

    f.push_back(CTCGUIDE_INT(synth, vocab_size, int32_t));
    f.push_back(CTCGUIDE_INT(synth, num_utterances, int32_t));
    f.push_back(CTCGUIDE_INT(synth, dim, int32_t));
    f.push_back(CTCGUIDE_INT(synth, min_tokens, int32_t));
    f.push_back(CTCGUIDE_INT(synth, max_tokens, int32_t));
    f.push_back(CTCGUIDE_INT(synth, min_token_frames, int32_t));
    f.push_back(CTCGUIDE_INT(synth, max_token_frames, int32_t));
    f.push_back(CTCGUIDE_INT(synth, min_gap_frames, int32_t));
    f.push_back(CTCGUIDE_INT(synth, max_gap_frames, int32_t));
    f.push_back(CTCGUIDE_DOUBLE(synth, noise));
    f.push_back(CTCGUIDE_BOOL(synth, allow_repeats));
    f.push_back(CTCGUIDE_INT(synth, seed, uint64_t));
    f.push_back(CTCGUIDE_INT(synth, prototype_seed, uint64_t));
    f.push_back(MakeField<int32_t>(
        "synth", "test_utterances",
        [](RunConfig &c) -> int32_t & { return c.test_utterances; },
        [](const int32_t &v) { return std::to_string(v); },
        [](const std::string &s) { return ParseInteger<int32_t>(s); }));
    f.push_back(MakeField<uint64_t>(
        "synth", "test_seed",
        [](RunConfig &c) -> uint64_t & { return c.test_seed; },
        [](const uint64_t &v) { return std::to_string(v); },
        [](const std::string &s) { return ParseInteger<uint64_t>(s); }));

    f.push_back(CTCGUIDE_MODE(decode, mode));
    f.push_back(CTCGUIDE_DOUBLE(decode, threshold));
    f.push_back(CTCGUIDE_INT(decode, beam_size, int32_t));
    f.push_back(CTCGUIDE_BOOL(decode, greedy));

    f.push_back(CTCGUIDE_STRING(paths, train_data));
    f.push_back(CTCGUIDE_STRING(paths, test_data));
    f.push_back(CTCGUIDE_STRING(paths, checkpoint));
    f.push_back(CTCGUIDE_STRING(paths, metrics));

    f.push_back(CTCGUIDE_INT(bench, warmup, int32_t));
    f.push_back(CTCGUIDE_INT(bench, repeats, int32_t));
    f.push_back(CTCGUIDE_INT(bench, max_utterances, int32_t));
    f.push_back(CTCGUIDE_INT(bench, loss_frames, int32_t));
    f.push_back(CTCGUIDE_INT(bench, loss_labels, int32_t));
    f.push_back(CTCGUIDE_INT(bench, loss_vocab, int32_t));
    f.push_back(CTCGUIDE_INT(bench, loss_height, int32_t));
    f.push_back(CTCGUIDE_INT(bench, seed, uint64_t));
    return f;
  }();
  return fields;
}

#undef CTCGUIDE_INT
#undef CTCGUIDE_DOUBLE
#undef CTCGUIDE_BOOL
#undef CTCGUIDE_STRING
#undef CTCGUIDE_MODE

const Field *FindField(const std::string &section, const std::string &key) {
  for (const Field &f : Fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

void SetField(RunConfig *config, const Field &field, const std::string &value) {
  try {
    field.set(config, value);
  } catch (const ConfigError &e) {
    throw ConfigError(field.section + "." + field.key + ": " + e.what());
  }
}

}  // namespace

std::string FormatDouble(double v) { return fmt::format("{}", v); }

void BenchConfig::Validate() const {
  if (warmup < 0) throw ConfigError("bench warmup must be >= 0");
  if (repeats < 1) throw ConfigError("bench repeats must be >= 1");
  if (max_utterances < 1) throw ConfigError("bench max_utterances must be >= 1");
  if (loss_frames < 1 || loss_labels < 0 || loss_vocab < 1)
    throw ConfigError("bench loss grid sizes must be positive");
  if (loss_height < 1) throw ConfigError("bench loss_height must be >= 1");
}

void RunConfig::Validate() const {
  model.Validate();
  train.Validate();
  synth.Validate();
  if (test_utterances < 0) throw ConfigError("test_utterances must be >= 0");
  if (!(decode.threshold > 0.0 && decode.threshold < 1.0))
    throw ConfigError("decode threshold must lie in (0, 1)");
  if (decode.beam_size < 1) throw ConfigError("beam_size must be >= 1");
  bench.Validate();
}

RunConfig ParseRunConfig(const std::string &text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig config;
  std::set<std::string> sections;
  for (const Field &f : Fields()) sections.insert(f.section);
  for (const auto &[section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError("config: key '" + section + "' outside any section");
    if (!sections.count(section))
      throw ConfigError("config: unknown section [" + section + "]");
    for (const auto &[key, value] : body) {
      const Field *field = FindField(section, key);
      if (field == nullptr)
        throw ConfigError("config: unknown key '" + key + "' in [" + section +
                          "]");
      SetField(&config, *field, value.data());
    }
  }
  config.Validate();
  return config;
}

RunConfig LoadRunConfig(const std::string &path) {
  return ParseRunConfig(ReadFile(path));
}

std::string DumpRunConfig(const RunConfig &config) {
  std::string out;
  std::string current;
  for (const Field &f : Fields()) {
    if (f.section != current) {
      if (!current.empty()) out += '\n';
      out += "[" + f.section + "]\n";
      current = f.section;
    }
    out += f.key + " = " + f.get(config) + "\n";
  }
  return out;
}

void SetConfigValue(RunConfig *config, const std::string &dotted_key,
                    const std::string &value) {
  const size_t dot = dotted_key.find('.');
  const Field *field =
      dot == std::string::npos
          ? nullptr
          : FindField(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (field == nullptr) throw ConfigError("unknown config key '" + dotted_key + "'");
  SetField(config, *field, value);
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const Field &f : Fields()) keys.push_back(f.section + "." + f.key);
  return keys;
}

}  // namespace ctcguide
