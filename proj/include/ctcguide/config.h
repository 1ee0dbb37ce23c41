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

// Run configuration for the command line tool, stored as an INI file with
// sections [model], [train], [synth], [decode], [paths] and [bench].
// Unknown sections and keys are errors.

#ifndef CTCGUIDE_CONFIG_H_
#define CTCGUIDE_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ctcguide/decode.h"
#include "ctcguide/model.h"

namespace ctcguide {

struct PathsConfig {
  std::string train_data;  // JSONL; empty means synthesize from [synth]
  std::string test_data;   // JSONL; empty means synthesize a held-out set
  std::string checkpoint = "model.ckpt";
  std::string metrics = "train_metrics.csv";
};

struct BenchConfig {
  int32_t warmup = 3;
  int32_t repeats = 11;
  int32_t max_utterances = 50;
  int32_t loss_frames = 400;
  int32_t loss_labels = 100;
  int32_t loss_vocab = 64;
  int32_t loss_height = 25;
  uint64_t seed = 1;

  void Validate() const;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
  int32_t test_utterances = 400;  // [synth] held-out set size
  uint64_t test_seed = 2;         // [synth] held-out sampling seed
  DecodeConfig decode;
  PathsConfig paths;
  BenchConfig bench;

  void Validate() const;
};

RunConfig ParseRunConfig(const std::string &text);
RunConfig LoadRunConfig(const std::string &path);

// Every key with its current value, in a form ParseRunConfig accepts.
std::string DumpRunConfig(const RunConfig &config);

// Sets "section.key" from its text form, with the same checks as parsing.
void SetConfigValue(RunConfig *config, const std::string &dotted_key,
                    const std::string &value);

std::vector<std::string> ConfigKeys();

// Shortest text that parses back to the same double.
std::string FormatDouble(double v);

}  // namespace ctcguide

#endif  // CTCGUIDE_CONFIG_H_
