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

// On-disk formats: binary matrices, checkpoints and JSON-lines datasets.
// Binary formats are little-endian regardless of the host.

#ifndef CTCGUIDE_IO_H_
#define CTCGUIDE_IO_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ctcguide/error.h"
#include "ctcguide/model.h"
#include "ctcguide/numerics.h"

namespace ctcguide {

// Missing or unreadable files. The command line tool maps this to exit 2.
class IoError : public ConfigError {
 public:
  explicit IoError(const std::string &what) : ConfigError(what) {}
};

inline constexpr uint32_t kMatrixFileVersion = 1;
inline constexpr uint32_t kCheckpointVersion = 1;

// "TKMX", u32 version, u32 rows, u32 cols, rows*cols f64 row-major.
std::string EncodeMatrixFile(const Matrix &m);
Matrix DecodeMatrixFile(const std::string &bytes);
void WriteMatrixFile(const std::string &path, const Matrix &m);
Matrix ReadMatrixFile(const std::string &path);

// "TKCK", u32 version, then until EOF: u32 name length, name bytes,
// u32 rows, u32 cols, rows*cols f64 row-major.
std::string EncodeCheckpoint(
    const std::vector<std::pair<std::string, const Matrix *>> &blocks);
std::vector<std::pair<std::string, Matrix>> DecodeCheckpoint(
    const std::string &bytes);
void SaveCheckpoint(const std::string &path, const ToyModelParams &params);
ToyModelParams LoadCheckpoint(const std::string &path);

// One utterance per line: {"id", "labels", "frames"} or {"id", "labels",
// "frames_file"} where frames_file names a TKMX file relative to the
// dataset. "truth" (per-frame symbols) is optional.
std::vector<Utterance> ReadDataset(const std::string &path);
void WriteDataset(const std::string &path, const std::vector<Utterance> &data);

std::string ReadFile(const std::string &path);
void WriteFile(const std::string &path, const std::string &bytes);

}  // namespace ctcguide

#endif  // CTCGUIDE_IO_H_
