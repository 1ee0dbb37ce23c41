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

#include "ctcguide/io.h"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ctcguide/error.h"
#include "json.hpp"

namespace ctcguide {
namespace {

constexpr char kMatrixMagic[4] = {'T', 'K', 'M', 'X'};
constexpr char kCheckpointMagic[4] = {'T', 'K', 'C', 'K'};

void PutU32(std::string *out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void PutF64(std::string *out, double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i)
    out->push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

void PutMatrixBody(std::string *out, const Matrix &m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) PutF64(out, m.data()[i]);
}

uint32_t ToU32(Eigen::Index n, const char *what) {
  if (n < 0 || n > static_cast<Eigen::Index>(UINT32_MAX))
    throw Error(std::string(what) + " does not fit in 32 bits");
  return static_cast<uint32_t>(n);
}

class Reader {
 public:
  Reader(const std::string &bytes, std::string what)
      : bytes_(bytes), what_(std::move(what)) {}

  bool AtEnd() const { return pos_ == bytes_.size(); }
  size_t Remaining() const { return bytes_.size() - pos_; }

  void Need(size_t n) const {
    if (Remaining() < n)
      throw Error(what_ + ": truncated at byte " + std::to_string(pos_));
  }
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  double F64() {
    Need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
              << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }
  std::string Bytes(size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Matrix MatrixBody(uint32_t rows, uint32_t cols) {
    const uint64_t count = static_cast<uint64_t>(rows) * cols;
    if (count > Remaining() / 8)
      throw Error(what_ + ": truncated matrix of " + std::to_string(rows) + "x" +
                  std::to_string(cols));
    Matrix m(rows, cols);
    for (uint64_t i = 0; i < count; ++i) m.data()[i] = F64();
    return m;
  }

 private:
  const std::string &bytes_;
  std::string what_;
  size_t pos_ = 0;
};

void CheckMagic(Reader *r, const char (&magic)[4], const std::string &what) {
  if (r->Remaining() < 4 || r->Bytes(4) != std::string(magic, 4))
    throw Error(what + ": bad magic");
}

}  // namespace

std::string ReadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteFile(const std::string &path, const std::string &bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string EncodeMatrixFile(const Matrix &m) {
  std::string out(kMatrixMagic, 4);
  PutU32(&out, kMatrixFileVersion);
  PutU32(&out, ToU32(m.rows(), "rows"));
  PutU32(&out, ToU32(m.cols(), "cols"));
  PutMatrixBody(&out, m);
  return out;
}

Matrix DecodeMatrixFile(const std::string &bytes) {
  Reader r(bytes, "matrix file");
  CheckMagic(&r, kMatrixMagic, "matrix file");
  const uint32_t version = r.U32();
  if (version != kMatrixFileVersion)
    throw Error("matrix file: unsupported version " + std::to_string(version));
  const uint32_t rows = r.U32();
  const uint32_t cols = r.U32();
  const uint64_t expected = 16 + 8 * static_cast<uint64_t>(rows) * cols;
  if (bytes.size() != expected)
    throw Error("matrix file: size " + std::to_string(bytes.size()) +
                " != 16 + 8*" + std::to_string(rows) + "*" +
                std::to_string(cols));
  return r.MatrixBody(rows, cols);
}

void WriteMatrixFile(const std::string &path, const Matrix &m) {
  WriteFile(path, EncodeMatrixFile(m));
}

Matrix ReadMatrixFile(const std::string &path) {
  try {
    return DecodeMatrixFile(ReadFile(path));
  } catch (const IoError &) {
    throw;
  } catch (const Error &e) {
    throw Error(path + ": " + e.what());
  }
}

std::string EncodeCheckpoint(
    const std::vector<std::pair<std::string, const Matrix *>> &blocks) {
  std::string out(kCheckpointMagic, 4);
  PutU32(&out, kCheckpointVersion);
  for (const auto &[name, m] : blocks) {
    PutU32(&out, ToU32(static_cast<Eigen::Index>(name.size()), "block name"));
    out += name;
    PutU32(&out, ToU32(m->rows(), "rows"));
    PutU32(&out, ToU32(m->cols(), "cols"));
    PutMatrixBody(&out, *m);
  }
  return out;
}

std::vector<std::pair<std::string, Matrix>> DecodeCheckpoint(
    const std::string &bytes) {
  Reader r(bytes, "checkpoint");
  CheckMagic(&r, kCheckpointMagic, "checkpoint");
  const uint32_t version = r.U32();
  if (version != kCheckpointVersion)
    throw Error("checkpoint: unsupported version " + std::to_string(version));
  std::vector<std::pair<std::string, Matrix>> blocks;
  while (!r.AtEnd()) {
    std::string name = r.Bytes(r.U32());
    const uint32_t rows = r.U32();
    const uint32_t cols = r.U32();
    blocks.emplace_back(std::move(name), r.MatrixBody(rows, cols));
  }
  return blocks;
}

void SaveCheckpoint(const std::string &path, const ToyModelParams &params) {
  WriteFile(path, EncodeCheckpoint(params.Blocks()));
}

ToyModelParams LoadCheckpoint(const std::string &path) {
  try {
    return ParamsFromBlocks(DecodeCheckpoint(ReadFile(path)));
  } catch (const IoError &) {
    throw;
  } catch (const Error &e) {
    throw Error(path + ": " + e.what());
  }
}

std::vector<Utterance> ReadDataset(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::vector<Utterance> data;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      Utterance utt;
      utt.id = j.contains("id") ? j.at("id").get<std::string>()
                                : "line" + std::to_string(line_no);
      utt.labels = j.at("labels").get<LabelSequence>();
      if (j.contains("frames_file")) {
        utt.frames = ReadMatrixFile(
            (base / j.at("frames_file").get<std::string>()).string());
      } else {
        const auto rows = j.at("frames").get<std::vector<std::vector<double>>>();
        const size_t dim = rows.empty() ? 0 : rows.front().size();
        utt.frames.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(dim));
        for (size_t t = 0; t < rows.size(); ++t) {
          if (rows[t].size() != dim) throw Error("ragged frames");
          for (size_t c = 0; c < dim; ++c) utt.frames(t, c) = rows[t][c];
        }
      }
      if (j.contains("truth")) utt.truth = j.at("truth").get<std::vector<int32_t>>();
      data.push_back(std::move(utt));
    } catch (const nlohmann::json::exception &e) {
      throw Error(where + ": " + e.what());
    } catch (const IoError &) {
      throw;
    } catch (const Error &e) {
      throw Error(where + ": " + e.what());
    }
  }
  return data;
}

void WriteDataset(const std::string &path, const std::vector<Utterance> &data) {
  std::string out;
  for (const Utterance &utt : data) {
    nlohmann::json j;
    j["id"] = utt.id;
    j["labels"] = utt.labels;
    std::vector<std::vector<double>> rows(utt.frames.rows());
    for (Eigen::Index t = 0; t < utt.frames.rows(); ++t)
      rows[t].assign(utt.frames.row(t).data(),
                     utt.frames.row(t).data() + utt.frames.cols());
    j["frames"] = rows;
    if (!utt.truth.empty()) j["truth"] = utt.truth;
    out += j.dump();
    out += '\n';
  }
  WriteFile(path, out);
}

}  // namespace ctcguide
