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

#ifndef CTCGUIDE_ERROR_H_
#define CTCGUIDE_ERROR_H_

#include <stdexcept>
#include <string>

namespace ctcguide {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

// Bad user-supplied configuration (thresholds, widths, config files).
// The command line tool maps this to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string &what) : Error(what) {}
};

// No alignment path exists between the frames and the labels.
class InfeasibleAlignment : public Error {
 public:
  explicit InfeasibleAlignment(const std::string &what)
      : Error("infeasible alignment: " + what) {}
};

// Shapes of two objects that must agree do not.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string &what)
      : Error("shape mismatch: " + what) {}
};

}  // namespace ctcguide

#endif  // CTCGUIDE_ERROR_H_
