// Copyright 2026 The chartrans Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chartrans {

using Shape = std::vector<std::size_t>;

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Shape or dimension mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an op or data structure was violated.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised by the training loop when the loss stops being finite.
class NonFiniteLossError : public std::runtime_error {
 public:
  NonFiniteLossError(long step, double lr, std::size_t batch_id, double loss)
      : std::runtime_error(make_message(step, lr, batch_id, loss)),
        step_(step), lr_(lr), batch_id_(batch_id) {}

  long step() const noexcept { return step_; }
  double lr() const noexcept { return lr_; }
  std::size_t batch_id() const noexcept { return batch_id_; }

 private:
  static std::string make_message(long step, double lr, std::size_t batch_id,
                                  double loss) {
    std::ostringstream os;
    os << "non-finite loss " << loss << " at step " << step << " (lr " << lr
       << ", batch " << batch_id << ")";
    return os.str();
  }

  long step_;
  double lr_;
  std::size_t batch_id_;
};

}  // namespace chartrans
