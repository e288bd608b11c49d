// Copyright 2026 The trizx Authors.
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

#ifndef TRIZX_ERROR_HPP_
#define TRIZX_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trizx {

// Caller broke a documented precondition (dimension mismatch, bad params).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Input data is malformed or inconsistent.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A line-oriented file failed to load. line() is 1-based, 0 if not tied to
// a particular line.
class LoadError : public DataError {
 public:
  LoadError(const std::string& what, std::size_t line)
      : DataError(line > 0 ? "line " + std::to_string(line) + ": " + what
                           : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Referential or uniqueness invariant broken (duplicate id, dangling id).
class IntegrityError : public DataError {
 public:
  using DataError::DataError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// LLM or embedding service failed after exhausting retries.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, int attempts = 1)
      : std::runtime_error(what), attempts_(attempts) {}

  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int epoch)
      : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

}  // namespace trizx

#endif  // TRIZX_ERROR_HPP_
