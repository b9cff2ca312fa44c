// Copyright 2026 The CRR Authors.
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

#ifndef CRR_ERRORS_H_
#define CRR_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crr {

// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kConfig = 2,
  kData = 3,
  kRemote = 4,
  kNumerical = 5,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const { return ExitCode::kData; }
};

// Invalid argument to a library call (bad order, alpha, empty sequence, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kConfig; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kConfig; }
};

// Malformed input data, unjoinable ids, empty corpora.
class DataError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kNumerical; }
};

// A provider or critic returned a value outside its declared contract.
class ContractViolation : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kRemote; }
};

// Transport failure talking to a remote scorer. Always safe to retry.
class RemoteError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const override { return ExitCode::kRemote; }
  bool retriable() const { return true; }
};

// Remote failure while scoring entry (premise_index, hypothesis_index) of an
// entailment matrix.
class PairScoringError : public RemoteError {
 public:
  PairScoringError(std::size_t premise_index, std::size_t hypothesis_index,
                   const std::string& what)
      : RemoteError("pair (" + std::to_string(premise_index) + ", " +
                    std::to_string(hypothesis_index) + "): " + what),
        premise_index_(premise_index),
        hypothesis_index_(hypothesis_index) {}

  std::size_t premise_index() const { return premise_index_; }
  std::size_t hypothesis_index() const { return hypothesis_index_; }

 private:
  std::size_t premise_index_;
  std::size_t hypothesis_index_;
};

}  // namespace crr

#endif  // CRR_ERRORS_H_
