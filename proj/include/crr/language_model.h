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

#ifndef CRR_LANGUAGE_MODEL_H_
#define CRR_LANGUAGE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace crr {

using TokenId = std::uint32_t;

// Autoregressive next-token source consumed by every decoder. The prefix holds
// the response tokens generated so far; any conditioning input is bound into
// the implementation.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual TokenId eos() const = 0;

  // Probability vector of length vocab_size(), strictly positive, summing
  // to one.
  virtual std::vector<double> NextTokenDistribution(
      std::span<const TokenId> prefix) const = 0;
};

}  // namespace crr

#endif  // CRR_LANGUAGE_MODEL_H_
