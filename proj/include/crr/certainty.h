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

// Sequence-level certainty of response candidates.
//
// Probabilistic certainty is the arithmetic mean of a candidate's per-token
// natural-log probabilities. Semantic certainty is the agreement score
//
//   AS(i) = sum_{j != i} Entailment(s_i, s_j)
//
// with premise s_i and hypothesis s_j. The self pair is excluded unless
// requested.

#ifndef CRR_CERTAINTY_H_
#define CRR_CERTAINTY_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crr/decoders.h"

namespace crr {

struct CertaintyScores {
  double probabilistic = 0.0;
  std::optional<double> semantic;

  bool operator==(const CertaintyScores&) const = default;
};

struct TextPair {
  std::string_view premise;
  std::string_view hypothesis;
};

// Maps an ordered text pair to the probability that the premise entails the
// hypothesis. Implementations must be deterministic and thread-safe.
class EntailmentProvider {
 public:
  virtual ~EntailmentProvider() = default;

  virtual std::string tag() const = 0;
  virtual double Score(std::string_view premise,
                       std::string_view hypothesis) const = 0;
  // Results in request order. The default scores pairs one at a time.
  virtual std::vector<double> ScoreBatch(std::span<const TextPair> pairs) const;
  // Pairs per ScoreBatch call when filling a matrix.
  virtual std::size_t batch_size() const { return 64; }
};

// Share of the hypothesis' content words that also occur in the premise.
double LexicalEntailmentProxy(std::string_view premise,
                              std::string_view hypothesis);

class LexicalEntailmentProvider : public EntailmentProvider {
 public:
  std::string tag() const override { return "lexical"; }
  double Score(std::string_view premise,
               std::string_view hypothesis) const override {
    return LexicalEntailmentProxy(premise, hypothesis);
  }
  // Cheap enough to score a whole matrix on the calling thread.
  std::size_t batch_size() const override { return std::size_t{1} << 20; }
};

struct EntailmentMatrix {
  std::size_t n = 0;
  std::vector<double> entries;  // row-major, entries[i * n + j]
  std::string provider_tag;

  double at(std::size_t premise, std::size_t hypothesis) const {
    return entries[premise * n + hypothesis];
  }
  bool operator==(const EntailmentMatrix&) const = default;
};

// Mean of `token_logprobs`; throws ArgumentError when empty.
double ProbabilisticCertainty(std::span<const double> token_logprobs);
double ProbabilisticCertainty(const Candidate& candidate);

// entries[i][j] = provider.Score(text_i, text_j) for every ordered pair,
// diagonal included. At most `max_in_flight` batches are outstanding at
// once; the result does not depend on scheduling. Remote failures surface as
// PairScoringError naming the first pair of the failed batch, values outside
// [0, 1] as ContractViolation.
EntailmentMatrix BuildEntailmentMatrix(const CandidateSet& set,
                                       const EntailmentProvider& provider,
                                       std::size_t max_in_flight = 8);
EntailmentMatrix BuildEntailmentMatrix(std::span<const std::string> texts,
                                       const EntailmentProvider& provider,
                                       std::size_t max_in_flight = 8);

// Row sums of the matrix, skipping the diagonal unless `include_self`.
std::vector<double> AgreementScores(const EntailmentMatrix& matrix,
                                    bool include_self = false);

}  // namespace crr

#endif  // CRR_CERTAINTY_H_
