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

// Beam search, top-k sampling, nucleus sampling with top-k, and
// entropy-penalized beam search over any LanguageModel, plus the N-fold
// sampler that builds candidate sets.
//
// Every decoder records, for each emitted token, the natural-log probability
// under the model's untruncated next-token distribution, so a candidate's
// log-probs always re-evaluate exactly under the model that produced it.

#ifndef CRR_DECODERS_H_
#define CRR_DECODERS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crr/language_model.h"
#include "crr/ngram_model.h"
#include "crr/rng.h"

namespace crr {

enum class DecodeMethod { kBeam, kTopK, kNucleusTopK, kUncertaintyBeam };

// "beam", "topk", "nucleus", "ubeam".
std::string_view DecodeMethodName(DecodeMethod method);
// Also accepts the long forms "nucleus_topk" and "uncertainty_beam".
DecodeMethod ParseDecodeMethod(std::string_view name);
bool IsBeamFamily(DecodeMethod method);

struct DecodeConfig {
  DecodeMethod method = DecodeMethod::kNucleusTopK;
  int beam_size = 5;
  double temperature = 1.0;
  int top_k = 50;
  double top_p = 0.9;
  double uncertainty_lambda = 0.2;
  int max_new_tokens = 100;
  std::uint64_t seed = 0;
  // Gumbel noise scale added to beam expansion scores for candidates other
  // than the first when building a candidate set. 0 keeps every beam
  // candidate identical.
  double beam_perturbation = 0.0;

  // Throws ArgumentError naming the first violated field.
  void Validate() const;
};

struct Candidate {
  std::vector<TokenId> token_ids;
  std::vector<std::string> tokens;  // includes a trailing </s> if emitted
  std::string text;                 // detokenized, without </s>
  std::vector<double> token_logprobs;
  DecodeMethod method = DecodeMethod::kNucleusTopK;
  std::uint64_t seed = 0;
  std::size_t index = 0;

  bool operator==(const Candidate&) const = default;
};

struct CandidateSet {
  std::string example_id;
  ConditioningContext context;
  std::vector<Candidate> candidates;

  bool operator==(const CandidateSet&) const = default;
};

// Shannon entropy in nats.
double Entropy(std::span<const double> probs);

// Token ids of the `k` most probable entries, most probable first; equal
// probabilities order by lower id.
std::vector<TokenId> TopKSupport(std::span<const double> probs, int k);

// Smallest probability-sorted prefix with cumulative mass >= top_p,
// truncated to at most `k` entries. Never empty.
std::vector<TokenId> NucleusTopKSupport(std::span<const double> probs,
                                        double top_p, int k);

// probs[support]^(1/temperature), renormalized.
std::vector<double> TemperedWeights(std::span<const double> probs,
                                    std::span<const TokenId> support,
                                    double temperature);

// Picks support[i] with probability weights[i] (weights sum to one).
TokenId SampleFrom(std::span<const TokenId> support,
                   std::span<const double> weights, Rng& rng);

Candidate BeamSearch(const LanguageModel& lm, const DecodeConfig& config);
Candidate UncertaintyAwareBeamSearch(const LanguageModel& lm,
                                     const DecodeConfig& config);
Candidate TopKSample(const LanguageModel& lm, const DecodeConfig& config,
                     Rng& rng);
Candidate NucleusTopKSample(const LanguageModel& lm,
                            const DecodeConfig& config, Rng& rng);
Candidate GreedyDecode(const LanguageModel& lm, int max_new_tokens);

// Dispatches on config.method. `perturb` enables beam_perturbation noise.
Candidate Decode(const LanguageModel& lm, const DecodeConfig& config,
                 Rng& rng, bool perturb = false);

// Draws `n_candidates` independent decodes. Candidate i uses the stream
// seeded by CandidateSeed(base_seed, example_id, i). Beam-family methods are
// deterministic, so their candidates coincide unless beam_perturbation > 0.
CandidateSet SampleCandidateSet(const NgramModel& model,
                                const ConditioningContext& context,
                                std::string example_id,
                                const DecodeConfig& config,
                                std::size_t n_candidates,
                                std::uint64_t base_seed);

// Fills tokens/text of a candidate from its token ids.
void RenderCandidate(const NgramModel& model, Candidate& candidate);

}  // namespace crr

#endif  // CRR_DECODERS_H_
