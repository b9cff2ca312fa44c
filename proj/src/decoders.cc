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

#include "crr/decoders.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "crr/errors.h"

namespace crr {
namespace {

struct Hypothesis {
  std::vector<TokenId> ids;
  std::vector<double> logprobs;
  double score = 0.0;
};

struct Expansion {
  std::size_t parent;
  TokenId token;
  double score;
};

double MeanScore(const Hypothesis& h) {
  return h.score / static_cast<double>(h.ids.size());
}

// Beam search whose expansion score is
//   parent + log p(token) - lambda * H(step) [+ noise * Gumbel].
// Retention ranks by total score; the final pick ranks finished hypotheses
// by length-normalized score. Ties go to the lexicographically smallest
// token-id sequence.
Candidate RunBeam(const LanguageModel& lm, const DecodeConfig& config,
                  double lambda, Rng* noise_rng) {
  const std::size_t v = lm.vocab_size();
  const std::size_t width = static_cast<std::size_t>(config.beam_size);
  const double noise = noise_rng ? config.beam_perturbation : 0.0;

  std::vector<Hypothesis> alive(1);
  std::vector<Hypothesis> finished;
  std::vector<Expansion> expansions;

  for (int step = 0; step < config.max_new_tokens && !alive.empty(); ++step) {
    expansions.clear();
    expansions.reserve(alive.size() * v);
    std::vector<std::vector<double>> dists(alive.size());
    for (std::size_t p = 0; p < alive.size(); ++p) {
      dists[p] = lm.NextTokenDistribution(alive[p].ids);
      const double penalty = lambda > 0.0 ? lambda * Entropy(dists[p]) : 0.0;
      for (std::size_t t = 0; t < v; ++t) {
        double s = alive[p].score + std::log(dists[p][t]) - penalty;
        if (noise > 0.0) {
          const double u =
              (static_cast<double>(noise_rng->NextU64() >> 11) + 0.5) *
              0x1.0p-53;
          s += noise * -std::log(-std::log(u));
        }
        expansions.push_back({p, static_cast<TokenId>(t), s});
      }
    }
    auto better = [&](const Expansion& a, const Expansion& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) {
        const auto& pa = alive[a.parent].ids;
        const auto& pb = alive[b.parent].ids;
        if (pa != pb) return pa < pb;
      }
      return a.token < b.token;
    };
    const std::size_t keep = std::min(width, expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + keep,
                      expansions.end(), better);

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Expansion& e = expansions[i];
      Hypothesis h = alive[e.parent];
      h.ids.push_back(e.token);
      h.logprobs.push_back(std::log(dists[e.parent][e.token]));
      h.score = e.score;
      if (e.token == lm.eos()) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    alive = std::move(next);
  }
  for (auto& h : alive) finished.push_back(std::move(h));

  const Hypothesis* best = nullptr;
  for (const auto& h : finished) {
    if (best == nullptr) {
      best = &h;
      continue;
    }
    const double a = MeanScore(h);
    const double b = MeanScore(*best);
    if (a > b || (a == b && h.ids < best->ids)) best = &h;
  }
  Candidate c;
  c.token_ids = best->ids;
  c.token_logprobs = best->logprobs;
  c.method = config.method;
  c.seed = config.seed;
  return c;
}

template <typename SupportFn>
Candidate RunSampler(const LanguageModel& lm, const DecodeConfig& config,
                     Rng& rng, SupportFn support_of) {
  Candidate c;
  c.method = config.method;
  c.seed = config.seed;
  for (int step = 0; step < config.max_new_tokens; ++step) {
    const auto probs = lm.NextTokenDistribution(c.token_ids);
    const auto support = support_of(probs);
    const auto weights = TemperedWeights(probs, support, config.temperature);
    const TokenId pick = SampleFrom(support, weights, rng);
    c.token_ids.push_back(pick);
    c.token_logprobs.push_back(std::log(probs[pick]));
    if (pick == lm.eos()) break;
  }
  return c;
}

std::vector<TokenId> SortedPrefix(std::span<const double> probs,
                                  std::size_t k) {
  std::vector<TokenId> ids(probs.size());
  std::iota(ids.begin(), ids.end(), TokenId{0});
  k = std::min(k, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(),
                    [&](TokenId a, TokenId b) {
                      if (probs[a] != probs[b]) return probs[a] > probs[b];
                      return a < b;
                    });
  ids.resize(k);
  return ids;
}

}  // namespace

std::string_view DecodeMethodName(DecodeMethod method) {
  switch (method) {
    case DecodeMethod::kBeam:
      return "beam";
    case DecodeMethod::kTopK:
      return "topk";
    case DecodeMethod::kNucleusTopK:
      return "nucleus";
    case DecodeMethod::kUncertaintyBeam:
      return "ubeam";
  }
  return "unknown";
}

DecodeMethod ParseDecodeMethod(std::string_view name) {
  if (name == "beam") return DecodeMethod::kBeam;
  if (name == "topk") return DecodeMethod::kTopK;
  if (name == "nucleus" || name == "nucleus_topk") {
    return DecodeMethod::kNucleusTopK;
  }
  if (name == "ubeam" || name == "uncertainty_beam") {
    return DecodeMethod::kUncertaintyBeam;
  }
  throw ArgumentError("unknown decode method '" + std::string(name) +
                      "' (expected beam|topk|nucleus|ubeam)");
}

bool IsBeamFamily(DecodeMethod method) {
  return method == DecodeMethod::kBeam ||
         method == DecodeMethod::kUncertaintyBeam;
}

void DecodeConfig::Validate() const {
  if (beam_size < 1) throw ArgumentError("beam_size must be >= 1");
  if (top_k < 1) throw ArgumentError("top_k must be >= 1");
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ArgumentError("top_p must lie in (0, 1]");
  }
  if (max_new_tokens < 1) throw ArgumentError("max_new_tokens must be >= 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ArgumentError("temperature must be > 0");
  }
  if (!(uncertainty_lambda >= 0.0)) {
    throw ArgumentError("uncertainty_lambda must be >= 0");
  }
  if (!(beam_perturbation >= 0.0)) {
    throw ArgumentError("beam_perturbation must be >= 0");
  }
}

double Entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<TokenId> TopKSupport(std::span<const double> probs, int k) {
  return SortedPrefix(probs, static_cast<std::size_t>(std::max(k, 1)));
}

std::vector<TokenId> NucleusTopKSupport(std::span<const double> probs,
                                        double top_p, int k) {
  auto ids = SortedPrefix(probs, static_cast<std::size_t>(std::max(k, 1)));
  double mass = 0.0;
  std::size_t keep = 0;
  while (keep < ids.size()) {
    mass += probs[ids[keep]];
    ++keep;
    if (mass >= top_p) break;
  }
  ids.resize(keep);
  return ids;
}

std::vector<double> TemperedWeights(std::span<const double> probs,
                                    std::span<const TokenId> support,
                                    double temperature) {
  std::vector<double> w(support.size());
  if (support.empty()) return w;
  double max_log = -INFINITY;
  for (TokenId id : support) max_log = std::max(max_log, std::log(probs[id]));
  double sum = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    w[i] = std::exp((std::log(probs[support[i]]) - max_log) / temperature);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

TokenId SampleFrom(std::span<const TokenId> support,
                   std::span<const double> weights, Rng& rng) {
  const double u = rng.Uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    acc += weights[i];
    if (u < acc) return support[i];
  }
  return support.back();
}

Candidate BeamSearch(const LanguageModel& lm, const DecodeConfig& config) {
  config.Validate();
  return RunBeam(lm, config, 0.0, nullptr);
}

Candidate UncertaintyAwareBeamSearch(const LanguageModel& lm,
                                     const DecodeConfig& config) {
  config.Validate();
  return RunBeam(lm, config, config.uncertainty_lambda, nullptr);
}

Candidate TopKSample(const LanguageModel& lm, const DecodeConfig& config,
                     Rng& rng) {
  config.Validate();
  return RunSampler(lm, config, rng, [&](std::span<const double> probs) {
    return TopKSupport(probs, config.top_k);
  });
}

Candidate NucleusTopKSample(const LanguageModel& lm,
                            const DecodeConfig& config, Rng& rng) {
  config.Validate();
  // Temperature reshapes the distribution before the mass cutoff; at the
  // default temperature of 1 the order of operations is immaterial.
  return RunSampler(lm, config, rng, [&](std::span<const double> probs) {
    if (config.temperature == 1.0) {
      return NucleusTopKSupport(probs, config.top_p, config.top_k);
    }
    std::vector<TokenId> all(probs.size());
    std::iota(all.begin(), all.end(), TokenId{0});
    const auto tempered = TemperedWeights(probs, all, config.temperature);
    return NucleusTopKSupport(tempered, config.top_p, config.top_k);
  });
}

Candidate GreedyDecode(const LanguageModel& lm, int max_new_tokens) {
  Candidate c;
  for (int step = 0; step < max_new_tokens; ++step) {
    const auto probs = lm.NextTokenDistribution(c.token_ids);
    const TokenId pick = TopKSupport(probs, 1).front();
    c.token_ids.push_back(pick);
    c.token_logprobs.push_back(std::log(probs[pick]));
    if (pick == lm.eos()) break;
  }
  return c;
}

Candidate Decode(const LanguageModel& lm, const DecodeConfig& config,
                 Rng& rng, bool perturb) {
  config.Validate();
  switch (config.method) {
    case DecodeMethod::kBeam:
      return RunBeam(lm, config, 0.0, perturb ? &rng : nullptr);
    case DecodeMethod::kUncertaintyBeam:
      return RunBeam(lm, config, config.uncertainty_lambda,
                     perturb ? &rng : nullptr);
    case DecodeMethod::kTopK:
      return TopKSample(lm, config, rng);
    case DecodeMethod::kNucleusTopK:
      return NucleusTopKSample(lm, config, rng);
  }
  throw ArgumentError("unhandled decode method");
}

void RenderCandidate(const NgramModel& model, Candidate& candidate) {
  candidate.tokens = model.Decode(candidate.token_ids);
  std::span<const std::string> body(candidate.tokens);
  if (!candidate.token_ids.empty() &&
      candidate.token_ids.back() == Vocabulary::kEos) {
    body = body.first(body.size() - 1);
  }
  candidate.text = Detokenize(body, model.tokenizer());
}

CandidateSet SampleCandidateSet(const NgramModel& model,
                                const ConditioningContext& context,
                                std::string example_id,
                                const DecodeConfig& config,
                                std::size_t n_candidates,
                                std::uint64_t base_seed) {
  config.Validate();
  if (n_candidates < 1) throw ArgumentError("n_candidates must be >= 1");
  const ConditionedModel lm(model, context);
  CandidateSet set;
  set.example_id = std::move(example_id);
  set.context = context;
  set.candidates.reserve(n_candidates);
  for (std::size_t i = 0; i < n_candidates; ++i) {
    DecodeConfig cfg = config;
    cfg.seed = CandidateSeed(base_seed, set.example_id, i);
    Rng rng(cfg.seed);
    const bool perturb = IsBeamFamily(cfg.method) && i > 0 &&
                         cfg.beam_perturbation > 0.0;
    Candidate c = Decode(lm, cfg, rng, perturb);
    c.index = i;
    RenderCandidate(model, c);
    set.candidates.push_back(std::move(c));
  }
  return set;
}

}  // namespace crr
