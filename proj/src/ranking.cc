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

#include "crr/ranking.h"

#include <algorithm>
#include <numeric>

#include "crr/errors.h"

namespace crr {
namespace {

void RequireNonEmpty(const CandidateSet& set) {
  if (set.candidates.empty()) {
    throw ArgumentError("candidate set '" + set.example_id + "' is empty");
  }
}

std::vector<CertaintyScores> ProbabilisticScores(const CandidateSet& set) {
  std::vector<CertaintyScores> scores(set.candidates.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i].probabilistic = ProbabilisticCertainty(set.candidates[i]);
  }
  return scores;
}

std::vector<std::size_t> Identity(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

std::string_view MitigationName(Mitigation method) {
  switch (method) {
    case Mitigation::kNone:
      return "none";
    case Mitigation::kPCrr:
      return "pcrr";
    case Mitigation::kSCrr:
      return "scrr";
  }
  return "unknown";
}

Mitigation ParseMitigation(std::string_view name) {
  if (name == "none") return Mitigation::kNone;
  if (name == "pcrr" || name == "p_crr") return Mitigation::kPCrr;
  if (name == "scrr" || name == "s_crr") return Mitigation::kSCrr;
  throw ArgumentError("unknown ranking method '" + std::string(name) +
                      "' (expected pcrr|scrr|none)");
}

RankingResult RankNone(const CandidateSet& set) {
  RequireNonEmpty(set);
  RankingResult r;
  r.example_id = set.example_id;
  r.method = Mitigation::kNone;
  r.scores = ProbabilisticScores(set);
  r.ranking = Identity(set.candidates.size());
  r.selected_index = 0;
  return r;
}

RankingResult RankPCrr(const CandidateSet& set) {
  RequireNonEmpty(set);
  RankingResult r;
  r.example_id = set.example_id;
  r.method = Mitigation::kPCrr;
  r.scores = ProbabilisticScores(set);
  r.ranking = Identity(set.candidates.size());
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     return r.scores[a].probabilistic >
                            r.scores[b].probabilistic;
                   });
  r.selected_index = r.ranking.front();
  return r;
}

RankingResult RankSCrr(const CandidateSet& set,
                       const EntailmentProvider& provider,
                       std::size_t max_in_flight) {
  RequireNonEmpty(set);
  return RankSCrr(set, BuildEntailmentMatrix(set, provider, max_in_flight));
}

RankingResult RankSCrr(const CandidateSet& set, EntailmentMatrix matrix) {
  RequireNonEmpty(set);
  if (matrix.n != set.candidates.size()) {
    throw ArgumentError("entailment matrix size does not match set '" +
                        set.example_id + "'");
  }
  RankingResult r;
  r.example_id = set.example_id;
  r.method = Mitigation::kSCrr;
  r.scores = ProbabilisticScores(set);
  const auto as = AgreementScores(matrix);
  for (std::size_t i = 0; i < as.size(); ++i) r.scores[i].semantic = as[i];
  r.ranking = Identity(set.candidates.size());
  std::stable_sort(r.ranking.begin(), r.ranking.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (as[a] != as[b]) return as[a] > as[b];
                     return r.scores[a].probabilistic >
                            r.scores[b].probabilistic;
                   });
  r.selected_index = r.ranking.front();
  r.matrix = std::move(matrix);
  return r;
}

RankingResult Rank(const CandidateSet& set, Mitigation method,
                   const EntailmentProvider* provider,
                   std::size_t max_in_flight) {
  switch (method) {
    case Mitigation::kNone:
      return RankNone(set);
    case Mitigation::kPCrr:
      return RankPCrr(set);
    case Mitigation::kSCrr:
      if (provider == nullptr) {
        throw ConfigError("S-CRR ranking requires an entailment provider");
      }
      return RankSCrr(set, *provider, max_in_flight);
  }
  throw ArgumentError("unhandled ranking method");
}

const Candidate& SelectResponse(const CandidateSet& set, Mitigation method,
                                const EntailmentProvider* provider) {
  const RankingResult r = Rank(set, method, provider);
  return set.candidates[r.selected_index];
}

}  // namespace crr
