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

// Certainty-based response ranking.
//
//   P-CRR: order candidates by probabilistic certainty, ties by lower index.
//   S-CRR: order by agreement score, ties by higher probabilistic certainty,
//          then lower index.
//   none:  the first sampled candidate, i.e. plain decoding.

#ifndef CRR_RANKING_H_
#define CRR_RANKING_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crr/certainty.h"
#include "crr/decoders.h"

namespace crr {

enum class Mitigation { kNone, kPCrr, kSCrr };

// "none", "pcrr", "scrr".
std::string_view MitigationName(Mitigation method);
// Also accepts "p_crr" and "s_crr".
Mitigation ParseMitigation(std::string_view name);

struct RankingResult {
  std::string example_id;
  Mitigation method = Mitigation::kNone;
  std::vector<CertaintyScores> scores;  // by candidate index
  std::vector<std::size_t> ranking;     // best first
  std::size_t selected_index = 0;
  std::optional<EntailmentMatrix> matrix;

  bool operator==(const RankingResult&) const = default;
};

RankingResult RankNone(const CandidateSet& set);
RankingResult RankPCrr(const CandidateSet& set);
RankingResult RankSCrr(const CandidateSet& set,
                       const EntailmentProvider& provider,
                       std::size_t max_in_flight = 8);
// S-CRR over an already computed matrix of the same set.
RankingResult RankSCrr(const CandidateSet& set, EntailmentMatrix matrix);

// `provider` may be null unless method is S-CRR (ConfigError otherwise).
RankingResult Rank(const CandidateSet& set, Mitigation method,
                   const EntailmentProvider* provider,
                   std::size_t max_in_flight = 8);

const Candidate& SelectResponse(const CandidateSet& set, Mitigation method,
                                const EntailmentProvider* provider);

}  // namespace crr

#endif  // CRR_RANKING_H_
