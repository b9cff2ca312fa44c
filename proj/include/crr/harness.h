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

// Dataset ingestion, faithfulness judging and faithful-percentage reports,
// including the sweep over candidate-set sizes.

#ifndef CRR_HARNESS_H_
#define CRR_HARNESS_H_

#include <compare>
#include <filesystem>
#include <functional>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crr/artifacts.h"
#include "crr/certainty.h"
#include "crr/decoders.h"
#include "crr/nli_client.h"
#include "crr/ngram_model.h"
#include "crr/ranking.h"

namespace crr {

struct DialogueExample {
  std::string id;
  std::string knowledge;
  std::vector<std::string> history;
  std::optional<std::string> reference;

  ConditioningContext context() const { return {knowledge, history}; }
};

enum class DatasetFormat { kFaithDialJsonl, kGenericJsonl };

// "faithdial" / "faithdial_jsonl", "generic" / "generic_jsonl".
DatasetFormat ParseDatasetFormat(std::string_view name);
std::string_view DatasetFormatName(DatasetFormat format);

struct DatasetOptions {
  DatasetFormat format = DatasetFormat::kFaithDialJsonl;
  // Most recent turns kept; 0 keeps none.
  std::size_t max_history_turns = 1;
  // Abort on the first malformed record instead of skipping it.
  bool strict = true;
};

// FaithDial records: {"knowledge", "history": [..], "response"?, "id"?}.
// Missing ids become "<dialog_idx>-<turn>" when those fields exist, else
// the 1-based line number. Generic records additionally accept "document"
// or "fact" for knowledge, "context" or "dialogue" for history (string or
// list) and "reference" for the reference response.
//
// Errors carry "<source>:<line>". Duplicate ids are always an error.
std::vector<DialogueExample> ParseDataset(std::istream& in,
                                          const DatasetOptions& options,
                                          std::string_view source = "<input>");
std::vector<DialogueExample> LoadDataset(const std::filesystem::path& path,
                                         const DatasetOptions& options);

class FaithfulnessCritic {
 public:
  virtual ~FaithfulnessCritic() = default;
  virtual std::string tag() const = 0;
  virtual double HallucinationProbability(std::string_view knowledge,
                                          std::string_view response) const = 0;
};

// 1 - share of the response's content words found in the knowledge.
class RuleBasedCritic : public FaithfulnessCritic {
 public:
  std::string tag() const override { return "rule"; }
  double HallucinationProbability(std::string_view knowledge,
                                  std::string_view response) const override;
};

// Delegates to the remote /faithful endpoint. Failures propagate.
class RemoteCritic : public FaithfulnessCritic {
 public:
  explicit RemoteCritic(NliClientOptions options) : client_(std::move(options)) {}
  std::string tag() const override { return "remote"; }
  double HallucinationProbability(std::string_view knowledge,
                                  std::string_view response) const override {
    return client_.HallucinationProbability(knowledge, response);
  }

 private:
  NliClient client_;
};

struct FaithfulnessJudgment {
  double hallucination_prob = 0.0;
  bool faithful = true;
  std::string critic_tag;
};

// faithful <=> hallucination_prob < threshold; threshold must lie in (0, 1).
FaithfulnessJudgment JudgeFaithfulness(std::string_view knowledge,
                                       std::string_view response,
                                       const FaithfulnessCritic& critic,
                                       double threshold);

struct EvalKey {
  DecodeMethod decode_method = DecodeMethod::kNucleusTopK;
  Mitigation mitigation = Mitigation::kNone;
  std::size_t n_candidates = 0;

  auto operator<=>(const EvalKey&) const = default;
};

struct EvalRow {
  EvalKey key;
  std::size_t n_examples = 0;
  std::size_t n_faithful = 0;
  double faithful_percent = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // sorted by key

  const EvalRow* Find(const EvalKey& key) const;
  nlohmann::json ToJson() const;
  static EvalReport FromJson(const nlohmann::json& j);
  // Decoding method / mitigation rows, one column per candidate count.
  std::string RenderTable() const;
  std::string RenderCsv() const;
};

// Judges each record's selected_text against the knowledge of the example
// with the same id. Throws DataError listing ids without an example.
EvalReport Evaluate(std::span<const RankedRecord> ranked,
                    std::span<const DialogueExample> examples,
                    const FaithfulnessCritic& critic, double threshold,
                    std::size_t workers = 1);

// Produces the candidate set of `n` candidates for one example.
using CandidateSource = std::function<CandidateSet(
    const DialogueExample& example, DecodeMethod method, std::size_t n)>;

// Decodes from an n-gram model with `base` settings and per-candidate seeds
// derived from base_seed.
CandidateSource NgramCandidateSource(const NgramModel& model,
                                     DecodeConfig base,
                                     std::uint64_t base_seed);

struct SweepOptions {
  std::vector<DecodeMethod> methods = {DecodeMethod::kNucleusTopK};
  std::vector<Mitigation> mitigations = {Mitigation::kNone, Mitigation::kPCrr,
                                         Mitigation::kSCrr};
  std::vector<std::size_t> n_list = {5, 10, 20};
  double threshold = 0.5;
  std::size_t workers = 1;
};

// generate -> rank -> evaluate for every (method, mitigation, n).
EvalReport AblationSweep(std::span<const DialogueExample> examples,
                         const CandidateSource& source,
                         const EntailmentProvider* provider,
                         const FaithfulnessCritic& critic,
                         const SweepOptions& options);

}  // namespace crr

#endif  // CRR_HARNESS_H_
