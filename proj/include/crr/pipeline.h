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

// Pipeline configuration and the stages behind `crr run`.
//
// Stages, each reading the previous stage's artifact from the output
// directory:
//
//   model.json             (only when training from a corpus)
//   candidates.jsonl
//   scored.jsonl           certainties, critic verdicts, entailment matrix
//   ranked.<method>.jsonl  one file per mitigation
//   eval_report.{json,txt,csv}
//   stats_report.json
//   sweep_report.{json,txt,csv}   (only when the sweep is enabled)
//
// manifest.json records the config hash, seeds and input digests. A stage
// whose final artifact exists is skipped, so an interrupted run resumes
// where it stopped; a manifest with a different hash is refused.

#ifndef CRR_PIPELINE_H_
#define CRR_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crr/certainty.h"
#include "crr/decoders.h"
#include "crr/harness.h"
#include "crr/nli_client.h"
#include "crr/ngram_model.h"
#include "crr/ranking.h"
#include "crr/stats.h"

namespace crr {

enum class ProviderKind { kLexical, kRemote };
enum class CriticKind { kRule, kRemote };

ProviderKind ParseProviderKind(std::string_view name);
std::string_view ProviderKindName(ProviderKind kind);
CriticKind ParseCriticKind(std::string_view name);
std::string_view CriticKindName(CriticKind kind);

struct PipelineConfig {
  // Relative paths below resolve against base_dir.
  std::filesystem::path base_dir;

  // Exactly one of model_path and corpus_path.
  std::string model_path;
  std::string corpus_path;
  int order = 3;
  double alpha = NgramModel::kDefaultAlpha;
  TokenizerKind tokenizer = TokenizerKind::kWord;

  std::string dataset_path;
  DatasetOptions dataset;

  DecodeConfig decode;
  std::size_t n_candidates = 5;
  std::uint64_t base_seed = 0;

  std::vector<Mitigation> mitigations = {Mitigation::kNone, Mitigation::kPCrr,
                                         Mitigation::kSCrr};
  ProviderKind provider = ProviderKind::kLexical;
  CriticKind critic = CriticKind::kRule;
  NliClientOptions remote;
  std::size_t max_in_flight = 8;

  double threshold = 0.5;
  double significance = 0.01;

  bool sweep = false;
  std::vector<DecodeMethod> sweep_methods = {DecodeMethod::kNucleusTopK};
  std::vector<std::size_t> sweep_n = {5, 10, 20};

  std::string output_dir = "out";
  std::size_t workers = 1;

  std::filesystem::path Resolve(const std::string& path) const;

  // Throws ConfigError listing every violated field, one per line.
  // check_paths also requires input files to exist.
  void Validate(bool check_paths = true) const;

  // Canonical form. Round-trips through FromJson.
  nlohmann::json ToJson() const;
  // Unknown keys are a ConfigError. Missing keys keep their defaults.
  static PipelineConfig FromJson(const nlohmann::json& j,
                                 std::filesystem::path base_dir = {});
  static PipelineConfig Load(const std::filesystem::path& path);

  // FNV-1a over the canonical JSON without output_dir and workers, which
  // never change results.
  std::uint64_t Hash() const;
};

std::unique_ptr<EntailmentProvider> MakeProvider(ProviderKind kind,
                                                 const NliClientOptions& remote);
std::unique_ptr<FaithfulnessCritic> MakeCritic(CriticKind kind,
                                               const NliClientOptions& remote);

std::vector<CandidateSet> GenerateCandidates(
    const NgramModel& model, std::span<const DialogueExample> examples,
    const DecodeConfig& config, std::size_t n_candidates,
    std::uint64_t base_seed, std::size_t workers = 1);

// Per-set scoring output. semantic certainty and the matrix are present
// when a provider was used, hallucination_prob when a critic was.
struct ScoredSet {
  std::string example_id;
  std::vector<CertaintyScores> scores;
  std::vector<std::optional<double>> hallucination_prob;
  std::optional<EntailmentMatrix> matrix;
  std::string critic_tag;

  nlohmann::json ToJson() const;
  static ScoredSet FromJson(const nlohmann::json& j);
};

ScoredSet ScoreCandidateSet(const CandidateSet& set,
                            const EntailmentProvider* provider,
                            const FaithfulnessCritic* critic,
                            std::size_t max_in_flight = 8);

// Ranks from precomputed scores. S-CRR needs the matrix (ConfigError).
RankingResult RankFromScores(const CandidateSet& set, const ScoredSet& scored,
                             Mitigation method);

// One observation per candidate. Throws DataError if a candidate lacks
// semantic certainty or a critic verdict.
std::vector<stats::ScoredObservation> ObservationsFromScored(
    std::span<const ScoredSet> scored);

std::vector<CandidateSet> ReadCandidateSets(const std::filesystem::path& path);
std::vector<ScoredSet> ReadScoredSets(const std::filesystem::path& path);
std::vector<RankedRecord> ReadRankedRecords(const std::filesystem::path& path);

// Writes report.json, report.txt (table) and report.csv next to each other.
void WriteEvalReport(const EvalReport& report,
                     const std::filesystem::path& json_path,
                     bool overwrite = false);

struct RunSummary {
  std::vector<std::string> executed;  // stage names
  std::vector<std::string> skipped;
};

RunSummary RunPipeline(const PipelineConfig& config);

}  // namespace crr

#endif  // CRR_PIPELINE_H_
