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


#include "crr/pipeline.h"

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "crr/artifacts.h"
#include "crr/errors.h"
#include "support/temp_dir.h"

namespace crr {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ::crr::testing::ReadFile;
using ::crr::testing::TempDir;

constexpr char kFixtures[] = CRR_SOURCE_DIR "/fixtures";

PipelineConfig MinimalConfig(const fs::path& out_dir) {
  PipelineConfig c =
      PipelineConfig::Load(fs::path(kFixtures) / "minimal.json");
  c.output_dir = out_dir.string();
  return c;
}

std::string ConfigErrorOf(const json& j, bool check_paths = false) {
  try {
    PipelineConfig::FromJson(j, kFixtures).Validate(check_paths);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<std::string> ListDir(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    out.push_back(e.path().filename().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(PipelineConfigTest, LoadsTheFixture) {
  const PipelineConfig c =
      PipelineConfig::Load(fs::path(kFixtures) / "minimal.json");
  EXPECT_EQ(c.base_dir, fs::path(kFixtures));
  EXPECT_EQ(c.corpus_path, "corpus.jsonl");
  EXPECT_EQ(c.n_candidates, 5u);
  EXPECT_EQ(c.decode.method, DecodeMethod::kNucleusTopK);
  EXPECT_EQ(c.mitigations.size(), 3u);
  EXPECT_TRUE(c.sweep);
  EXPECT_EQ(c.sweep_n, (std::vector<std::size_t>{5, 10, 20}));
  EXPECT_NO_THROW(c.Validate());
  EXPECT_EQ(c.Resolve("corpus.jsonl"), fs::path(kFixtures) / "corpus.jsonl");
  EXPECT_EQ(c.Resolve("/abs/x"), fs::path("/abs/x"));
}

TEST(PipelineConfigTest, CanonicalJsonRoundTrips) {
  const PipelineConfig c =
      PipelineConfig::Load(fs::path(kFixtures) / "minimal.json");
  const PipelineConfig back = PipelineConfig::FromJson(c.ToJson(), c.base_dir);
  EXPECT_EQ(back.ToJson(), c.ToJson());
  EXPECT_EQ(back.Hash(), c.Hash());
}

TEST(PipelineConfigTest, HashIgnoresOutputLocationAndWorkers) {
  PipelineConfig c =
      PipelineConfig::Load(fs::path(kFixtures) / "minimal.json");
  const auto h = c.Hash();
  c.output_dir = "elsewhere";
  c.workers = 7;
  EXPECT_EQ(c.Hash(), h);
  c.base_seed += 1;
  EXPECT_NE(c.Hash(), h);
}

TEST(PipelineConfigTest, ListsEveryViolation) {
  const json j = {
      {"model", {{"order", 0}, {"alpha", -1.0}}},
      {"dataset", {{"path", "dialogues.jsonl"}}},
      {"threshold", 1.5},
      {"n_candidates", 0},
      {"provider", "remote"},
  };
  const std::string err = ConfigErrorOf(j);
  EXPECT_NE(err.find("problems"), std::string::npos) << err;
  for (const char* field : {"model.order", "model.alpha", "threshold",
                            "n_candidates", "remote.endpoint", "model.path"}) {
    EXPECT_NE(err.find(field), std::string::npos) << field << "\n" << err;
  }
}

TEST(PipelineConfigTest, RemoteCriticNeedsAnEndpoint) {
  const json j = {{"model", {{"corpus", "corpus.jsonl"}}},
                  {"dataset", {{"path", "dialogues.jsonl"}}},
                  {"critic", "remote"}};
  EXPECT_NE(ConfigErrorOf(j).find("remote.endpoint"), std::string::npos);
  json ok = j;
  ok["remote"] = {{"endpoint", "http://127.0.0.1:1"}};
  EXPECT_EQ(ConfigErrorOf(ok), "");
}

TEST(PipelineConfigTest, ModelAndCorpusAreExclusive) {
  const json j = {{"model", {{"corpus", "corpus.jsonl"}, {"path", "m.json"}}},
                  {"dataset", {{"path", "dialogues.jsonl"}}}};
  EXPECT_NE(ConfigErrorOf(j), "");
}

TEST(PipelineConfigTest, RejectsUnknownKeysAndWrongTypes) {
  const json j = {{"model", {{"corpus", "corpus.jsonl"}, {"ordr", 3}}},
                  {"dataset", {{"path", "dialogues.jsonl"}}},
                  {"n_candidates", "five"},
                  {"decode", {{"method", "greedy"}}},
                  {"extra", true}};
  const std::string err = ConfigErrorOf(j);
  EXPECT_NE(err.find("model.ordr: unknown key"), std::string::npos) << err;
  EXPECT_NE(err.find("extra: unknown key"), std::string::npos) << err;
  EXPECT_NE(err.find("n_candidates"), std::string::npos) << err;
  EXPECT_NE(err.find("decode.method"), std::string::npos) << err;
}

TEST(PipelineConfigTest, PathChecksAreOptional) {
  const json j = {{"model", {{"corpus", "no_such_corpus.jsonl"}}},
                  {"dataset", {{"path", "dialogues.jsonl"}}}};
  EXPECT_EQ(ConfigErrorOf(j, false), "");
  EXPECT_NE(ConfigErrorOf(j, true).find("no_such_corpus"), std::string::npos);
}

TEST(PipelineConfigTest, MalformedFileIsAConfigError) {
  TempDir dir;
  EXPECT_THROW(PipelineConfig::Load(dir.Write("c.json", "{oops")), ConfigError);
  EXPECT_THROW(PipelineConfig::Load(dir / "missing.json"), ConfigError);
}

CandidateSet TwoCandidateSet() {
  CandidateSet set;
  set.example_id = "s";
  set.context = {"paris is the capital of france", {}};
  Candidate a;
  a.index = 0;
  a.text = "paris capital";
  a.token_logprobs = {-2.0};
  Candidate b = a;
  b.index = 1;
  b.text = "paris capital france";
  b.token_logprobs = {-1.0};
  set.candidates = {a, b};
  return set;
}

TEST(ScoredSetTest, RoundTripAndRankingFromScores) {
  const CandidateSet set = TwoCandidateSet();
  const LexicalEntailmentProvider lexical;
  const RuleBasedCritic critic;
  const ScoredSet scored = ScoreCandidateSet(set, &lexical, &critic);
  EXPECT_EQ(scored.critic_tag, "rule");
  ASSERT_EQ(scored.hallucination_prob.size(), 2u);
  EXPECT_EQ(*scored.hallucination_prob[0], 0.0);
  const ScoredSet back = ScoredSet::FromJson(json::parse(scored.ToJson().dump()));
  EXPECT_EQ(back.ToJson(), scored.ToJson());
  for (auto m : {Mitigation::kNone, Mitigation::kPCrr, Mitigation::kSCrr}) {
    EXPECT_EQ(RankFromScores(set, back, m), Rank(set, m, &lexical)) <<
        MitigationName(m);
  }
}

TEST(ScoredSetTest, SemanticRankingNeedsTheMatrix) {
  const CandidateSet set = TwoCandidateSet();
  const ScoredSet scored = ScoreCandidateSet(set, nullptr, nullptr);
  EXPECT_FALSE(scored.matrix.has_value());
  EXPECT_THROW(RankFromScores(set, scored, Mitigation::kSCrr), ConfigError);
  const std::vector<ScoredSet> all = {scored};
  EXPECT_THROW(ObservationsFromScored(all), DataError);
}

class PipelineRunTest : public ::testing::Test {
 protected:
  TempDir dir_;
  fs::path out_ = dir_ / "run";
};

TEST_F(PipelineRunTest, ProducesEveryArtifactThenResumes) {
  const PipelineConfig c = MinimalConfig(out_);
  const RunSummary first = RunPipeline(c);
  EXPECT_TRUE(first.skipped.empty());
  EXPECT_EQ(first.executed,
            (std::vector<std::string>{"model", "generate", "score",
                                      "rank:none", "rank:pcrr", "rank:scrr",
                                      "evaluate", "stats", "sweep"}));
  EXPECT_EQ(ListDir(out_),
            (std::vector<std::string>{
                "candidates.jsonl", "eval_report.csv", "eval_report.json",
                "eval_report.txt", "manifest.json", "model.json",
                "ranked.none.jsonl", "ranked.pcrr.jsonl", "ranked.scrr.jsonl",
                "scored.jsonl", "stats_report.json", "sweep_report.csv",
                "sweep_report.json", "sweep_report.txt"}));

  const json manifest = ReadJsonFile(out_ / "manifest.json");
  EXPECT_EQ(manifest["base_seed"], c.base_seed);
  EXPECT_TRUE(manifest["inputs"].contains("corpus"));

  const std::string eval = ReadFile(out_ / "eval_report.json");
  const RunSummary again = RunPipeline(c);
  EXPECT_TRUE(again.executed.empty());
  EXPECT_EQ(again.skipped.size(), first.executed.size());

  fs::remove(out_ / "eval_report.csv");
  fs::remove(out_ / "stats_report.json");
  const RunSummary partial = RunPipeline(c);
  EXPECT_EQ(partial.executed, (std::vector<std::string>{"evaluate", "stats"}));
  EXPECT_EQ(ReadFile(out_ / "eval_report.json"), eval);
}

TEST_F(PipelineRunTest, RefusesADifferentConfiguration) {
  PipelineConfig c = MinimalConfig(out_);
  c.sweep = false;
  RunPipeline(c);
  c.base_seed += 1;
  EXPECT_THROW(RunPipeline(c), ConfigError);
}

TEST_F(PipelineRunTest, WorkerCountDoesNotChangeOutputs) {
  PipelineConfig c = MinimalConfig(out_);
  c.sweep = false;
  RunPipeline(c);
  c.workers = 3;
  c.output_dir = (dir_ / "parallel").string();
  RunPipeline(c);
  for (const auto& name : ListDir(out_)) {
    EXPECT_EQ(ReadFile(dir_ / "parallel" / name), ReadFile(out_ / name))
        << name;
  }
}

TEST_F(PipelineRunTest, RankedSelectionsAreCandidateTexts) {
  PipelineConfig c = MinimalConfig(out_);
  c.sweep = false;
  RunPipeline(c);
  const auto sets = ReadCandidateSets(out_ / "candidates.jsonl");
  for (const char* m : {"none", "pcrr", "scrr"}) {
    const auto ranked =
        ReadRankedRecords(out_ / ("ranked." + std::string(m) + ".jsonl"));
    ASSERT_EQ(ranked.size(), sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
      EXPECT_EQ(ranked[i].selected_text,
                sets[i].candidates[ranked[i].ranking.selected_index].text);
    }
  }
}

}  // namespace
}  // namespace crr
