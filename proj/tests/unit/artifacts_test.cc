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


#include "crr/artifacts.h"

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "crr/errors.h"
#include "crr/ranking.h"
#include "support/temp_dir.h"

namespace crr {
namespace {

using json = nlohmann::json;
using ::crr::testing::ReadFile;
using ::crr::testing::TempDir;

CandidateSet SampleSet() {
  CandidateSet set;
  set.example_id = "ex-7";
  set.context = {"knowledge text", {"hi", "how are you"}};
  for (std::size_t i = 0; i < 3; ++i) {
    Candidate c;
    c.index = i;
    c.token_ids = {4, 5, 1};
    c.tokens = {"hello", "there", "</s>"};
    c.text = "hello there";
    c.token_logprobs = {-0.1 * (i + 1), -0.2, -0.30000000000000004};
    c.method = DecodeMethod::kTopK;
    c.seed = 0xFFFFFFFFFFFFFFFFULL - i;
    set.candidates.push_back(c);
  }
  return set;
}

TEST(JsonlTest, WritesHeaderAndCommitsAtomically) {
  TempDir dir;
  const auto path = dir / "c.jsonl";
  {
    JsonlWriter w(path, artifact_kind::kCandidates);
    w.Write({{"a", 1}});
    EXPECT_FALSE(std::filesystem::exists(path));
    EXPECT_TRUE(std::filesystem::exists(dir / "c.jsonl.partial"));
    w.Commit();
  }
  EXPECT_FALSE(std::filesystem::exists(dir / "c.jsonl.partial"));
  EXPECT_EQ(ReadFile(path),
            "{\"schema\":\"crr.candidates\",\"version\":\"1.0\"}\n{\"a\":1}\n");
  const auto records = ReadJsonl(path, artifact_kind::kCandidates);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0], json({{"a", 1}}));
}

TEST(JsonlTest, UncommittedWriterLeavesNothingBehind) {
  TempDir dir;
  {
    JsonlWriter w(dir / "x.jsonl", artifact_kind::kScored);
    w.Write({{"a", 1}});
  }
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(JsonlTest, RefusesToOverwriteUnlessAsked) {
  TempDir dir;
  const auto path = dir.Write("r.jsonl", "old");
  EXPECT_THROW(JsonlWriter(path, artifact_kind::kRanked), ConfigError);
  EXPECT_EQ(ReadFile(path), "old");
  {
    JsonlWriter w(path, artifact_kind::kRanked, /*overwrite=*/true);
    w.Commit();
  }
  EXPECT_TRUE(ReadJsonl(path, artifact_kind::kRanked).empty());
  EXPECT_THROW(WriteJsonFile(path, json::object()), ConfigError);
  EXPECT_THROW(WriteTextFile(path, "x"), ConfigError);
  EXPECT_NO_THROW(WriteTextFile(path, "x", true));
}

TEST(JsonlTest, RejectsWrongOrMissingHeader) {
  TempDir dir;
  const auto wrong_kind = dir.Write(
      "a.jsonl", "{\"schema\":\"crr.scored\",\"version\":\"1.0\"}\n");
  EXPECT_THROW(ReadJsonl(wrong_kind, artifact_kind::kCandidates), DataError);
  const auto future = dir.Write(
      "b.jsonl", "{\"schema\":\"crr.scored\",\"version\":\"2.0\"}\n");
  EXPECT_THROW(ReadJsonl(future, artifact_kind::kScored), DataError);
  const auto minor = dir.Write(
      "c.jsonl", "{\"schema\":\"crr.scored\",\"version\":\"1.7\"}\n{}\n");
  EXPECT_EQ(ReadJsonl(minor, artifact_kind::kScored).size(), 1u);
  const auto headless = dir.Write("d.jsonl", "{\"a\":1}\n");
  EXPECT_THROW(ReadJsonl(headless, artifact_kind::kScored), DataError);
  const auto empty = dir.Write("e.jsonl", "");
  EXPECT_THROW(ReadJsonl(empty, artifact_kind::kScored), DataError);
  EXPECT_THROW(ReadJsonl(dir / "missing.jsonl", artifact_kind::kScored),
               DataError);
}

TEST(JsonlTest, MalformedLineIsReportedWithItsNumber) {
  TempDir dir;
  const auto path = dir.Write(
      "m.jsonl",
      "{\"schema\":\"crr.ranked\",\"version\":\"1.0\"}\n{}\n{broken\n");
  try {
    ReadJsonl(path, artifact_kind::kRanked);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos)
        << e.what();
  }
}

TEST(SerializationTest, CandidateSetRoundTripIsExact) {
  const CandidateSet set = SampleSet();
  const json j = CandidateSetToJson(set);
  EXPECT_EQ(CandidateSetFromJson(j), set);
  EXPECT_EQ(CandidateSetFromJson(json::parse(j.dump())), set);
}

TEST(SerializationTest, CandidateSetRejectsBadIndices) {
  json j = CandidateSetToJson(SampleSet());
  j["candidates"][1]["index"] = 5;
  EXPECT_THROW(CandidateSetFromJson(j), DataError);
  EXPECT_THROW(CandidateSetFromJson(json{{"example_id", "x"}}), DataError);
}

TEST(SerializationTest, MatrixRoundTrip) {
  const EntailmentMatrix m{2, {1.0, 0.25, 0.125, 1.0}, "lexical"};
  EXPECT_EQ(MatrixFromJson(MatrixToJson(m)), m);
  EXPECT_THROW(
      MatrixFromJson({{"matrix", {{1.0}, {1.0, 0.0}}}, {"provider", "x"}}),
      DataError);
  EXPECT_THROW(MatrixFromJson({{"provider", "x"}}), DataError);
}

TEST(SerializationTest, RankedRecordCarriesTheSelectedText) {
  CandidateSet set = SampleSet();
  set.candidates[2].text = "the chosen one";
  set.candidates[2].token_logprobs = {-0.01};
  const RankedRecord rec = MakeRankedRecord(set, RankPCrr(set));
  EXPECT_EQ(rec.selected_text, "the chosen one");
  EXPECT_EQ(rec.n_candidates, 3u);
  EXPECT_EQ(rec.decode_method, DecodeMethod::kTopK);
  const json j = RankedToJson(rec);
  EXPECT_EQ(j["selected_index"], 2);
  EXPECT_EQ(j["method"], "pcrr");
  const RankedRecord back = RankedFromJson(json::parse(j.dump()));
  EXPECT_EQ(back.ranking, rec.ranking);
  EXPECT_EQ(back.selected_text, rec.selected_text);
  EXPECT_EQ(back.n_candidates, rec.n_candidates);
}

}  // namespace
}  // namespace crr
