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

// JSONL artifacts passed between pipeline stages.
//
// The first line of every artifact is a header
//
//   {"schema":"crr.<kind>","version":"<major>.<minor>"}
//
// and readers reject a different kind or an unknown major version. Writers
// stage output in "<path>.partial" and rename on Commit(), so an artifact
// that exists is complete. Existing artifacts are never overwritten unless
// the caller asks for it.

#ifndef CRR_ARTIFACTS_H_
#define CRR_ARTIFACTS_H_

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crr/decoders.h"
#include "crr/ranking.h"

namespace crr {

inline constexpr int kSchemaMajor = 1;
inline constexpr int kSchemaMinor = 0;

namespace artifact_kind {
inline constexpr std::string_view kCandidates = "candidates";
inline constexpr std::string_view kScored = "scored";
inline constexpr std::string_view kRanked = "ranked";
}  // namespace artifact_kind

std::string SchemaVersionString();

class JsonlWriter {
 public:
  JsonlWriter(std::filesystem::path path, std::string_view kind,
              bool overwrite = false);
  ~JsonlWriter();
  JsonlWriter(const JsonlWriter&) = delete;
  JsonlWriter& operator=(const JsonlWriter&) = delete;

  void Write(const nlohmann::json& record);
  void Commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path partial_;
  std::ofstream out_;
  bool committed_ = false;
};

// Records of an artifact, header excluded. Throws DataError on a missing or
// incompatible header and on malformed lines (with the line number).
std::vector<nlohmann::json> ReadJsonl(const std::filesystem::path& path,
                                      std::string_view kind);

// Writes a whole JSON document (reports, manifests) with a trailing newline.
void WriteJsonFile(const std::filesystem::path& path,
                   const nlohmann::json& doc, bool overwrite = false);
void WriteTextFile(const std::filesystem::path& path, std::string_view text,
                   bool overwrite = false);
nlohmann::json ReadJsonFile(const std::filesystem::path& path);

nlohmann::json ContextToJson(const ConditioningContext& context);
ConditioningContext ContextFromJson(const nlohmann::json& j);

nlohmann::json CandidateToJson(const Candidate& c);
Candidate CandidateFromJson(const nlohmann::json& j);

nlohmann::json CandidateSetToJson(const CandidateSet& set);
CandidateSet CandidateSetFromJson(const nlohmann::json& j);

nlohmann::json MatrixToJson(const EntailmentMatrix& m);
EntailmentMatrix MatrixFromJson(const nlohmann::json& j);

nlohmann::json ScoresToJson(const CertaintyScores& s);

// A ranked line also carries provenance of the set it came from and the
// selected text verbatim.
struct RankedRecord {
  RankingResult ranking;
  DecodeMethod decode_method = DecodeMethod::kNucleusTopK;
  std::size_t n_candidates = 0;
  std::string selected_text;
};

RankedRecord MakeRankedRecord(const CandidateSet& set, RankingResult ranking);
nlohmann::json RankedToJson(const RankedRecord& r);
RankedRecord RankedFromJson(const nlohmann::json& j);

}  // namespace crr

#endif  // CRR_ARTIFACTS_H_
