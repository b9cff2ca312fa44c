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

#include <system_error>

#include "crr/errors.h"

namespace crr {

using json = nlohmann::json;

namespace {

std::string SchemaName(std::string_view kind) {
  return "crr." + std::string(kind);
}

void RefuseOverwrite(const std::filesystem::path& path, bool overwrite) {
  if (!overwrite && std::filesystem::exists(path)) {
    throw ConfigError("refusing to overwrite existing artifact " +
                      path.string());
  }
}

void EnsureParent(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
}

}  // namespace

std::string SchemaVersionString() {
  return std::to_string(kSchemaMajor) + "." + std::to_string(kSchemaMinor);
}

JsonlWriter::JsonlWriter(std::filesystem::path path, std::string_view kind,
                         bool overwrite)
    : path_(std::move(path)) {
  RefuseOverwrite(path_, overwrite);
  EnsureParent(path_);
  partial_ = path_;
  partial_ += ".partial";
  out_.open(partial_, std::ios::binary | std::ios::trunc);
  if (!out_) throw DataError("cannot write " + partial_.string());
  out_ << json{{"schema", SchemaName(kind)},
               {"version", SchemaVersionString()}}
              .dump()
       << '\n';
}

JsonlWriter::~JsonlWriter() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(partial_, ec);
  }
}

void JsonlWriter::Write(const json& record) {
  out_ << record.dump() << '\n';
}

void JsonlWriter::Commit() {
  out_.close();
  if (!out_) throw DataError("failed writing " + partial_.string());
  std::filesystem::rename(partial_, path_);
  committed_ = true;
}

std::vector<json> ReadJsonl(const std::filesystem::path& path,
                            std::string_view kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(path.string() + ": missing schema header line");
  }
  const json header = json::parse(line, nullptr, false);
  if (header.is_discarded() || !header.is_object() ||
      !header.contains("schema") || !header.contains("version") ||
      !header["version"].is_string()) {
    throw DataError(path.string() + ": missing schema header line");
  }
  if (header["schema"] != SchemaName(kind)) {
    throw DataError(path.string() + ": expected schema " + SchemaName(kind) +
                    ", found " + header["schema"].dump());
  }
  const std::string version = header["version"].get<std::string>();
  const int major = std::stoi(version.substr(0, version.find('.')));
  if (major != kSchemaMajor) {
    throw DataError(path.string() + ": unsupported schema major version " +
                    version);
  }
  std::vector<json> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": malformed JSON");
    }
    records.push_back(std::move(j));
  }
  return records;
}

void WriteJsonFile(const std::filesystem::path& path, const json& doc,
                   bool overwrite) {
  WriteTextFile(path, doc.dump(2) + "\n", overwrite);
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text,
                   bool overwrite) {
  RefuseOverwrite(path, overwrite);
  EnsureParent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError(path.string() + ": malformed JSON");
  return j;
}

json ContextToJson(const ConditioningContext& context) {
  return {{"knowledge", context.knowledge}, {"history", context.history}};
}

ConditioningContext ContextFromJson(const json& j) {
  ConditioningContext c;
  c.knowledge = j.value("knowledge", "");
  if (j.contains("history")) {
    c.history = j.at("history").get<std::vector<std::string>>();
  }
  return c;
}

json CandidateToJson(const Candidate& c) {
  return {
      {"index", c.index},
      {"text", c.text},
      {"tokens", c.tokens},
      {"token_ids", c.token_ids},
      {"token_logprobs", c.token_logprobs},
      {"method", DecodeMethodName(c.method)},
      {"seed", c.seed},
  };
}

Candidate CandidateFromJson(const json& j) {
  Candidate c;
  c.index = j.at("index").get<std::size_t>();
  c.text = j.at("text").get<std::string>();
  if (j.contains("tokens")) {
    c.tokens = j.at("tokens").get<std::vector<std::string>>();
  }
  if (j.contains("token_ids")) {
    c.token_ids = j.at("token_ids").get<std::vector<TokenId>>();
  }
  c.token_logprobs = j.at("token_logprobs").get<std::vector<double>>();
  c.method = ParseDecodeMethod(j.at("method").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json CandidateSetToJson(const CandidateSet& set) {
  json candidates = json::array();
  for (const auto& c : set.candidates) candidates.push_back(CandidateToJson(c));
  return {
      {"example_id", set.example_id},
      {"context", ContextToJson(set.context)},
      {"candidates", std::move(candidates)},
  };
}

CandidateSet CandidateSetFromJson(const json& j) {
  try {
    CandidateSet set;
    set.example_id = j.at("example_id").get<std::string>();
    set.context = ContextFromJson(j.at("context"));
    for (const auto& c : j.at("candidates")) {
      set.candidates.push_back(CandidateFromJson(c));
    }
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
      if (set.candidates[i].index != i) {
        throw DataError("candidate indices of '" + set.example_id +
                        "' are not 0..N-1");
      }
    }
    return set;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed candidate set: ") + e.what());
  }
}

json MatrixToJson(const EntailmentMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.n; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.n; ++j) row.push_back(m.at(i, j));
    rows.push_back(std::move(row));
  }
  return {{"provider", m.provider_tag}, {"matrix", std::move(rows)}};
}

EntailmentMatrix MatrixFromJson(const json& j) {
  try {
    EntailmentMatrix m;
    m.provider_tag = j.at("provider").get<std::string>();
    const auto& rows = j.at("matrix");
    m.n = rows.size();
    m.entries.reserve(m.n * m.n);
    for (const auto& row : rows) {
      if (row.size() != m.n) throw DataError("entailment matrix is not square");
      for (const auto& v : row) m.entries.push_back(v.get<double>());
    }
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed entailment matrix: ") + e.what());
  }
}

json ScoresToJson(const CertaintyScores& s) {
  json j = {{"prob_certainty", s.probabilistic}};
  j["sem_certainty"] = s.semantic ? json(*s.semantic) : json(nullptr);
  return j;
}

RankedRecord MakeRankedRecord(const CandidateSet& set, RankingResult ranking) {
  RankedRecord r;
  r.decode_method = set.candidates.front().method;
  r.n_candidates = set.candidates.size();
  r.selected_text = set.candidates.at(ranking.selected_index).text;
  r.ranking = std::move(ranking);
  return r;
}

json RankedToJson(const RankedRecord& r) {
  json scores = json::array();
  for (const auto& s : r.ranking.scores) scores.push_back(ScoresToJson(s));
  return {
      {"example_id", r.ranking.example_id},
      {"method", MitigationName(r.ranking.method)},
      {"decode_method", DecodeMethodName(r.decode_method)},
      {"n_candidates", r.n_candidates},
      {"selected_index", r.ranking.selected_index},
      {"ranking", r.ranking.ranking},
      {"scores", std::move(scores)},
      {"selected_text", r.selected_text},
  };
}

RankedRecord RankedFromJson(const json& j) {
  try {
    RankedRecord r;
    r.ranking.example_id = j.at("example_id").get<std::string>();
    r.ranking.method = ParseMitigation(j.at("method").get<std::string>());
    r.decode_method =
        ParseDecodeMethod(j.at("decode_method").get<std::string>());
    r.n_candidates = j.at("n_candidates").get<std::size_t>();
    r.ranking.selected_index = j.at("selected_index").get<std::size_t>();
    r.ranking.ranking = j.at("ranking").get<std::vector<std::size_t>>();
    for (const auto& s : j.at("scores")) {
      CertaintyScores cs;
      cs.probabilistic = s.at("prob_certainty").get<double>();
      if (s.contains("sem_certainty") && !s["sem_certainty"].is_null()) {
        cs.semantic = s["sem_certainty"].get<double>();
      }
      r.ranking.scores.push_back(cs);
    }
    r.selected_text = j.at("selected_text").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed ranked record: ") + e.what());
  }
}

}  // namespace crr
