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

#include "crr/harness.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "crr/errors.h"
#include "crr/parallel.h"
#include "crr/text.h"

namespace crr {

using json = nlohmann::json;

namespace {

std::vector<std::string> ReadUtterances(const json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array()) throw DataError("history must be a string or a list");
  std::vector<std::string> out;
  for (const auto& u : v) {
    if (!u.is_string()) throw DataError("history entries must be strings");
    out.push_back(u.get<std::string>());
  }
  return out;
}

const json* FirstPresent(const json& j,
                         std::initializer_list<const char*> names) {
  for (const char* n : names) {
    if (j.contains(n) && !j[n].is_null()) return &j[n];
  }
  return nullptr;
}

std::string IdOf(const json& j, std::size_t line_no) {
  if (j.contains("id")) {
    const auto& id = j["id"];
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<long long>());
  }
  if (j.contains("dialog_idx") && j.contains("turn")) {
    return j["dialog_idx"].dump() + "-" + j["turn"].dump();
  }
  return std::to_string(line_no);
}

DialogueExample ParseRecord(const json& j, const DatasetOptions& options,
                            std::size_t line_no) {
  if (!j.is_object()) throw DataError("record is not a JSON object");
  const bool generic = options.format == DatasetFormat::kGenericJsonl;
  DialogueExample ex;
  ex.id = IdOf(j, line_no);

  const json* knowledge =
      generic ? FirstPresent(j, {"knowledge", "document", "fact"})
              : FirstPresent(j, {"knowledge"});
  if (knowledge == nullptr || !knowledge->is_string() ||
      knowledge->get<std::string>().empty()) {
    throw DataError("record '" + ex.id + "' has no knowledge text");
  }
  ex.knowledge = knowledge->get<std::string>();

  const json* history = generic
                            ? FirstPresent(j, {"history", "context", "dialogue"})
                            : FirstPresent(j, {"history"});
  if (history != nullptr) ex.history = ReadUtterances(*history);
  if (ex.history.size() > options.max_history_turns) {
    ex.history.erase(ex.history.begin(),
                     ex.history.end() - options.max_history_turns);
  }

  const json* reference = generic ? FirstPresent(j, {"reference", "response"})
                                  : FirstPresent(j, {"response"});
  if (reference != nullptr) {
    if (!reference->is_string()) throw DataError("response must be a string");
    ex.reference = reference->get<std::string>();
  }
  return ex;
}

std::string FormatPercent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

DatasetFormat ParseDatasetFormat(std::string_view name) {
  if (name == "faithdial" || name == "faithdial_jsonl") {
    return DatasetFormat::kFaithDialJsonl;
  }
  if (name == "generic" || name == "generic_jsonl") {
    return DatasetFormat::kGenericJsonl;
  }
  throw ArgumentError("unknown dataset format '" + std::string(name) + "'");
}

std::string_view DatasetFormatName(DatasetFormat format) {
  return format == DatasetFormat::kFaithDialJsonl ? "faithdial_jsonl"
                                                  : "generic_jsonl";
}

std::vector<DialogueExample> ParseDataset(std::istream& in,
                                          const DatasetOptions& options,
                                          std::string_view source) {
  std::vector<DialogueExample> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = std::string(source) + ":" +
                              std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(line);
      DialogueExample ex = ParseRecord(j, options, line_no);
      if (!ids.insert(ex.id).second) {
        throw DataError(where + "duplicate example id '" + ex.id + "'");
      }
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      if (options.strict) throw DataError(where + e.what());
      spdlog::warn("skipping {}{}", where, e.what());
    } catch (const DataError& e) {
      const std::string msg = e.what();
      if (msg.starts_with(where)) throw;  // duplicate ids are never skipped
      if (options.strict) throw DataError(where + msg);
      spdlog::warn("skipping {}{}", where, msg);
    }
  }
  if (out.empty()) spdlog::warn("{}: dataset is empty", source);
  return out;
}

std::vector<DialogueExample> LoadDataset(const std::filesystem::path& path,
                                         const DatasetOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dataset " + path.string());
  return ParseDataset(in, options, path.string());
}

double RuleBasedCritic::HallucinationProbability(
    std::string_view knowledge, std::string_view response) const {
  return 1.0 - ContentCoverage(knowledge, response);
}

FaithfulnessJudgment JudgeFaithfulness(std::string_view knowledge,
                                       std::string_view response,
                                       const FaithfulnessCritic& critic,
                                       double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ArgumentError("faithfulness threshold must lie in (0, 1)");
  }
  FaithfulnessJudgment j;
  j.hallucination_prob = critic.HallucinationProbability(knowledge, response);
  if (!(j.hallucination_prob >= 0.0 && j.hallucination_prob <= 1.0)) {
    throw ContractViolation("critic returned a probability outside [0, 1]");
  }
  j.faithful = j.hallucination_prob < threshold;
  j.critic_tag = critic.tag();
  return j;
}

const EvalRow* EvalReport::Find(const EvalKey& key) const {
  auto it = std::lower_bound(
      rows.begin(), rows.end(), key,
      [](const EvalRow& r, const EvalKey& k) { return r.key < k; });
  return it != rows.end() && it->key == key ? &*it : nullptr;
}

json EvalReport::ToJson() const {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({
        {"decode_method", DecodeMethodName(r.key.decode_method)},
        {"mitigation", MitigationName(r.key.mitigation)},
        {"n_candidates", r.key.n_candidates},
        {"n_examples", r.n_examples},
        {"n_faithful", r.n_faithful},
        {"faithful_percent", r.faithful_percent},
    });
  }
  return {{"rows", std::move(out)}};
}

EvalReport EvalReport::FromJson(const json& j) {
  EvalReport report;
  try {
    for (const auto& r : j.at("rows")) {
      EvalRow row;
      row.key.decode_method =
          ParseDecodeMethod(r.at("decode_method").get<std::string>());
      row.key.mitigation = ParseMitigation(r.at("mitigation").get<std::string>());
      row.key.n_candidates = r.at("n_candidates").get<std::size_t>();
      row.n_examples = r.at("n_examples").get<std::size_t>();
      row.n_faithful = r.at("n_faithful").get<std::size_t>();
      row.faithful_percent = r.at("faithful_percent").get<double>();
      report.rows.push_back(row);
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const EvalRow& a, const EvalRow& b) { return a.key < b.key; });
  return report;
}

std::string EvalReport::RenderTable() const {
  std::set<std::size_t> columns;
  std::map<std::pair<DecodeMethod, Mitigation>,
           std::map<std::size_t, double>>
      grid;
  for (const auto& r : rows) {
    columns.insert(r.key.n_candidates);
    grid[{r.key.decode_method, r.key.mitigation}][r.key.n_candidates] =
        r.faithful_percent;
  }
  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%-10s %-11s", "decoding", "mitigation");
  out << buf;
  for (std::size_t n : columns) {
    std::snprintf(buf, sizeof(buf), " %8s", ("n=" + std::to_string(n)).c_str());
    out << buf;
  }
  out << '\n';
  for (const auto& [key, cells] : grid) {
    std::snprintf(buf, sizeof(buf), "%-10s %-11s",
                  std::string(DecodeMethodName(key.first)).c_str(),
                  std::string(MitigationName(key.second)).c_str());
    out << buf;
    for (std::size_t n : columns) {
      auto it = cells.find(n);
      std::snprintf(buf, sizeof(buf), " %8s",
                    it == cells.end() ? "-" : FormatPercent(it->second).c_str());
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string EvalReport::RenderCsv() const {
  std::ostringstream out;
  out << "decode_method,mitigation,n_candidates,n_examples,n_faithful,"
         "faithful_percent\n";
  for (const auto& r : rows) {
    out << DecodeMethodName(r.key.decode_method) << ','
        << MitigationName(r.key.mitigation) << ',' << r.key.n_candidates << ','
        << r.n_examples << ',' << r.n_faithful << ','
        << FormatPercent(r.faithful_percent) << '\n';
  }
  return out.str();
}

EvalReport Evaluate(std::span<const RankedRecord> ranked,
                    std::span<const DialogueExample> examples,
                    const FaithfulnessCritic& critic, double threshold,
                    std::size_t workers) {
  std::unordered_map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    by_id.emplace(examples[i].id, i);
  }
  std::vector<std::string> orphans;
  for (const auto& r : ranked) {
    if (!by_id.contains(r.ranking.example_id)) {
      orphans.push_back(r.ranking.example_id);
    }
  }
  if (!orphans.empty()) {
    std::string list;
    for (std::size_t i = 0; i < orphans.size(); ++i) {
      list += (i ? ", " : "") + orphans[i];
    }
    throw DataError("ranked results without a matching example: " + list);
  }

  std::vector<char> faithful(ranked.size(), 0);
  ParallelFor(ranked.size(), workers, [&](std::size_t i) {
    const auto& ex = examples[by_id.at(ranked[i].ranking.example_id)];
    faithful[i] = JudgeFaithfulness(ex.knowledge, ranked[i].selected_text,
                                    critic, threshold)
                      .faithful;
  });

  std::map<EvalKey, EvalRow> groups;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    const EvalKey key{ranked[i].decode_method, ranked[i].ranking.method,
                      ranked[i].n_candidates};
    auto& row = groups[key];
    row.key = key;
    ++row.n_examples;
    row.n_faithful += faithful[i] ? 1 : 0;
  }
  EvalReport report;
  for (auto& [key, row] : groups) {
    row.faithful_percent = 100.0 * static_cast<double>(row.n_faithful) /
                           static_cast<double>(row.n_examples);
    report.rows.push_back(row);
  }
  return report;
}

CandidateSource NgramCandidateSource(const NgramModel& model,
                                     DecodeConfig base,
                                     std::uint64_t base_seed) {
  return [&model, base, base_seed](const DialogueExample& ex,
                                   DecodeMethod method, std::size_t n) {
    DecodeConfig cfg = base;
    cfg.method = method;
    return SampleCandidateSet(model, ex.context(), ex.id, cfg, n, base_seed);
  };
}

EvalReport AblationSweep(std::span<const DialogueExample> examples,
                         const CandidateSource& source,
                         const EntailmentProvider* provider,
                         const FaithfulnessCritic& critic,
                         const SweepOptions& options) {
  if (options.n_list.empty()) {
    throw ArgumentError("sweep needs at least one candidate count");
  }
  std::vector<RankedRecord> ranked;
  for (DecodeMethod method : options.methods) {
    for (std::size_t n : options.n_list) {
      std::vector<std::vector<RankedRecord>> per_example(examples.size());
      ParallelFor(examples.size(), options.workers, [&](std::size_t i) {
        const CandidateSet set = source(examples[i], method, n);
        for (Mitigation m : options.mitigations) {
          per_example[i].push_back(
              MakeRankedRecord(set, Rank(set, m, provider, 1)));
        }
      });
      for (auto& records : per_example) {
        for (auto& r : records) ranked.push_back(std::move(r));
      }
    }
  }
  return Evaluate(ranked, examples, critic, options.threshold,
                  options.workers);
}

}  // namespace crr
