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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "crr/artifacts.h"
#include "crr/errors.h"
#include "crr/parallel.h"
#include "crr/rng.h"

namespace crr {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr char kManifest[] = "manifest.json";
constexpr char kModel[] = "model.json";
constexpr char kCandidates[] = "candidates.jsonl";
constexpr char kScored[] = "scored.jsonl";
constexpr char kEvalReport[] = "eval_report.json";
constexpr char kStatsReport[] = "stats_report.json";
constexpr char kSweepReport[] = "sweep_report.json";

std::string Hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

std::string FileDigest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return Hex64(Fnv1a64(bytes));
}

std::string RankedName(Mitigation m) {
  return "ranked." + std::string(MitigationName(m)) + ".jsonl";
}

// Reads one JSON object level, recording every problem instead of stopping
// at the first.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix,
              std::vector<std::string>& errors)
      : obj_(obj), prefix_(std::move(prefix)), errors_(errors) {}

  ~FieldReader() {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.contains(key)) Report(key, "unknown key");
    }
  }

  const json* Find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() || it->is_null() ? nullptr : &*it;
  }

  const json* Object(const std::string& key) {
    const json* v = Find(key);
    if (v != nullptr && !v->is_object()) {
      Report(key, "must be an object");
      return nullptr;
    }
    return v;
  }

  void String(const std::string& key, std::string& out) {
    if (const json* v = Find(key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        Report(key, "must be a string");
      }
    }
  }

  void Bool(const std::string& key, bool& out) {
    if (const json* v = Find(key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        Report(key, "must be a boolean");
      }
    }
  }

  void Number(const std::string& key, double& out) {
    if (const json* v = Find(key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        Report(key, "must be a number");
      }
    }
  }

  template <typename Int>
  void Integer(const std::string& key, Int& out) {
    if (const json* v = Find(key)) {
      if (v->is_number_integer() &&
          (std::is_signed_v<Int> || v->get<std::int64_t>() >= 0)) {
        out = v->get<Int>();
      } else {
        Report(key, std::is_signed_v<Int> ? "must be an integer"
                                         : "must be a non-negative integer");
      }
    }
  }

  template <typename T, typename Parse>
  void Enum(const std::string& key, T& out, Parse parse) {
    if (const json* v = Find(key)) {
      if (!v->is_string()) {
        Report(key, "must be a string");
        return;
      }
      try {
        out = parse(v->get<std::string>());
      } catch (const crr::Error& e) {
        Report(key, e.what());
      }
    }
  }

  template <typename T, typename Parse>
  void EnumList(const std::string& key, std::vector<T>& out, Parse parse) {
    if (const json* v = Find(key)) {
      if (!v->is_array()) {
        Report(key, "must be a list of strings");
        return;
      }
      std::vector<T> parsed;
      for (const auto& item : *v) {
        if (!item.is_string()) {
          Report(key, "must be a list of strings");
          return;
        }
        try {
          parsed.push_back(parse(item.get<std::string>()));
        } catch (const crr::Error& e) {
          Report(key, e.what());
          return;
        }
      }
      out = std::move(parsed);
    }
  }

  void CountList(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = Find(key)) {
      std::vector<std::size_t> parsed;
      bool ok = v->is_array();
      for (const auto& item : ok ? *v : json::array()) {
        if (!item.is_number_integer() || item.get<std::int64_t>() < 0) {
          ok = false;
          break;
        }
        parsed.push_back(item.get<std::size_t>());
      }
      if (ok) {
        out = std::move(parsed);
      } else {
        Report(key, "must be a list of non-negative integers");
      }
    }
  }

  void Report(const std::string& key, const std::string& what) {
    errors_.push_back(prefix_ + key + ": " + what);
  }

 private:
  const json& obj_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

[[noreturn]] void ThrowConfigErrors(const std::vector<std::string>& errors) {
  std::string msg = "invalid configuration (" + std::to_string(errors.size()) +
                    (errors.size() == 1 ? " problem):" : " problems):");
  for (const auto& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

template <typename T, typename Name>
json NameList(const std::vector<T>& values, Name name) {
  json out = json::array();
  for (const T& v : values) out.push_back(std::string(name(v)));
  return out;
}

}  // namespace

ProviderKind ParseProviderKind(std::string_view name) {
  if (name == "lexical") return ProviderKind::kLexical;
  if (name == "remote") return ProviderKind::kRemote;
  throw ArgumentError("unknown entailment provider '" + std::string(name) +
                      "' (expected lexical or remote)");
}

std::string_view ProviderKindName(ProviderKind kind) {
  return kind == ProviderKind::kLexical ? "lexical" : "remote";
}

CriticKind ParseCriticKind(std::string_view name) {
  if (name == "rule") return CriticKind::kRule;
  if (name == "remote") return CriticKind::kRemote;
  throw ArgumentError("unknown critic '" + std::string(name) +
                      "' (expected rule or remote)");
}

std::string_view CriticKindName(CriticKind kind) {
  return kind == CriticKind::kRule ? "rule" : "remote";
}

fs::path PipelineConfig::Resolve(const std::string& path) const {
  const fs::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

void PipelineConfig::Validate(bool check_paths) const {
  std::vector<std::string> errors;
  auto check = [&](bool ok, const char* field, const std::string& what) {
    if (!ok) errors.push_back(std::string(field) + ": " + what);
  };
  check(model_path.empty() != corpus_path.empty(), "model.path",
        "exactly one of model.path and model.corpus must be set");
  check(order >= 1, "model.order", "must be >= 1");
  check(alpha > 0.0, "model.alpha", "must be > 0");
  check(!dataset_path.empty(), "dataset.path", "is required");
  check(decode.beam_size >= 1, "decode.beam_size", "must be >= 1");
  check(decode.temperature > 0.0, "decode.temperature", "must be > 0");
  check(decode.top_k >= 1, "decode.top_k", "must be >= 1");
  check(decode.top_p > 0.0 && decode.top_p <= 1.0, "decode.top_p",
        "must lie in (0, 1]");
  check(decode.uncertainty_lambda >= 0.0, "decode.uncertainty_lambda",
        "must be >= 0");
  check(decode.max_new_tokens >= 1, "decode.max_new_tokens", "must be >= 1");
  check(decode.beam_perturbation >= 0.0, "decode.beam_perturbation",
        "must be >= 0");
  check(n_candidates >= 1, "n_candidates", "must be >= 1");
  check(!mitigations.empty(), "mitigations", "must name at least one method");
  const bool remote_used =
      provider == ProviderKind::kRemote || critic == CriticKind::kRemote;
  check(!remote_used || !remote.endpoint.empty(), "remote.endpoint",
        "is required when provider or critic is remote");
  check(remote.timeout_ms > 0, "remote.timeout_ms", "must be > 0");
  check(remote.retries >= 0, "remote.retries", "must be >= 0");
  check(remote.max_batch >= 1, "remote.max_batch", "must be >= 1");
  check(max_in_flight >= 1, "max_in_flight", "must be >= 1");
  check(threshold > 0.0 && threshold < 1.0, "threshold", "must lie in (0, 1)");
  check(significance > 0.0 && significance < 1.0, "significance",
        "must lie in (0, 1)");
  if (sweep) {
    check(!sweep_methods.empty(), "sweep.methods",
          "must name at least one decoding method");
    check(!sweep_n.empty(), "sweep.n", "must list at least one size");
    for (std::size_t n : sweep_n) {
      check(n >= 1, "sweep.n", "sizes must be >= 1");
    }
  }
  check(!output_dir.empty(), "output_dir", "is required");
  check(workers >= 1, "workers", "must be >= 1");
  if (check_paths) {
    auto exists = [&](const std::string& p, const char* field) {
      if (!p.empty() && !fs::is_regular_file(Resolve(p))) {
        errors.push_back(std::string(field) + ": file not found: " +
                         Resolve(p).string());
      }
    };
    exists(model_path, "model.path");
    exists(corpus_path, "model.corpus");
    exists(dataset_path, "dataset.path");
  }
  if (!errors.empty()) ThrowConfigErrors(errors);
}

json PipelineConfig::ToJson() const {
  return {
      {"model",
       {{"path", model_path},
        {"corpus", corpus_path},
        {"order", order},
        {"alpha", alpha},
        {"tokenizer", TokenizerName(tokenizer)}}},
      {"dataset",
       {{"path", dataset_path},
        {"format", DatasetFormatName(dataset.format)},
        {"max_history_turns", dataset.max_history_turns},
        {"strict", dataset.strict}}},
      {"decode",
       {{"method", DecodeMethodName(decode.method)},
        {"beam_size", decode.beam_size},
        {"temperature", decode.temperature},
        {"top_k", decode.top_k},
        {"top_p", decode.top_p},
        {"uncertainty_lambda", decode.uncertainty_lambda},
        {"max_new_tokens", decode.max_new_tokens},
        {"beam_perturbation", decode.beam_perturbation}}},
      {"n_candidates", n_candidates},
      {"base_seed", base_seed},
      {"mitigations", NameList(mitigations, MitigationName)},
      {"provider", ProviderKindName(provider)},
      {"critic", CriticKindName(critic)},
      {"remote",
       {{"endpoint", remote.endpoint},
        {"timeout_ms", remote.timeout_ms},
        {"retries", remote.retries},
        {"max_batch", remote.max_batch}}},
      {"max_in_flight", max_in_flight},
      {"threshold", threshold},
      {"significance", significance},
      {"sweep",
       {{"enabled", sweep},
        {"methods", NameList(sweep_methods, DecodeMethodName)},
        {"n", sweep_n}}},
      {"output_dir", output_dir},
      {"workers", workers},
  };
}

PipelineConfig PipelineConfig::FromJson(const json& j, fs::path base_dir) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  PipelineConfig c;
  c.base_dir = std::move(base_dir);
  std::vector<std::string> errors;
  {
    FieldReader top(j, "", errors);
    if (const json* m = top.Object("model")) {
      FieldReader r(*m, "model.", errors);
      r.String("path", c.model_path);
      r.String("corpus", c.corpus_path);
      r.Integer("order", c.order);
      r.Number("alpha", c.alpha);
      r.Enum("tokenizer", c.tokenizer, ParseTokenizerKind);
    }
    if (const json* d = top.Object("dataset")) {
      FieldReader r(*d, "dataset.", errors);
      r.String("path", c.dataset_path);
      r.Enum("format", c.dataset.format, ParseDatasetFormat);
      r.Integer("max_history_turns", c.dataset.max_history_turns);
      r.Bool("strict", c.dataset.strict);
    }
    if (const json* d = top.Object("decode")) {
      FieldReader r(*d, "decode.", errors);
      r.Enum("method", c.decode.method, ParseDecodeMethod);
      r.Integer("beam_size", c.decode.beam_size);
      r.Number("temperature", c.decode.temperature);
      r.Integer("top_k", c.decode.top_k);
      r.Number("top_p", c.decode.top_p);
      r.Number("uncertainty_lambda", c.decode.uncertainty_lambda);
      r.Integer("max_new_tokens", c.decode.max_new_tokens);
      r.Number("beam_perturbation", c.decode.beam_perturbation);
    }
    top.Integer("n_candidates", c.n_candidates);
    top.Integer("base_seed", c.base_seed);
    top.EnumList("mitigations", c.mitigations, ParseMitigation);
    top.Enum("provider", c.provider, ParseProviderKind);
    top.Enum("critic", c.critic, ParseCriticKind);
    if (const json* rm = top.Object("remote")) {
      FieldReader r(*rm, "remote.", errors);
      r.String("endpoint", c.remote.endpoint);
      r.Integer("timeout_ms", c.remote.timeout_ms);
      r.Integer("retries", c.remote.retries);
      r.Integer("max_batch", c.remote.max_batch);
    }
    top.Integer("max_in_flight", c.max_in_flight);
    top.Number("threshold", c.threshold);
    top.Number("significance", c.significance);
    if (const json* s = top.Object("sweep")) {
      FieldReader r(*s, "sweep.", errors);
      r.Bool("enabled", c.sweep);
      r.EnumList("methods", c.sweep_methods, ParseDecodeMethod);
      r.CountList("n", c.sweep_n);
    }
    top.String("output_dir", c.output_dir);
    top.Integer("workers", c.workers);
  }
  if (!errors.empty()) ThrowConfigErrors(errors);
  return c;
}

PipelineConfig PipelineConfig::Load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError("config " + path.string() + " is not valid JSON");
  }
  return FromJson(j, fs::absolute(path).parent_path());
}

std::uint64_t PipelineConfig::Hash() const {
  json j = ToJson();
  j.erase("output_dir");
  j.erase("workers");
  return Fnv1a64(j.dump());
}

std::unique_ptr<EntailmentProvider> MakeProvider(
    ProviderKind kind, const NliClientOptions& remote) {
  if (kind == ProviderKind::kRemote) {
    return std::make_unique<RemoteEntailmentProvider>(remote);
  }
  return std::make_unique<LexicalEntailmentProvider>();
}

std::unique_ptr<FaithfulnessCritic> MakeCritic(CriticKind kind,
                                               const NliClientOptions& remote) {
  if (kind == CriticKind::kRemote) return std::make_unique<RemoteCritic>(remote);
  return std::make_unique<RuleBasedCritic>();
}

std::vector<CandidateSet> GenerateCandidates(
    const NgramModel& model, std::span<const DialogueExample> examples,
    const DecodeConfig& config, std::size_t n_candidates,
    std::uint64_t base_seed, std::size_t workers) {
  config.Validate();
  std::vector<CandidateSet> sets(examples.size());
  ParallelFor(examples.size(), workers, [&](std::size_t i) {
    sets[i] = SampleCandidateSet(model, examples[i].context(), examples[i].id,
                                 config, n_candidates, base_seed);
  });
  return sets;
}

json ScoredSet::ToJson() const {
  json candidates = json::array();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    json c = ScoresToJson(scores[i]);
    c["index"] = i;
    c["hallucination_prob"] =
        hallucination_prob[i] ? json(*hallucination_prob[i]) : json(nullptr);
    candidates.push_back(std::move(c));
  }
  return {
      {"example_id", example_id},
      {"candidates", std::move(candidates)},
      {"entailment", matrix ? MatrixToJson(*matrix) : json(nullptr)},
      {"critic", critic_tag.empty() ? json(nullptr) : json(critic_tag)},
  };
}

ScoredSet ScoredSet::FromJson(const json& j) {
  try {
    ScoredSet s;
    s.example_id = j.at("example_id").get<std::string>();
    for (const auto& c : j.at("candidates")) {
      if (c.at("index").get<std::size_t>() != s.scores.size()) {
        throw DataError("scored candidates of '" + s.example_id +
                        "' are not in index order");
      }
      CertaintyScores cs;
      cs.probabilistic = c.at("prob_certainty").get<double>();
      if (c.contains("sem_certainty") && !c["sem_certainty"].is_null()) {
        cs.semantic = c["sem_certainty"].get<double>();
      }
      s.scores.push_back(cs);
      if (c.contains("hallucination_prob") &&
          !c["hallucination_prob"].is_null()) {
        s.hallucination_prob.push_back(c["hallucination_prob"].get<double>());
      } else {
        s.hallucination_prob.push_back(std::nullopt);
      }
    }
    if (j.contains("entailment") && !j["entailment"].is_null()) {
      s.matrix = MatrixFromJson(j["entailment"]);
      if (s.matrix->n != s.scores.size()) {
        throw DataError("entailment matrix of '" + s.example_id +
                        "' does not match its candidate count");
      }
    }
    if (j.contains("critic") && j["critic"].is_string()) {
      s.critic_tag = j["critic"].get<std::string>();
    }
    return s;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed scored record: ") + e.what());
  }
}

ScoredSet ScoreCandidateSet(const CandidateSet& set,
                            const EntailmentProvider* provider,
                            const FaithfulnessCritic* critic,
                            std::size_t max_in_flight) {
  ScoredSet s;
  s.example_id = set.example_id;
  for (const auto& c : set.candidates) {
    s.scores.push_back({ProbabilisticCertainty(c), std::nullopt});
  }
  if (provider != nullptr) {
    s.matrix = BuildEntailmentMatrix(set, *provider, max_in_flight);
    const std::vector<double> agreement = AgreementScores(*s.matrix);
    for (std::size_t i = 0; i < agreement.size(); ++i) {
      s.scores[i].semantic = agreement[i];
    }
  }
  s.hallucination_prob.assign(set.candidates.size(), std::nullopt);
  if (critic != nullptr) {
    s.critic_tag = critic->tag();
    for (std::size_t i = 0; i < set.candidates.size(); ++i) {
      const double p = critic->HallucinationProbability(
          set.context.knowledge, set.candidates[i].text);
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ContractViolation("critic returned a probability outside [0, 1]");
      }
      s.hallucination_prob[i] = p;
    }
  }
  return s;
}

RankingResult RankFromScores(const CandidateSet& set, const ScoredSet& scored,
                             Mitigation method) {
  if (set.example_id != scored.example_id ||
      set.candidates.size() != scored.scores.size()) {
    throw DataError("scored record '" + scored.example_id +
                    "' does not match candidate set '" + set.example_id + "'");
  }
  switch (method) {
    case Mitigation::kNone:
      return RankNone(set);
    case Mitigation::kPCrr:
      return RankPCrr(set);
    case Mitigation::kSCrr:
      if (!scored.matrix) {
        throw ConfigError("S-CRR needs an entailment matrix but '" +
                          set.example_id + "' was scored without a provider");
      }
      return RankSCrr(set, *scored.matrix);
  }
  throw ArgumentError("unknown mitigation");
}

std::vector<stats::ScoredObservation> ObservationsFromScored(
    std::span<const ScoredSet> scored) {
  std::vector<stats::ScoredObservation> out;
  for (const auto& s : scored) {
    for (std::size_t i = 0; i < s.scores.size(); ++i) {
      if (!s.scores[i].semantic || !s.hallucination_prob[i]) {
        throw DataError("candidate " + std::to_string(i) + " of '" +
                        s.example_id +
                        "' lacks semantic certainty or a critic verdict");
      }
      out.push_back({s.scores[i].probabilistic, *s.scores[i].semantic,
                     *s.hallucination_prob[i]});
    }
  }
  return out;
}

std::vector<CandidateSet> ReadCandidateSets(const fs::path& path) {
  std::vector<CandidateSet> out;
  for (const auto& j : ReadJsonl(path, artifact_kind::kCandidates)) {
    out.push_back(CandidateSetFromJson(j));
  }
  return out;
}

std::vector<ScoredSet> ReadScoredSets(const fs::path& path) {
  std::vector<ScoredSet> out;
  for (const auto& j : ReadJsonl(path, artifact_kind::kScored)) {
    out.push_back(ScoredSet::FromJson(j));
  }
  return out;
}

std::vector<RankedRecord> ReadRankedRecords(const fs::path& path) {
  std::vector<RankedRecord> out;
  for (const auto& j : ReadJsonl(path, artifact_kind::kRanked)) {
    out.push_back(RankedFromJson(j));
  }
  return out;
}

void WriteEvalReport(const EvalReport& report, const fs::path& json_path,
                     bool overwrite) {
  fs::path txt = json_path;
  fs::path csv = json_path;
  txt.replace_extension(".txt");
  csv.replace_extension(".csv");
  WriteJsonFile(json_path, report.ToJson(), overwrite);
  WriteTextFile(txt, report.RenderTable(), overwrite);
  WriteTextFile(csv, report.RenderCsv(), overwrite);
}

RunSummary RunPipeline(const PipelineConfig& config) {
  config.Validate(true);
  const fs::path out = config.Resolve(config.output_dir);
  fs::create_directories(out);

  json manifest = {
      {"schema_version", SchemaVersionString()},
      {"config_hash", Hex64(config.Hash())},
      {"base_seed", config.base_seed},
      {"seed_derivation",
       "mix(mix(base_seed ^ mix(fnv1a64(example_id))) + candidate_index)"},
      {"inputs", json::object()},
  };
  manifest["inputs"]["dataset"] = FileDigest(config.Resolve(config.dataset_path));
  if (!config.model_path.empty()) {
    manifest["inputs"]["model"] = FileDigest(config.Resolve(config.model_path));
  } else {
    manifest["inputs"]["corpus"] =
        FileDigest(config.Resolve(config.corpus_path));
  }
  const fs::path manifest_path = out / kManifest;
  if (fs::exists(manifest_path)) {
    const json previous = ReadJsonFile(manifest_path);
    if (previous != manifest) {
      throw ConfigError(
          manifest_path.string() +
          " records a different configuration or inputs; use a fresh "
          "output_dir");
    }
    spdlog::info("resuming in {}", out.string());
  } else {
    WriteJsonFile(manifest_path, manifest);
  }

  RunSummary summary;
  auto stage = [&](const std::string& name, const fs::path& artifact,
                   const auto& body) {
    if (fs::exists(artifact)) {
      spdlog::info("stage {}: {} exists, skipping", name,
                   artifact.filename().string());
      summary.skipped.push_back(name);
      return;
    }
    spdlog::info("stage {}", name);
    body();
    summary.executed.push_back(name);
  };

  const std::vector<DialogueExample> examples =
      LoadDataset(config.Resolve(config.dataset_path), config.dataset);
  const auto provider = MakeProvider(config.provider, config.remote);
  const auto critic = MakeCritic(config.critic, config.remote);

  fs::path model_file = config.model_path.empty()
                            ? out / kModel
                            : config.Resolve(config.model_path);
  if (!config.corpus_path.empty()) {
    stage("model", model_file, [&] {
      const auto corpus = LoadCorpus(config.Resolve(config.corpus_path));
      const NgramModel model =
          Train(corpus, config.order, config.alpha, config.tokenizer);
      fs::path partial = model_file;
      partial += ".partial";
      model.Save(partial);
      fs::rename(partial, model_file);
    });
  }
  std::optional<NgramModel> model;
  auto load_model = [&]() -> const NgramModel& {
    if (!model) model = NgramModel::Load(model_file);
    return *model;
  };

  stage("generate", out / kCandidates, [&] {
    const auto sets =
        GenerateCandidates(load_model(), examples, config.decode,
                           config.n_candidates, config.base_seed,
                           config.workers);
    JsonlWriter writer(out / kCandidates, artifact_kind::kCandidates);
    for (const auto& s : sets) writer.Write(CandidateSetToJson(s));
    writer.Commit();
  });

  stage("score", out / kScored, [&] {
    const auto sets = ReadCandidateSets(out / kCandidates);
    std::vector<ScoredSet> scored(sets.size());
    ParallelFor(sets.size(), config.workers, [&](std::size_t i) {
      scored[i] = ScoreCandidateSet(sets[i], provider.get(), critic.get(),
                                    config.max_in_flight);
    });
    JsonlWriter writer(out / kScored, artifact_kind::kScored);
    for (const auto& s : scored) writer.Write(s.ToJson());
    writer.Commit();
  });

  for (Mitigation m : config.mitigations) {
    const fs::path path = out / RankedName(m);
    stage("rank:" + std::string(MitigationName(m)), path, [&] {
      const auto sets = ReadCandidateSets(out / kCandidates);
      const auto scored = ReadScoredSets(out / kScored);
      if (sets.size() != scored.size()) {
        throw DataError("scored.jsonl and candidates.jsonl differ in length");
      }
      JsonlWriter writer(path, artifact_kind::kRanked);
      for (std::size_t i = 0; i < sets.size(); ++i) {
        writer.Write(RankedToJson(
            MakeRankedRecord(sets[i], RankFromScores(sets[i], scored[i], m))));
      }
      writer.Commit();
    });
  }

  fs::path eval_csv = out / kEvalReport;
  eval_csv.replace_extension(".csv");
  stage("evaluate", eval_csv, [&] {
    std::vector<RankedRecord> ranked;
    for (Mitigation m : config.mitigations) {
      for (auto& r : ReadRankedRecords(out / RankedName(m))) {
        ranked.push_back(std::move(r));
      }
    }
    const EvalReport report = Evaluate(ranked, examples, *critic,
                                       config.threshold, config.workers);
    WriteEvalReport(report, out / kEvalReport, /*overwrite=*/true);
  });

  stage("stats", out / kStatsReport, [&] {
    const auto scored = ReadScoredSets(out / kScored);
    const auto observations = ObservationsFromScored(scored);
    const auto report = stats::RunHypothesisSuite(
        observations, config.threshold, config.significance);
    WriteJsonFile(out / kStatsReport, report.ToJson());
  });

  if (config.sweep) {
    fs::path sweep_csv = out / kSweepReport;
    sweep_csv.replace_extension(".csv");
    stage("sweep", sweep_csv, [&] {
      SweepOptions options;
      options.methods = config.sweep_methods;
      options.mitigations = config.mitigations;
      options.n_list = config.sweep_n;
      options.threshold = config.threshold;
      options.workers = config.workers;
      const auto source =
          NgramCandidateSource(load_model(), config.decode, config.base_seed);
      const EvalReport report =
          AblationSweep(examples, source, provider.get(), *critic, options);
      WriteEvalReport(report, out / kSweepReport, /*overwrite=*/true);
    });
  }
  return summary;
}

}  // namespace crr
