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

// crr: command-line entry point.
//
// Options left unset fall back to --config, then to built-in defaults.
// Environment overrides: CRR_CONFIG, CRR_SEED, CRR_WORKERS, CRR_LOG_LEVEL,
// CRR_ENDPOINT.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "crr/artifacts.h"
#include "crr/errors.h"
#include "crr/harness.h"
#include "crr/ngram_model.h"
#include "crr/parallel.h"
#include "crr/pipeline.h"
#include "crr/ranking.h"
#include "crr/stats.h"

namespace crr {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> endpoint;
  std::string log_level = "info";
};

struct DecodeFlags {
  std::optional<std::string> method;
  std::optional<int> beam_size;
  std::optional<double> temperature;
  std::optional<int> top_k;
  std::optional<double> top_p;
  std::optional<double> lambda;
  std::optional<int> max_new_tokens;
  std::optional<double> beam_perturbation;

  void Register(CLI::App* app) {
    app->add_option("--method", method, "beam | topk | nucleus | ubeam");
    app->add_option("--beam-size", beam_size);
    app->add_option("--temperature", temperature);
    app->add_option("--top-k", top_k);
    app->add_option("--top-p", top_p);
    app->add_option("--lambda", lambda, "uncertainty penalty weight");
    app->add_option("--max-new-tokens", max_new_tokens);
    app->add_option("--beam-perturbation", beam_perturbation);
  }

  void Apply(DecodeConfig& c) const {
    if (method) c.method = ParseDecodeMethod(*method);
    if (beam_size) c.beam_size = *beam_size;
    if (temperature) c.temperature = *temperature;
    if (top_k) c.top_k = *top_k;
    if (top_p) c.top_p = *top_p;
    if (lambda) c.uncertainty_lambda = *lambda;
    if (max_new_tokens) c.max_new_tokens = *max_new_tokens;
    if (beam_perturbation) c.beam_perturbation = *beam_perturbation;
  }
};

struct DataFlags {
  std::optional<std::string> format;
  std::optional<std::size_t> max_history_turns;
  bool lenient = false;

  void Register(CLI::App* app) {
    app->add_option("--format", format, "faithdial_jsonl | generic_jsonl");
    app->add_option("--max-history-turns", max_history_turns);
    app->add_flag("--lenient", lenient, "skip malformed records");
  }

  DatasetOptions Apply(DatasetOptions o) const {
    if (format) o.format = ParseDatasetFormat(*format);
    if (max_history_turns) o.max_history_turns = *max_history_turns;
    if (lenient) o.strict = false;
    return o;
  }
};

std::vector<std::size_t> ParseSizeList(const std::string& text) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ArgumentError("'" + item + "' is not a positive integer");
    }
    pos = comma + 1;
  }
  return out;
}

template <typename T, typename Parse>
std::vector<T> ParseNameList(const std::string& text, Parse parse) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    out.push_back(parse(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

PipelineConfig BaseConfig(const GlobalFlags& g) {
  PipelineConfig c =
      g.config.empty() ? PipelineConfig{} : PipelineConfig::Load(g.config);
  if (g.seed) c.base_seed = *g.seed;
  if (g.workers) c.workers = *g.workers;
  if (g.endpoint) c.remote.endpoint = *g.endpoint;
  return c;
}

void Emit(const json& doc, const std::string& out, bool overwrite) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << '\n';
  } else {
    WriteJsonFile(out, doc, overwrite);
  }
}

std::string RequireRemoteEndpoint(const PipelineConfig& c, bool needed) {
  if (needed && c.remote.endpoint.empty()) {
    throw ConfigError(
        "remote.endpoint: is required when provider or critic is remote "
        "(set --endpoint or CRR_ENDPOINT)");
  }
  return c.remote.endpoint;
}

int Main(int argc, char** argv) {
  CLI::App app{"Certainty-based response ranking toolkit", "crr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "crr 1.0.0");

  GlobalFlags g;
  app.add_option("--config", g.config, "pipeline config (JSON)")
      ->envname("CRR_CONFIG");
  app.add_option("--seed", g.seed, "base seed")->envname("CRR_SEED");
  app.add_option("--workers", g.workers, "worker threads")
      ->envname("CRR_WORKERS");
  app.add_option("--endpoint", g.endpoint, "scoring service base URL")
      ->envname("CRR_ENDPOINT");
  app.add_option("--log-level", g.log_level,
                 "trace | debug | info | warn | error | off")
      ->envname("CRR_LOG_LEVEL")
      ->capture_default_str();

  bool overwrite = false;
  app.add_flag("--overwrite", overwrite, "replace existing output files");

  std::function<int()> action;

  // lm-train
  auto* train = app.add_subcommand("lm-train", "train an n-gram model");
  std::string corpus, train_out, tokenizer = "word";
  int order = 3;
  double alpha = NgramModel::kDefaultAlpha;
  train->add_option("--corpus", corpus)->required();
  train->add_option("--order", order)->capture_default_str();
  train->add_option("--alpha", alpha)->capture_default_str();
  train->add_option("--tokenizer", tokenizer, "word | char")
      ->capture_default_str();
  train->add_option("--out", train_out)->required();
  train->callback([&] {
    action = [&] {
      if (!overwrite && fs::exists(train_out)) {
        throw ConfigError("refusing to overwrite " + train_out);
      }
      const auto docs = LoadCorpus(corpus);
      const NgramModel model =
          Train(docs, order, alpha, ParseTokenizerKind(tokenizer));
      model.Save(train_out);
      spdlog::info("trained order-{} model on {} documents, vocabulary {}",
                   order, docs.size(), model.vocab().size());
      return 0;
    };
  });

  // generate
  auto* generate = app.add_subcommand("generate", "decode candidate sets");
  std::string gen_model, gen_data, gen_out;
  std::optional<std::size_t> gen_n;
  DecodeFlags gen_decode;
  DataFlags gen_dataset;
  generate->add_option("--model", gen_model)->required();
  generate->add_option("--data", gen_data)->required();
  generate->add_option("--num-candidates", gen_n);
  generate->add_option("--out", gen_out)->required();
  gen_decode.Register(generate);
  gen_dataset.Register(generate);
  generate->callback([&] {
    action = [&] {
      PipelineConfig c = BaseConfig(g);
      gen_decode.Apply(c.decode);
      const auto examples = LoadDataset(gen_data, gen_dataset.Apply(c.dataset));
      const NgramModel model = NgramModel::Load(gen_model);
      const auto sets = GenerateCandidates(model, examples, c.decode,
                                           gen_n.value_or(c.n_candidates),
                                           c.base_seed, c.workers);
      JsonlWriter writer(gen_out, artifact_kind::kCandidates, overwrite);
      for (const auto& s : sets) writer.Write(CandidateSetToJson(s));
      writer.Commit();
      spdlog::info("wrote {} candidate sets to {}", sets.size(), gen_out);
      return 0;
    };
  });

  // score
  auto* score = app.add_subcommand(
      "score", "certainty scores, critic verdicts and entailment matrices");
  std::string score_in, score_out;
  std::optional<std::string> score_provider, score_critic;
  score->add_option("--candidates", score_in)->required();
  score->add_option("--provider", score_provider, "lexical | remote");
  score->add_option("--critic", score_critic, "rule | remote | none");
  score->add_option("--out", score_out)->required();
  score->callback([&] {
    action = [&] {
      PipelineConfig c = BaseConfig(g);
      if (score_provider) c.provider = ParseProviderKind(*score_provider);
      const bool use_critic = score_critic.value_or("") != "none";
      if (score_critic && use_critic) c.critic = ParseCriticKind(*score_critic);
      RequireRemoteEndpoint(c, c.provider == ProviderKind::kRemote ||
                                   (use_critic &&
                                    c.critic == CriticKind::kRemote));
      const auto provider = MakeProvider(c.provider, c.remote);
      const auto critic = use_critic ? MakeCritic(c.critic, c.remote) : nullptr;
      const auto sets = ReadCandidateSets(score_in);
      std::vector<ScoredSet> scored(sets.size());
      ParallelFor(sets.size(), c.workers, [&](std::size_t i) {
        scored[i] = ScoreCandidateSet(sets[i], provider.get(), critic.get(),
                                      c.max_in_flight);
      });
      JsonlWriter writer(score_out, artifact_kind::kScored, overwrite);
      for (const auto& s : scored) writer.Write(s.ToJson());
      writer.Commit();
      return 0;
    };
  });

  // rank
  auto* rank = app.add_subcommand("rank", "select one response per set");
  std::string rank_in, rank_out, rank_method;
  std::optional<std::string> rank_scored, rank_provider;
  rank->add_option("--candidates", rank_in)->required();
  rank->add_option("--method", rank_method, "none | pcrr | scrr")->required();
  rank->add_option("--provider", rank_provider, "lexical | remote");
  rank->add_option("--scored", rank_scored,
                   "reuse entailment matrices from a scored artifact");
  rank->add_option("--out", rank_out)->required();
  rank->callback([&] {
    action = [&] {
      PipelineConfig c = BaseConfig(g);
      if (rank_provider) c.provider = ParseProviderKind(*rank_provider);
      const Mitigation method = ParseMitigation(rank_method);
      const auto sets = ReadCandidateSets(rank_in);
      std::vector<RankedRecord> ranked(sets.size());
      if (rank_scored) {
        const auto scored = ReadScoredSets(*rank_scored);
        if (scored.size() != sets.size()) {
          throw DataError("--scored and --candidates differ in length");
        }
        for (std::size_t i = 0; i < sets.size(); ++i) {
          ranked[i] = MakeRankedRecord(
              sets[i], RankFromScores(sets[i], scored[i], method));
        }
      } else {
        RequireRemoteEndpoint(c, method == Mitigation::kSCrr &&
                                     c.provider == ProviderKind::kRemote);
        const auto provider = MakeProvider(c.provider, c.remote);
        ParallelFor(sets.size(), c.workers, [&](std::size_t i) {
          ranked[i] = MakeRankedRecord(
              sets[i], Rank(sets[i], method, provider.get(), c.max_in_flight));
        });
      }
      JsonlWriter writer(rank_out, artifact_kind::kRanked, overwrite);
      for (const auto& r : ranked) writer.Write(RankedToJson(r));
      writer.Commit();
      return 0;
    };
  });

  // stats
  auto* stats_cmd = app.add_subcommand("stats", "hypothesis tests");
  std::string stats_in, stats_out;
  std::optional<double> stats_threshold, stats_alpha;
  stats_cmd->add_option("--scored", stats_in)->required();
  stats_cmd->add_option("--threshold", stats_threshold);
  stats_cmd->add_option("--significance", stats_alpha);
  stats_cmd->add_option("--out", stats_out, "report path, '-' for stdout");
  stats_cmd->callback([&] {
    action = [&] {
      const PipelineConfig c = BaseConfig(g);
      const auto scored = ReadScoredSets(stats_in);
      const auto report = stats::RunHypothesisSuite(
          ObservationsFromScored(scored), stats_threshold.value_or(c.threshold),
          stats_alpha.value_or(c.significance));
      std::cerr << report.RenderTable();
      Emit(report.ToJson(), stats_out, overwrite);
      return 0;
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "faithful percentage");
  std::vector<std::string> eval_ranked;
  std::string eval_data, eval_out;
  std::optional<std::string> eval_critic;
  std::optional<double> eval_threshold;
  DataFlags eval_dataset;
  evaluate->add_option("--ranked", eval_ranked, "one or more ranked files")
      ->required();
  evaluate->add_option("--data", eval_data)->required();
  evaluate->add_option("--critic", eval_critic, "rule | remote");
  evaluate->add_option("--threshold", eval_threshold);
  evaluate->add_option("--out", eval_out,
                       "report.json; .txt and .csv are written beside it")
      ->required();
  eval_dataset.Register(evaluate);
  evaluate->callback([&] {
    action = [&] {
      PipelineConfig c = BaseConfig(g);
      if (eval_critic) c.critic = ParseCriticKind(*eval_critic);
      RequireRemoteEndpoint(c, c.critic == CriticKind::kRemote);
      const auto examples =
          LoadDataset(eval_data, eval_dataset.Apply(c.dataset));
      std::vector<RankedRecord> ranked;
      for (const auto& path : eval_ranked) {
        for (auto& r : ReadRankedRecords(path)) ranked.push_back(std::move(r));
      }
      const auto critic = MakeCritic(c.critic, c.remote);
      const EvalReport report =
          Evaluate(ranked, examples, *critic,
                   eval_threshold.value_or(c.threshold), c.workers);
      WriteEvalReport(report, eval_out, overwrite);
      std::cout << report.RenderTable();
      return 0;
    };
  });

  // sweep
  auto* sweep = app.add_subcommand(
      "sweep", "generate, rank and evaluate over candidate-set sizes");
  std::string sweep_model, sweep_data, sweep_out, sweep_n = "5,10,20";
  std::optional<std::string> sweep_methods, sweep_mitigations, sweep_provider,
      sweep_critic;
  std::optional<double> sweep_threshold;
  DecodeFlags sweep_decode;
  DataFlags sweep_dataset;
  sweep->add_option("--model", sweep_model)->required();
  sweep->add_option("--data", sweep_data)->required();
  sweep->add_option("--n", sweep_n, "comma-separated set sizes")
      ->capture_default_str();
  sweep->add_option("--methods", sweep_methods,
                    "comma-separated decoding methods");
  sweep->add_option("--mitigations", sweep_mitigations,
                    "comma-separated mitigations");
  sweep->add_option("--provider", sweep_provider, "lexical | remote");
  sweep->add_option("--critic", sweep_critic, "rule | remote");
  sweep->add_option("--threshold", sweep_threshold);
  sweep->add_option("--out", sweep_out,
                    "report.json; .txt and .csv are written beside it")
      ->required();
  sweep_decode.Register(sweep);
  sweep_dataset.Register(sweep);
  sweep->callback([&] {
    action = [&] {
      PipelineConfig c = BaseConfig(g);
      sweep_decode.Apply(c.decode);
      if (sweep_provider) c.provider = ParseProviderKind(*sweep_provider);
      if (sweep_critic) c.critic = ParseCriticKind(*sweep_critic);
      RequireRemoteEndpoint(c, c.provider == ProviderKind::kRemote ||
                                   c.critic == CriticKind::kRemote);
      SweepOptions options;
      options.methods =
          sweep_methods
              ? ParseNameList<DecodeMethod>(*sweep_methods, ParseDecodeMethod)
              : c.sweep_methods;
      options.mitigations =
          sweep_mitigations
              ? ParseNameList<Mitigation>(*sweep_mitigations, ParseMitigation)
              : c.mitigations;
      options.n_list = ParseSizeList(sweep_n);
      options.threshold = sweep_threshold.value_or(c.threshold);
      options.workers = c.workers;
      const auto examples =
          LoadDataset(sweep_data, sweep_dataset.Apply(c.dataset));
      const NgramModel model = NgramModel::Load(sweep_model);
      const auto provider = MakeProvider(c.provider, c.remote);
      const auto critic = MakeCritic(c.critic, c.remote);
      const EvalReport report = AblationSweep(
          examples, NgramCandidateSource(model, c.decode, c.base_seed),
          provider.get(), *critic, options);
      WriteEvalReport(report, sweep_out, overwrite);
      std::cout << report.RenderTable();
      return 0;
    };
  });

  // report
  auto* report = app.add_subcommand("report", "render saved reports");
  std::optional<std::string> report_eval, report_stats;
  report->add_option("--eval", report_eval, "evaluation or sweep report");
  report->add_option("--stats", report_stats, "hypothesis test report");
  report->callback([&] {
    action = [&] {
      if (!report_eval && !report_stats) {
        throw ArgumentError("report needs --eval and/or --stats");
      }
      if (report_eval) {
        std::cout << EvalReport::FromJson(ReadJsonFile(*report_eval))
                         .RenderTable();
      }
      if (report_stats) {
        std::cout << stats::HypothesisReport::FromJson(
                         ReadJsonFile(*report_stats))
                         .RenderTable();
      }
      return 0;
    };
  });

  // run
  auto* run = app.add_subcommand("run", "run every stage from a config");
  std::optional<std::string> run_out;
  run->add_option("--out-dir", run_out,
                  "output directory, overriding output_dir in the config");
  run->callback([&] {
    action = [&] {
      if (g.config.empty()) throw ConfigError("run requires --config");
      PipelineConfig c = BaseConfig(g);
      if (run_out) c.output_dir = fs::absolute(*run_out).string();
      const RunSummary summary = RunPipeline(c);
      spdlog::info("done: {} stages run, {} skipped", summary.executed.size(),
                   summary.skipped.size());
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  auto logger = spdlog::stderr_color_st("crr");
  spdlog::set_default_logger(logger);
  const auto level = spdlog::level::from_str(g.log_level);
  if (level == spdlog::level::off && g.log_level != "off") {
    std::cerr << "crr: unknown log level '" << g.log_level << "'\n";
    return static_cast<int>(ExitCode::kConfig);
  }
  spdlog::set_level(level);

  try {
    return action();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::kData);
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return 1;
  }
}

}  // namespace
}  // namespace crr

int main(int argc, char** argv) { return crr::Main(argc, argv); }
