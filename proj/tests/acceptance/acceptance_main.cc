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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Runtime limits are part of each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/rational.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "crr/certainty.h"
#include "crr/decoders.h"
#include "crr/harness.h"
#include "crr/pipeline.h"
#include "crr/ranking.h"
#include "crr/rng.h"
#include "crr/stats.h"
#include "support/oracles.h"
#include "support/synthetic.h"

namespace crr {
namespace {

namespace fs = std::filesystem;
using testing::HashLm;
using testing::TableLm;

struct Outcome {
  bool pass = true;
  std::string detail;

  void Fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

// 1. Certainty correctness.
Outcome CertaintyCorrectness() {
  Outcome out;
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> lp(-20.0, 0.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_int_distribution<int> dim(1, 10);
  double worst_p = 0.0;
  double worst_s = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> logs(len(gen));
    for (double& x : logs) x = lp(gen);
    worst_p = std::max(worst_p, std::abs(ProbabilisticCertainty(logs) -
                                         testing::MeanOfLogs(logs)));

    EntailmentMatrix m;
    m.n = dim(gen);
    m.entries.resize(m.n * m.n);
    for (double& x : m.entries) x = unit(gen);
    const auto as = AgreementScores(m);
    const auto ref = testing::RowSumsExcludingDiagonal(m.entries, m.n);
    for (std::size_t i = 0; i < m.n; ++i) {
      worst_s = std::max(worst_s, std::abs(as[i] - ref[i]));
    }
  }
  if (worst_p > 1e-12) out.Fail("mean-of-logs error " + std::to_string(worst_p));
  if (worst_s > 1e-12) out.Fail("agreement error " + std::to_string(worst_s));
  if (out.pass) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max err %.1e / %.1e", worst_p, worst_s);
    out.detail = buf;
  }
  return out;
}

// Entailment proxy values are ratios of small counts; recover them exactly.
boost::rational<long long> ExactRatio(double x) {
  for (long long d = 1; d <= 256; ++d) {
    const double n = std::round(x * static_cast<double>(d));
    if (std::abs(n / static_cast<double>(d) - x) < 1e-12) {
      return {static_cast<long long>(n), d};
    }
  }
  throw std::runtime_error("entry is not a small-denominator ratio");
}

std::vector<std::string> FixtureResponses() {
  std::ifstream in(fs::path(CRR_SOURCE_DIR) / "fixtures" / "corpus.jsonl");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    out.push_back(nlohmann::json::parse(line).at("response"));
  }
  return out;
}

// 2. CRR oracle equivalence.
Outcome CrrOracle() {
  Outcome out;
  const auto responses = FixtureResponses();
  if (responses.size() < 12) {
    out.Fail("fixture corpus too small");
    return out;
  }
  // Seven pool entries: overlapping topics, one duplicated text, and
  // repeated log-prob profiles so every tie-break is exercised.
  const std::vector<std::string> texts = {
      responses[0], responses[1], responses[2], responses[3],
      responses[4], responses[8], responses[0]};
  const std::vector<std::vector<double>> logprobs = {
      {-1.0, -2.0}, {-1.5}, {-1.5}, {-0.5, -2.5}, {-3.0}, {-1.5}, {-1.5}};
  const LexicalEntailmentProvider provider;

  std::size_t sets = 0;
  std::vector<std::size_t> pick;
  std::vector<bool> used(texts.size(), false);
  std::function<void()> visit = [&] {
    if (!pick.empty()) {
      ++sets;
      CandidateSet set;
      set.example_id = "oracle";
      for (std::size_t i = 0; i < pick.size(); ++i) {
        Candidate c;
        c.index = i;
        c.text = texts[pick[i]];
        c.token_logprobs = logprobs[pick[i]];
        set.candidates.push_back(c);
      }
      const std::size_t n = pick.size();
      std::vector<double> prob(n);
      for (std::size_t i = 0; i < n; ++i) {
        prob[i] = testing::MeanOfLogs(set.candidates[i].token_logprobs);
      }
      std::vector<boost::rational<long long>> as(n, 0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) {
            as[i] += ExactRatio(LexicalEntailmentProxy(
                set.candidates[i].text, set.candidates[j].text));
          }
        }
      }
      std::size_t best_p = 0;
      std::size_t best_s = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (prob[i] > prob[best_p]) best_p = i;
        if (as[i] > as[best_s] ||
            (as[i] == as[best_s] && prob[i] > prob[best_s])) {
          best_s = i;
        }
      }
      if (SelectResponse(set, Mitigation::kNone, nullptr).index != 0) {
        out.Fail("none did not return candidate 0");
      }
      if (SelectResponse(set, Mitigation::kPCrr, nullptr).index != best_p) {
        out.Fail("P-CRR mismatch on a set of size " + std::to_string(n));
      }
      if (SelectResponse(set, Mitigation::kSCrr, &provider).index != best_s) {
        out.Fail("S-CRR mismatch on a set of size " + std::to_string(n));
      }
    }
    if (pick.size() == 6) return;
    for (std::size_t k = 0; k < texts.size(); ++k) {
      if (used[k]) continue;
      used[k] = true;
      pick.push_back(k);
      visit();
      pick.pop_back();
      used[k] = false;
    }
  };
  visit();
  if (out.pass) out.detail = std::to_string(sets) + " ordered sets, N <= 6";
  return out;
}

std::vector<TokenId> TopKOracle(std::span<const double> p, int k) {
  auto ranked = testing::RankByProbability(p);
  ranked.resize(std::min<std::size_t>(k, ranked.size()));
  return ranked;
}

// 3. Decoder correctness.
Outcome DecoderCorrectness() {
  Outcome out;
  int beam_cases = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const TableLm lm = testing::RandomTreeLm(3, 0, 4, seed);
    for (int width : {81, 128}) {
      DecodeConfig cfg;
      cfg.method = DecodeMethod::kBeam;
      cfg.beam_size = width;
      cfg.max_new_tokens = 4;
      ++beam_cases;
      if (BeamSearch(lm, cfg).token_ids != testing::ExhaustiveBest(lm, 4)) {
        out.Fail("beam differs from exhaustive argmax, lm seed " +
                 std::to_string(seed));
      }
    }
  }

  // Support membership over 1,000 decodes per sampler.
  const HashLm lm(12, 11, 99);
  std::size_t steps = 0;
  for (DecodeMethod method : {DecodeMethod::kTopK, DecodeMethod::kNucleusTopK}) {
    DecodeConfig cfg;
    cfg.method = method;
    cfg.top_k = 4;
    cfg.top_p = 0.6;
    cfg.max_new_tokens = 12;
    for (std::uint64_t d = 0; d < 1000; ++d) {
      Rng rng(CandidateSeed(5, "support", d));
      const Candidate c = Decode(lm, cfg, rng);
      for (std::size_t s = 0; s < c.token_ids.size(); ++s) {
        const std::span<const TokenId> prefix(c.token_ids.data(), s);
        const auto p = lm.NextTokenDistribution(prefix);
        const auto support =
            method == DecodeMethod::kTopK
                ? TopKOracle(p, cfg.top_k)
                : testing::OracleNucleusTopK(p, cfg.top_p, cfg.top_k);
        ++steps;
        if (std::find(support.begin(), support.end(), c.token_ids[s]) ==
            support.end()) {
          out.Fail("sampled token outside the truncated support");
        }
        if (c.token_logprobs[s] != std::log(p[c.token_ids[s]])) {
          out.Fail("recorded log-prob is not the untruncated one");
        }
      }
    }
  }

  // Chi-square goodness of fit on 10,000 single-step draws.
  const std::vector<double> dist = {0.22, 0.18, 0.15, 0.12, 0.1,
                                    0.08, 0.06, 0.05, 0.03, 0.01};
  TableLm flat(dist.size(), 9, dist);
  double min_p = 1.0;
  struct GofCase {
    DecodeMethod method;
    int top_k;
    double top_p;
    double temperature;
  };
  for (const GofCase& g : {GofCase{DecodeMethod::kTopK, 4, 1.0, 1.0},
                           GofCase{DecodeMethod::kTopK, 10, 1.0, 1.0},
                           GofCase{DecodeMethod::kTopK, 5, 1.0, 0.7},
                           GofCase{DecodeMethod::kNucleusTopK, 6, 0.6, 1.0},
                           GofCase{DecodeMethod::kNucleusTopK, 3, 0.9, 1.0}}) {
    DecodeConfig cfg;
    cfg.method = g.method;
    cfg.top_k = g.top_k;
    cfg.top_p = g.top_p;
    cfg.temperature = g.temperature;
    cfg.max_new_tokens = 1;
    const auto support =
        g.method == DecodeMethod::kTopK
            ? TopKOracle(dist, g.top_k)
            : testing::OracleNucleusTopK(dist, g.top_p, g.top_k);
    std::vector<double> expected;
    double z = 0.0;
    for (TokenId id : support) {
      expected.push_back(std::pow(dist[id], 1.0 / g.temperature));
      z += expected.back();
    }
    for (double& e : expected) e /= z;
    std::map<TokenId, std::size_t> counts;
    Rng rng(2024 + g.top_k);
    for (int draw = 0; draw < 10000; ++draw) {
      ++counts[Decode(flat, cfg, rng).token_ids.front()];
    }
    std::vector<std::size_t> observed;
    std::size_t inside = 0;
    for (TokenId id : support) {
      observed.push_back(counts[id]);
      inside += counts[id];
    }
    if (inside != 10000) out.Fail("single-step draw outside support");
    if (support.size() > 1) {
      min_p = std::min(min_p, testing::ChiSquarePValue(observed, expected));
    }
  }
  if (min_p <= 0.01) out.Fail("chi-square p = " + std::to_string(min_p));
  if (out.pass) {
    char buf[128];
    std::snprintf(buf, sizeof(buf),
                  "%d beam cases, %zu sampled steps, min chi-square p %.3f",
                  beam_cases, steps, min_p);
    out.detail = buf;
  }
  return out;
}

// Two-step instance: path A (token 1 then EOS) has the higher log-prob but a
// high-entropy second step; path B (token 2 then EOS) is nearly certain.
TableLm FlipLm() {
  TableLm lm(3, 0, {1.0 / 3, 1.0 / 3, 1.0 / 3});
  lm.Set({}, {1e-6, 0.7, 0.3 - 1e-6});
  lm.Set({1}, {0.8, 0.1, 0.1});
  lm.Set({2}, {0.999, 0.0005, 0.0005});
  return lm;
}

double EntropyOracle(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) h -= x * std::log(x);
  return h;
}

// 4. Uncertainty-aware beam.
Outcome UncertaintyBeam() {
  Outcome out;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const HashLm lm(6, 5, seed);
    DecodeConfig cfg;
    cfg.beam_size = 5;
    cfg.max_new_tokens = 8;
    cfg.uncertainty_lambda = 0.0;
    Candidate plain = BeamSearch(lm, cfg);
    Candidate zero = UncertaintyAwareBeamSearch(lm, cfg);
    if (plain.token_ids != zero.token_ids ||
        plain.token_logprobs != zero.token_logprobs) {
      out.Fail("lambda = 0 differs from plain beam");
    }
  }

  const TableLm lm = FlipLm();
  const double a_a = std::log(0.7) + std::log(0.8);
  const double a_b = std::log(0.3 - 1e-6) + std::log(0.999);
  const double h_a = EntropyOracle({0.8, 0.1, 0.1});
  const double h_b = EntropyOracle({0.999, 0.0005, 0.0005});
  const double lambda_star = (a_a - a_b) / (h_a - h_b);

  DecodeConfig cfg;
  cfg.method = DecodeMethod::kUncertaintyBeam;
  cfg.beam_size = 9;
  cfg.max_new_tokens = 2;
  auto winner = [&](double lambda) {
    cfg.uncertainty_lambda = lambda;
    return UncertaintyAwareBeamSearch(lm, cfg).token_ids;
  };
  const std::vector<TokenId> path_a = {1, 0};
  const std::vector<TokenId> path_b = {2, 0};
  if (winner(0.0) != path_a) out.Fail("path A does not win at lambda 0");
  if (winner(2.0 * lambda_star) != path_b) {
    out.Fail("path B does not win at large lambda");
  }
  double lo = 0.0;
  double hi = 2.0 * lambda_star;
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    (winner(mid) == path_a ? lo : hi) = mid;
  }
  const double err = std::abs(0.5 * (lo + hi) - lambda_star);
  if (err > 1e-9) out.Fail("flip point off by " + std::to_string(err));
  if (out.pass) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "lambda* = %.12f, flip error %.1e",
                  lambda_star, err);
    out.detail = buf;
  }
  return out;
}

// 5. Statistics.
Outcome Statistics() {
  Outcome out;
  double cauchy_err = 0.0;
  for (double t = -50.0; t <= 50.0; t += 0.125) {
    const double ref = 0.5 + std::atan(t) / M_PI;
    cauchy_err = std::max(cauchy_err, std::abs(stats::StudentTCdf(t, 1.0) - ref));
  }
  if (cauchy_err > 1e-10) {
    out.Fail("df = 1 error " + std::to_string(cauchy_err));
  }

  double normal_err = 0.0;
  for (double df : {1e3, 1e4, 1e5, 1e6}) {
    for (double t = -6.0; t <= 6.0; t += 0.05) {
      const double ref = 0.5 * std::erfc(-t / std::sqrt(2.0));
      normal_err =
          std::max(normal_err, std::abs(stats::StudentTCdf(t, df) - ref));
    }
  }
  if (normal_err > 1e-3) {
    out.Fail("normal-limit error " + std::to_string(normal_err));
  }

  std::mt19937_64 gen(77);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> size(4, 200);
  double pbcc_err = 0.0;
  for (int d = 0; d < 500; ++d) {
    const int n = size(gen);
    std::vector<int> binary(n);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      binary[i] = i < 2 ? i : static_cast<int>(gen() & 1);
      x[i] = binary[i];
      y[i] = normal(gen) + 0.7 * binary[i] * (d % 3);
    }
    pbcc_err = std::max(pbcc_err, std::abs(stats::PointBiserial(binary, y).r -
                                           testing::Pearson(x, y)));
  }
  if (pbcc_err > 1e-9) out.Fail("PBCC error " + std::to_string(pbcc_err));

  double t_err = 0.0;
  double p_err = 0.0;
  std::uniform_int_distribution<int> group(2, 60);
  std::uniform_real_distribution<double> shift(-1.5, 1.5);
  std::uniform_real_distribution<double> scale(0.2, 4.0);
  for (int f = 0; f < 100; ++f) {
    std::vector<double> a(group(gen)), b(group(gen));
    const double sa = scale(gen), sb = scale(gen), mu = shift(gen);
    for (double& v : a) v = mu + sa * normal(gen);
    for (double& v : b) v = sb * normal(gen);
    const auto got = stats::WelchTTestGreater(a, b);
    const auto ref = testing::HighPrecisionWelch(a, b);
    t_err = std::max(t_err, std::abs(got.t_statistic - ref.t));
    p_err = std::max(p_err, std::abs(got.p_value_one_sided - ref.p_greater));
  }
  if (t_err > 1e-9) out.Fail("Welch t error " + std::to_string(t_err));
  if (p_err > 1e-8) out.Fail("Welch p error " + std::to_string(p_err));
  if (out.pass) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "cauchy %.1e, normal %.1e, pbcc %.1e, welch t %.1e p %.1e",
                  cauchy_err, normal_err, pbcc_err, t_err, p_err);
    out.detail = buf;
  }
  return out;
}

// 6. End-to-end trend on synthetic pools.
Outcome SyntheticTrend() {
  Outcome out;
  const testing::SyntheticData data = testing::MakeSyntheticPools({});
  const LexicalEntailmentProvider provider;
  const RuleBasedCritic critic;

  std::vector<ScoredSet> scored;
  for (const auto& pool : data.pools) {
    scored.push_back(ScoreCandidateSet(pool, &provider, &critic));
  }
  const auto report =
      stats::RunHypothesisSuite(ObservationsFromScored(scored), 0.5, 0.01);
  for (const auto& row : report.rows) {
    if (!(row.h1.p_value_one_sided < 0.01)) {
      out.Fail("hypothesis 1 not significant for " + row.certainty);
    }
    if (!(row.h2.r < 0.0)) out.Fail("hypothesis 2 r >= 0 for " + row.certainty);
  }

  SweepOptions options;
  options.n_list = {5, 10, 20};
  const EvalReport eval = AblationSweep(data.examples,
                                        testing::PoolSource(data), &provider,
                                        critic, options);
  auto pct = [&](Mitigation m, std::size_t n) {
    const EvalRow* row =
        eval.Find({DecodeMethod::kNucleusTopK, m, n});
    return row ? row->faithful_percent : -1.0;
  };
  std::string trend;
  for (std::size_t n : options.n_list) {
    const double none = pct(Mitigation::kNone, n);
    const double p = pct(Mitigation::kPCrr, n);
    const double s = pct(Mitigation::kSCrr, n);
    if (!(p > none)) out.Fail("P-CRR does not beat none at n=" + std::to_string(n));
    if (!(s > none)) out.Fail("S-CRR does not beat none at n=" + std::to_string(n));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%sn=%zu %.1f/%.1f/%.1f",
                  trend.empty() ? "" : ", ", n, none, p, s);
    trend += buf;
  }
  if (!(pct(Mitigation::kSCrr, 5) <= pct(Mitigation::kSCrr, 10) &&
        pct(Mitigation::kSCrr, 10) <= pct(Mitigation::kSCrr, 20))) {
    out.Fail("S-CRR faithful% decreases with n");
  }
  if (out.pass) out.detail = "none/pcrr/scrr % " + trend;
  return out;
}

std::map<std::string, std::string> ReadTree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), root).string()] =
        std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

// 7. Reproducibility of `crr run`.
Outcome Reproducibility() {
  Outcome out;
  const fs::path base = fs::temp_directory_path() / "crr_acceptance_repro";
  fs::remove_all(base);
  const fs::path config = fs::path(CRR_SOURCE_DIR) / "fixtures" / "minimal.json";
  std::vector<std::map<std::string, std::string>> trees;
  for (const char* name : {"a", "b"}) {
    const fs::path dir = base / name;
    const std::string cmd = std::string("\"") + CRR_BINARY +
                            "\" --log-level warn --config \"" +
                            config.string() + "\" run --out-dir \"" +
                            dir.string() + "\"";
    if (std::system(cmd.c_str()) != 0) {
      out.Fail("crr run exited nonzero");
      return out;
    }
    trees.push_back(ReadTree(dir));
  }
  if (trees[0].empty()) out.Fail("no artifacts written");
  if (trees[0] != trees[1]) out.Fail("artifacts differ between runs");
  if (out.pass) {
    out.detail = std::to_string(trees[0].size()) + " files identical";
  }
  fs::remove_all(base);
  return out;
}

struct Criterion {
  const char* name;
  double limit_seconds;
  Outcome (*run)();
};

}  // namespace
}  // namespace crr

int main() {
  using crr::Criterion;
  spdlog::set_level(spdlog::level::warn);
  const Criterion criteria[] = {
      {"certainty-correctness", 5.0, crr::CertaintyCorrectness},
      {"crr-oracle-equivalence", 10.0, crr::CrrOracle},
      {"decoder-correctness", 60.0, crr::DecoderCorrectness},
      {"uncertainty-aware-beam", 0.0, crr::UncertaintyBeam},
      {"statistics", 0.0, crr::Statistics},
      {"synthetic-end-to-end-trend", 120.0, crr::SyntheticTrend},
      {"reproducibility", 0.0, crr::Reproducibility},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    crr::Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.Fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (c.limit_seconds > 0.0 && secs >= c.limit_seconds) {
      o.Fail("took " + std::to_string(secs) + " s, limit " +
             std::to_string(c.limit_seconds) + " s");
    }
    std::printf("%s  %-28s %7.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.name,
                secs, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  std::printf("%d of %zu criteria passed\n",
              static_cast<int>(std::size(criteria)) - failures,
              std::size(criteria));
  return failures == 0 ? 0 : 1;
}
