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

#include "crr/stats.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace crr::stats {
namespace {

constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b); converges fast for x < (a+1)/(a+b+2).
double BetaContinuedFraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kIncompleteBetaMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kIncompleteBetaTolerance) return h;
  }
  throw NumericalError("incomplete beta continued fraction did not converge");
}

// I_x(a, b) given both x and y = 1 - x, each computed without cancellation.
double IncompleteBeta(double x, double y, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) + b * std::log(y);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * BetaContinuedFraction(a, b, x) / a;
  }
  return 1.0 - front * BetaContinuedFraction(b, a, y) / b;
}

// P(T > |t|) for t != 0: 0.5 * I_{df/(df+t^2)}(df/2, 1/2).
double UpperTail(double t, double df) {
  const double t2 = t * t;
  const double denom = df + t2;
  return 0.5 * IncompleteBeta(df / denom, t2 / denom, 0.5 * df, 0.5);
}

void CheckDf(double df) {
  if (!(df > 0.0)) throw ArgumentError("degrees of freedom must be > 0");
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

void RunningMoments::Add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double RunningMoments::sample_variance() const {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double RunningMoments::population_variance() const {
  return n_ == 0 ? 0.0 : m2_ / static_cast<double>(n_);
}

double RegularizedIncompleteBeta(double x, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) {
    throw ArgumentError("incomplete beta parameters must be > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ArgumentError("incomplete beta argument must lie in [0, 1]");
  }
  return IncompleteBeta(x, 1.0 - x, a, b);
}

double StudentTCdf(double t, double df) {
  CheckDf(df);
  if (std::isnan(t)) throw ArgumentError("t statistic is NaN");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = UpperTail(t, df);
  return t > 0 ? 1.0 - tail : tail;
}

double StudentTSurvival(double t, double df) {
  CheckDf(df);
  if (std::isnan(t)) throw ArgumentError("t statistic is NaN");
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 0.0 : 1.0;
  const double tail = UpperTail(t, df);
  return t > 0 ? tail : 1.0 - tail;
}

TTestResult WelchTTestGreater(std::span<const double> sample_a,
                              std::span<const double> sample_b) {
  if (sample_a.size() < 2 || sample_b.size() < 2) {
    throw ArgumentError("t-test needs at least two values per group");
  }
  RunningMoments a;
  RunningMoments b;
  for (double x : sample_a) a.Add(x);
  for (double x : sample_b) b.Add(x);
  const double na = static_cast<double>(a.count());
  const double nb = static_cast<double>(b.count());
  const double qa = a.sample_variance() / na;
  const double qb = b.sample_variance() / nb;
  const double se2 = qa + qb;
  if (!(se2 > 0.0)) {
    throw ArgumentError("t-test variance is undefined: both groups constant");
  }
  TTestResult r;
  r.n_group1 = a.count();
  r.n_group0 = b.count();
  r.t_statistic = (a.mean() - b.mean()) / std::sqrt(se2);
  r.degrees_of_freedom =
      se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0));
  r.p_value_one_sided = StudentTSurvival(r.t_statistic, r.degrees_of_freedom);
  return r;
}

PbccResult PointBiserial(std::span<const int> binary,
                         std::span<const double> values) {
  if (binary.size() != values.size()) {
    throw ArgumentError("point-biserial inputs differ in length");
  }
  if (values.size() < 3) {
    throw ArgumentError("point-biserial correlation needs n >= 3");
  }
  RunningMoments all;
  RunningMoments ones;
  RunningMoments zeros;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (binary[i] != 0 && binary[i] != 1) {
      throw ArgumentError("dichotomous variable must be 0 or 1");
    }
    all.Add(values[i]);
    (binary[i] == 1 ? ones : zeros).Add(values[i]);
  }
  if (ones.count() == 0 || zeros.count() == 0) {
    throw ArgumentError("point-biserial correlation needs both classes");
  }
  const double sd = std::sqrt(all.population_variance());
  if (!(sd > 0.0)) {
    throw ArgumentError("point-biserial correlation of constant values");
  }
  const double n = static_cast<double>(all.count());
  PbccResult res;
  res.n = all.count();
  res.r = (ones.mean() - zeros.mean()) / sd *
          std::sqrt(static_cast<double>(ones.count()) *
                    static_cast<double>(zeros.count()) / (n * n));
  res.r = std::clamp(res.r, -1.0, 1.0);
  if (std::fabs(res.r) == 1.0) {
    res.p_value_two_sided = 0.0;
  } else {
    const double t = res.r * std::sqrt((n - 2.0) / (1.0 - res.r * res.r));
    res.p_value_two_sided =
        std::min(1.0, 2.0 * StudentTSurvival(std::fabs(t), n - 2.0));
  }
  return res;
}

SuiteError::SuiteError(std::vector<std::string> failed,
                       const std::string& detail)
    : DataError(detail), failed_(std::move(failed)) {}

HypothesisReport RunHypothesisSuite(std::span<const ScoredObservation> data,
                                    double threshold,
                                    double significance_level) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ArgumentError("hallucination threshold must lie in (0, 1)");
  }
  HypothesisReport report;
  report.threshold = threshold;
  report.significance_level = significance_level;

  std::vector<int> hallucinated;
  std::vector<double> certainty[2];
  std::vector<double> faithful_values[2];
  std::vector<double> hallucinated_values[2];
  hallucinated.reserve(data.size());
  for (const auto& obs : data) {
    const bool h = obs.hallucination_prob >= threshold;
    hallucinated.push_back(h ? 1 : 0);
    const double v[2] = {obs.prob_certainty, obs.sem_certainty};
    for (int k = 0; k < 2; ++k) {
      certainty[k].push_back(v[k]);
      (h ? hallucinated_values[k] : faithful_values[k]).push_back(v[k]);
    }
  }
  report.n_hallucinated = hallucinated_values[0].size();
  report.n_faithful = faithful_values[0].size();

  std::vector<std::string> failed;
  std::string detail;
  static constexpr const char* kNames[2] = {"probabilistic", "semantic"};
  for (int k = 0; k < 2; ++k) {
    CertaintyTests row;
    row.certainty = kNames[k];
    try {
      row.h1 = WelchTTestGreater(faithful_values[k], hallucinated_values[k]);
    } catch (const ArgumentError& e) {
      failed.push_back(std::string("hypothesis_1/") + kNames[k]);
      detail += failed.back() + ": " + e.what() + "; ";
    }
    try {
      row.h2 = PointBiserial(hallucinated, certainty[k]);
    } catch (const ArgumentError& e) {
      failed.push_back(std::string("hypothesis_2/") + kNames[k]);
      detail += failed.back() + ": " + e.what() + "; ";
    }
    report.rows.push_back(std::move(row));
  }
  if (!failed.empty()) {
    throw SuiteError(std::move(failed),
                     "hypothesis suite preconditions failed (" +
                         std::to_string(report.n_faithful) + " faithful, " +
                         std::to_string(report.n_hallucinated) +
                         " hallucinated): " + detail);
  }
  return report;
}

nlohmann::json HypothesisReport::ToJson() const {
  nlohmann::json h1 = nlohmann::json::object();
  nlohmann::json h2 = nlohmann::json::object();
  for (const auto& row : rows) {
    h1[row.certainty] = {
        {"t_statistic", row.h1.t_statistic},
        {"degrees_of_freedom", row.h1.degrees_of_freedom},
        {"p_value", row.h1.p_value_one_sided},
        {"n_faithful", row.h1.n_group1},
        {"n_hallucinated", row.h1.n_group0},
        {"significant", row.h1.p_value_one_sided < significance_level},
    };
    h2[row.certainty] = {
        {"r", row.h2.r},
        {"p_value", row.h2.p_value_two_sided},
        {"n", row.h2.n},
        {"significant", row.h2.p_value_two_sided < significance_level},
    };
  }
  return {
      {"threshold", threshold},
      {"significance_level", significance_level},
      {"n_faithful", n_faithful},
      {"n_hallucinated", n_hallucinated},
      {"hypothesis_1", std::move(h1)},
      {"hypothesis_2", std::move(h2)},
  };
}

HypothesisReport HypothesisReport::FromJson(const nlohmann::json& j) {
  try {
    HypothesisReport report;
    report.threshold = j.at("threshold").get<double>();
    report.significance_level = j.at("significance_level").get<double>();
    report.n_faithful = j.at("n_faithful").get<std::size_t>();
    report.n_hallucinated = j.at("n_hallucinated").get<std::size_t>();
    const auto& h1 = j.at("hypothesis_1");
    const auto& h2 = j.at("hypothesis_2");
    for (const auto& [name, t] : h1.items()) {
      CertaintyTests row;
      row.certainty = name;
      row.h1.t_statistic = t.at("t_statistic").get<double>();
      row.h1.degrees_of_freedom = t.at("degrees_of_freedom").get<double>();
      row.h1.p_value_one_sided = t.at("p_value").get<double>();
      row.h1.n_group1 = t.at("n_faithful").get<std::size_t>();
      row.h1.n_group0 = t.at("n_hallucinated").get<std::size_t>();
      const auto& c = h2.at(name);
      row.h2.r = c.at("r").get<double>();
      row.h2.p_value_two_sided = c.at("p_value").get<double>();
      row.h2.n = c.at("n").get<std::size_t>();
      report.rows.push_back(std::move(row));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed hypothesis report: ") + e.what());
  }
}

std::string HypothesisReport::RenderTable() const {
  std::ostringstream out;
  out << "Hypothesis 1: certainty(faithful) > certainty(hallucinated)\n";
  out << "  certainty        p value     signif.\n";
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "  %-15s  %-10s  %s\n",
                  row.certainty.c_str(),
                  FormatDouble(row.h1.p_value_one_sided).c_str(),
                  row.h1.p_value_one_sided < significance_level ? "yes" : "no");
    out << line;
  }
  out << "Hypothesis 2: point-biserial correlation with hallucination\n";
  out << "  certainty        r         p value     signif.\n";
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "  %-15s  %+.3f    %-10s  %s\n",
                  row.certainty.c_str(), row.h2.r,
                  FormatDouble(row.h2.p_value_two_sided).c_str(),
                  row.h2.p_value_two_sided < significance_level ? "yes"
                                                                : "no");
    out << line;
  }
  return out.str();
}

}  // namespace crr::stats
