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

// Hypothesis tests relating certainty to hallucination: a one-sided Welch
// t-test (faithful certainty > hallucinated certainty) and the point-biserial
// correlation between a hallucination label and certainty, with the Student
// t special functions behind their p-values.

#ifndef CRR_STATS_H_
#define CRR_STATS_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crr/errors.h"

namespace crr::stats {

inline constexpr double kIncompleteBetaTolerance = 1e-12;
inline constexpr int kIncompleteBetaMaxIterations = 300;

// Welford accumulator.
class RunningMoments {
 public:
  void Add(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double sample_variance() const;      // divide by n - 1
  double population_variance() const;  // divide by n

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// I_x(a, b) by Lentz's continued fraction. Throws NumericalError if the
// fraction fails to converge to kIncompleteBetaTolerance within
// kIncompleteBetaMaxIterations.
double RegularizedIncompleteBeta(double x, double a, double b);

double StudentTCdf(double t, double df);
// 1 - StudentTCdf(t, df), without cancellation in the upper tail.
double StudentTSurvival(double t, double df);

struct TTestResult {
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value_one_sided = 0.5;
  std::size_t n_group1 = 0;
  std::size_t n_group0 = 0;
};

// H1: mean(a) > mean(b). Welch statistic with Welch-Satterthwaite degrees
// of freedom; p = P(T >= t).
TTestResult WelchTTestGreater(std::span<const double> sample_a,
                              std::span<const double> sample_b);

struct PbccResult {
  double r = 0.0;
  double p_value_two_sided = 1.0;
  std::size_t n = 0;
};

// r = (M1 - M0) / s_n * sqrt(n1 * n0 / n^2), s_n the population standard
// deviation of all values. Significance by t = r * sqrt((n - 2) / (1 - r^2))
// against Student t with n - 2 degrees of freedom.
PbccResult PointBiserial(std::span<const int> binary,
                         std::span<const double> values);

// One response candidate with its certainties and critic output.
struct ScoredObservation {
  double prob_certainty = 0.0;
  double sem_certainty = 0.0;
  double hallucination_prob = 0.0;
};

struct CertaintyTests {
  std::string certainty;  // "probabilistic" or "semantic"
  TTestResult h1;
  PbccResult h2;
};

struct HypothesisReport {
  double threshold = 0.5;
  double significance_level = 0.01;
  std::size_t n_faithful = 0;
  std::size_t n_hallucinated = 0;
  std::vector<CertaintyTests> rows;

  nlohmann::json ToJson() const;
  // Inverse of ToJson. Throws DataError on a malformed report.
  static HypothesisReport FromJson(const nlohmann::json& j);
  std::string RenderTable() const;
};

// Raised when one or more of the four tests cannot run; failed_tests names
// each, e.g. "hypothesis_1/semantic".
class SuiteError : public DataError {
 public:
  SuiteError(std::vector<std::string> failed, const std::string& detail);
  const std::vector<std::string>& failed_tests() const { return failed_; }

 private:
  std::vector<std::string> failed_;
};

// A candidate is hallucinated when hallucination_prob >= threshold.
// Hypothesis 1 compares faithful against hallucinated certainty;
// Hypothesis 2 correlates the hallucination label (1 = hallucinated) with
// certainty, so the expected sign is negative.
HypothesisReport RunHypothesisSuite(std::span<const ScoredObservation> data,
                                    double threshold = 0.5,
                                    double significance_level = 0.01);

}  // namespace crr::stats

#endif  // CRR_STATS_H_
