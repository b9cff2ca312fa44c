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

#include "crr/certainty.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "crr/errors.h"
#include "crr/text.h"

namespace crr {
namespace {

// Ascending-order sum: equal multisets give bit-identical totals whatever
// the candidate order.
double SortedSum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

}  // namespace

std::vector<double> EntailmentProvider::ScoreBatch(
    std::span<const TextPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(Score(p.premise, p.hypothesis));
  return out;
}

double LexicalEntailmentProxy(std::string_view premise,
                              std::string_view hypothesis) {
  return ContentCoverage(premise, hypothesis);
}

double ProbabilisticCertainty(std::span<const double> token_logprobs) {
  if (token_logprobs.empty()) {
    throw ArgumentError("probabilistic certainty of an empty candidate");
  }
  return SortedSum(std::vector<double>(token_logprobs.begin(),
                                       token_logprobs.end())) /
         static_cast<double>(token_logprobs.size());
}

double ProbabilisticCertainty(const Candidate& candidate) {
  return ProbabilisticCertainty(candidate.token_logprobs);
}

EntailmentMatrix BuildEntailmentMatrix(const CandidateSet& set,
                                       const EntailmentProvider& provider,
                                       std::size_t max_in_flight) {
  std::vector<std::string> texts;
  texts.reserve(set.candidates.size());
  for (const auto& c : set.candidates) texts.push_back(c.text);
  return BuildEntailmentMatrix(texts, provider, max_in_flight);
}

EntailmentMatrix BuildEntailmentMatrix(std::span<const std::string> texts,
                                       const EntailmentProvider& provider,
                                       std::size_t max_in_flight) {
  const std::size_t n = texts.size();
  if (n == 0) throw ArgumentError("entailment matrix of an empty set");
  EntailmentMatrix m;
  m.n = n;
  m.provider_tag = provider.tag();
  m.entries.assign(n * n, 0.0);

  std::vector<TextPair> pairs;
  pairs.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) pairs.push_back({texts[i], texts[j]});
  }
  const std::size_t batch = std::max<std::size_t>(provider.batch_size(), 1);
  const std::size_t n_batches = (pairs.size() + batch - 1) / batch;

  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::size_t error_batch = n_batches;
  std::exception_ptr error;

  auto worker = [&] {
    for (std::size_t b = next++; b < n_batches; b = next++) {
      const std::size_t lo = b * batch;
      const std::size_t hi = std::min(lo + batch, pairs.size());
      try {
        const auto scores = provider.ScoreBatch(
            std::span<const TextPair>(pairs).subspan(lo, hi - lo));
        if (scores.size() != hi - lo) {
          throw ContractViolation("provider returned " +
                                  std::to_string(scores.size()) +
                                  " scores for " + std::to_string(hi - lo) +
                                  " pairs");
        }
        for (std::size_t k = 0; k < scores.size(); ++k) {
          const double s = scores[k];
          if (!(s >= 0.0 && s <= 1.0)) {
            throw ContractViolation(
                "entailment score out of [0, 1] for pair (" +
                std::to_string((lo + k) / n) + ", " +
                std::to_string((lo + k) % n) + ")");
          }
          m.entries[lo + k] = s;
        }
      } catch (const RemoteError& e) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (b < error_batch) {
          error_batch = b;
          error = std::make_exception_ptr(
              PairScoringError(lo / n, lo % n, e.what()));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (b < error_batch) {
          error_batch = b;
          error = std::current_exception();
        }
      }
    }
  };

  const std::size_t threads =
      std::min(std::max<std::size_t>(max_in_flight, 1), n_batches);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  return m;
}

std::vector<double> AgreementScores(const EntailmentMatrix& matrix,
                                    bool include_self) {
  std::vector<double> as(matrix.n, 0.0);
  std::vector<double> row;
  for (std::size_t i = 0; i < matrix.n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < matrix.n; ++j) {
      if (j == i && !include_self) continue;
      row.push_back(matrix.at(i, j));
    }
    as[i] = SortedSum(std::move(row));
  }
  return as;
}

}  // namespace crr
