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

// HTTP/JSON client for the NLI bridge scoring service.
//
//   POST /entail        {premise, hypothesis}
//                    -> {entail, neutral, contradict, model_version}
//   POST /entail_batch  {pairs: [{premise, hypothesis}, ...]}
//                    -> {results: [{entail, neutral, contradict}, ...],
//                        model_version}
//   POST /faithful      {knowledge, response}
//                    -> {hallucination_prob, model_version}
//   GET  /health     -> {status, models: [{name, version}, ...]}
//
// The schemas live in schemas/nli_bridge.schema.json. Every response is
// validated here; a malformed body raises ContractViolation, a transport
// failure or non-200 status raises RemoteError after the configured retries.

#ifndef CRR_NLI_CLIENT_H_
#define CRR_NLI_CLIENT_H_

#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crr/certainty.h"

namespace crr {

struct NliClientOptions {
  std::string endpoint;  // e.g. "http://127.0.0.1:8741"
  int timeout_ms = 30000;
  int retries = 2;
  std::size_t max_batch = 64;
};

struct EntailProbabilities {
  double entail = 0.0;
  double neutral = 0.0;
  double contradict = 0.0;
};

struct ModelInfo {
  std::string name;
  std::string version;
};

struct HealthStatus {
  int http_status = 0;
  std::string status;
  std::vector<ModelInfo> models;
};

inline constexpr double kSimplexTolerance = 1e-6;

// Throws ContractViolation unless all three fields are in [0, 1] and sum to
// one within kSimplexTolerance.
EntailProbabilities ParseEntailProbabilities(const nlohmann::json& j);

class NliClient {
 public:
  explicit NliClient(NliClientOptions options);

  EntailProbabilities Entail(std::string_view premise,
                             std::string_view hypothesis) const;
  // Splits into requests of at most max_batch pairs; results in input order.
  std::vector<EntailProbabilities> EntailBatch(
      std::span<const TextPair> pairs) const;
  double HallucinationProbability(std::string_view knowledge,
                                  std::string_view response) const;
  // Does not throw on 503; reports the status code instead.
  HealthStatus Health() const;

  const NliClientOptions& options() const { return options_; }
  // Last model_version seen, empty before the first successful call.
  std::string model_version() const;

 private:
  nlohmann::json Post(const std::string& path,
                      const nlohmann::json& body) const;

  NliClientOptions options_;
  mutable std::mutex version_mu_;
  mutable std::string model_version_;
};

// Entailment provider backed by the remote service; keeps only the
// entailment-class probability.
class RemoteEntailmentProvider : public EntailmentProvider {
 public:
  explicit RemoteEntailmentProvider(NliClientOptions options)
      : client_(std::move(options)) {}

  std::string tag() const override { return "remote"; }
  double Score(std::string_view premise,
               std::string_view hypothesis) const override;
  std::vector<double> ScoreBatch(
      std::span<const TextPair> pairs) const override;
  std::size_t batch_size() const override {
    return client_.options().max_batch;
  }

 private:
  NliClient client_;
};

}  // namespace crr

#endif  // CRR_NLI_CLIENT_H_
