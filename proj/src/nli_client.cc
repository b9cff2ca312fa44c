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

#include "crr/nli_client.h"

#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "crr/errors.h"

namespace crr {

using json = nlohmann::json;

namespace {

double Probability(const json& j, const char* field) {
  if (!j.is_object() || !j.contains(field) || !j.at(field).is_number()) {
    throw ContractViolation(std::string("response lacks numeric field '") +
                            field + "'");
  }
  const double p = j.at(field).get<double>();
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ContractViolation(std::string("field '") + field +
                            "' outside [0, 1]");
  }
  return p;
}

httplib::Client MakeClient(const NliClientOptions& o) {
  httplib::Client cli(o.endpoint);
  const auto timeout = std::chrono::milliseconds(o.timeout_ms);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  return cli;
}

}  // namespace

EntailProbabilities ParseEntailProbabilities(const json& j) {
  EntailProbabilities p;
  p.entail = Probability(j, "entail");
  p.neutral = Probability(j, "neutral");
  p.contradict = Probability(j, "contradict");
  if (std::fabs(p.entail + p.neutral + p.contradict - 1.0) >
      kSimplexTolerance) {
    throw ContractViolation("entailment class probabilities do not sum to 1");
  }
  return p;
}

NliClient::NliClient(NliClientOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) {
    throw ConfigError("remote scorer endpoint is empty");
  }
  if (options_.max_batch == 0) options_.max_batch = 1;
  if (options_.retries < 0) options_.retries = 0;
}

std::string NliClient::model_version() const {
  std::lock_guard<std::mutex> lock(version_mu_);
  return model_version_;
}

json NliClient::Post(const std::string& path, const json& body) const {
  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
    }
    auto cli = MakeClient(options_);
    auto res = cli.Post(path, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      // Client-side errors will not improve on retry.
      if (res->status >= 400 && res->status < 500) break;
    } else {
      json parsed = json::parse(res->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.is_object()) {
        throw ContractViolation(path + " returned a non-JSON body");
      }
      if (parsed.contains("model_version") &&
          parsed["model_version"].is_string()) {
        std::lock_guard<std::mutex> lock(version_mu_);
        model_version_ = parsed["model_version"].get<std::string>();
      }
      return parsed;
    }
    spdlog::debug("{} {} attempt {} failed: {}", options_.endpoint, path,
                  attempt + 1, last_error);
  }
  throw RemoteError(options_.endpoint + path + ": " + last_error);
}

EntailProbabilities NliClient::Entail(std::string_view premise,
                                      std::string_view hypothesis) const {
  return ParseEntailProbabilities(
      Post("/entail", {{"premise", premise}, {"hypothesis", hypothesis}}));
}

std::vector<EntailProbabilities> NliClient::EntailBatch(
    std::span<const TextPair> pairs) const {
  std::vector<EntailProbabilities> out;
  out.reserve(pairs.size());
  for (std::size_t lo = 0; lo < pairs.size(); lo += options_.max_batch) {
    const std::size_t hi = std::min(lo + options_.max_batch, pairs.size());
    json req = {{"pairs", json::array()}};
    for (std::size_t i = lo; i < hi; ++i) {
      req["pairs"].push_back({{"premise", pairs[i].premise},
                              {"hypothesis", pairs[i].hypothesis}});
    }
    const json res = Post("/entail_batch", req);
    if (!res.contains("results") || !res["results"].is_array() ||
        res["results"].size() != hi - lo) {
      throw ContractViolation("/entail_batch returned " +
                              std::string(res.contains("results")
                                              ? std::to_string(
                                                    res["results"].size())
                                              : "no") +
                              " results for " + std::to_string(hi - lo) +
                              " pairs");
    }
    for (const auto& item : res["results"]) {
      out.push_back(ParseEntailProbabilities(item));
    }
  }
  return out;
}

double NliClient::HallucinationProbability(std::string_view knowledge,
                                           std::string_view response) const {
  const json res =
      Post("/faithful", {{"knowledge", knowledge}, {"response", response}});
  return Probability(res, "hallucination_prob");
}

HealthStatus NliClient::Health() const {
  auto cli = MakeClient(options_);
  auto res = cli.Get("/health");
  if (!res) {
    throw RemoteError(options_.endpoint + "/health: transport error: " +
                      httplib::to_string(res.error()));
  }
  HealthStatus h;
  h.http_status = res->status;
  const json body = json::parse(res->body, nullptr, false);
  if (body.is_object()) {
    h.status = body.value("status", "");
    if (body.contains("models") && body["models"].is_array()) {
      for (const auto& m : body["models"]) {
        h.models.push_back(
            {m.value("name", ""), m.value("version", "")});
      }
    }
  }
  return h;
}

double RemoteEntailmentProvider::Score(std::string_view premise,
                                       std::string_view hypothesis) const {
  return client_.Entail(premise, hypothesis).entail;
}

std::vector<double> RemoteEntailmentProvider::ScoreBatch(
    std::span<const TextPair> pairs) const {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : client_.EntailBatch(pairs)) out.push_back(p.entail);
  return out;
}

}  // namespace crr
