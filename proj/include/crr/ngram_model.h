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

// Add-alpha smoothed n-gram language model.
//
// A training document is framed as
//
//   <s>^(order-1) [knowledge <sep> (utterance <sep>)*] text </s>
//
// where the bracketed part is present only when the document carries a
// conditioning context. Inference uses the same framing, so the response
// prefix is always preceded by exactly the tokens a training window saw.
//
// P(w | h) = (count(h, w) + alpha) / (count(h) + alpha * |V|), with h the
// last order-1 tokens. Unseen histories give the uniform distribution.

#ifndef CRR_NGRAM_MODEL_H_
#define CRR_NGRAM_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "crr/language_model.h"
#include "crr/text.h"

namespace crr {

class Vocabulary {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr TokenId kSep = 3;
  static constexpr std::size_t kNumReserved = 4;

  static constexpr std::string_view kBosToken = "<s>";
  static constexpr std::string_view kEosToken = "</s>";
  static constexpr std::string_view kUnkToken = "<unk>";
  static constexpr std::string_view kSepToken = "<sep>";

  Vocabulary();

  // Reserved markers first, then the distinct non-reserved `words` in
  // lexicographic order.
  static Vocabulary Build(std::span<const std::string> words);

  // Exact token list (reserved markers must occupy ids 0..3). Throws
  // DataError on duplicates or a misplaced marker.
  static Vocabulary FromList(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<TokenId> Find(std::string_view token) const;
  // Unknown strings map to kUnk.
  TokenId Lookup(std::string_view token) const;

  static bool IsReserved(std::string_view token);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, TokenId, std::less<>> index_;
};

struct ConditioningContext {
  std::string knowledge;
  std::vector<std::string> history;

  bool empty() const { return knowledge.empty() && history.empty(); }
  bool operator==(const ConditioningContext&) const = default;
};

struct Document {
  ConditioningContext context;
  std::string text;
};

class NgramModel {
 public:
  using History = std::vector<TokenId>;
  struct Row {
    std::map<TokenId, std::uint64_t> next;
    std::uint64_t total = 0;
    bool operator==(const Row&) const = default;
  };
  using CountTable = std::map<History, Row>;

  static constexpr double kDefaultAlpha = 0.1;
  static constexpr int kFormatVersion = 1;

  // Validates every invariant; throws ArgumentError or DataError.
  NgramModel(int order, double alpha, TokenizerKind tokenizer,
             Vocabulary vocab, CountTable counts);

  int order() const { return order_; }
  double alpha() const { return alpha_; }
  TokenizerKind tokenizer() const { return tokenizer_; }
  const Vocabulary& vocab() const { return vocab_; }
  const CountTable& counts() const { return counts_; }

  std::vector<TokenId> Encode(std::string_view text) const;
  std::vector<std::string> Decode(std::span<const TokenId> ids) const;

  // <s>^(order-1) followed by the framed context, if any.
  std::vector<TokenId> Frame(const ConditioningContext& context) const;

  // Distribution after `framed` followed by `prefix`. Only the trailing
  // order-1 tokens of the concatenation are read.
  std::vector<double> Distribution(std::span<const TokenId> framed,
                                   std::span<const TokenId> prefix) const;

  std::vector<double> NextTokenDistribution(
      std::span<const TokenId> prefix,
      const ConditioningContext& context) const;

  // Natural-log probability of each token given everything before it.
  // Throws ArgumentError on an empty sequence.
  std::vector<double> SequenceLogProb(std::span<const TokenId> tokens,
                                      const ConditioningContext& context) const;

  nlohmann::json ToJson() const;
  static NgramModel FromJson(const nlohmann::json& j);
  void Save(const std::filesystem::path& path) const;
  static NgramModel Load(const std::filesystem::path& path);

  bool operator==(const NgramModel& other) const;

 private:
  int order_;
  double alpha_;
  TokenizerKind tokenizer_;
  Vocabulary vocab_;
  CountTable counts_;
};

// Accumulates n-gram counts keyed by token strings. Counters over disjoint
// shards merge by addition; Build() fixes the vocabulary.
class NgramCounter {
 public:
  NgramCounter(int order, TokenizerKind tokenizer);

  // Returns false (and counts nothing) for an empty document.
  bool Add(const Document& doc);
  void Merge(const NgramCounter& other);

  std::size_t documents() const { return documents_; }
  NgramModel Build(double alpha) const;

 private:
  int order_;
  TokenizerKind tokenizer_;
  std::size_t documents_ = 0;
  std::map<std::vector<std::string>, std::map<std::string, std::uint64_t>>
      counts_;
};

// Throws ArgumentError for order < 1 or alpha <= 0, TrainingError when no
// document is non-empty.
NgramModel Train(std::span<const Document> corpus, int order, double alpha,
                 TokenizerKind tokenizer = TokenizerKind::kWord);

// Binds a model to one conditioning context.
class ConditionedModel : public LanguageModel {
 public:
  ConditionedModel(const NgramModel& model, const ConditioningContext& context);

  std::size_t vocab_size() const override { return model_->vocab().size(); }
  TokenId eos() const override { return Vocabulary::kEos; }
  std::vector<double> NextTokenDistribution(
      std::span<const TokenId> prefix) const override;

  const NgramModel& model() const { return *model_; }

 private:
  const NgramModel* model_;
  std::vector<TokenId> framed_;
};

// Reads a training corpus: JSONL records with either "text" or
// {"knowledge", "history", "response"}; any other file is read as one plain
// text document per non-empty line.
std::vector<Document> LoadCorpus(const std::filesystem::path& path);

}  // namespace crr

#endif  // CRR_NGRAM_MODEL_H_
