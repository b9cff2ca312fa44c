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

#include "crr/ngram_model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "crr/errors.h"

namespace crr {

using json = nlohmann::json;

namespace {

constexpr std::string_view kFormatName = "crr-ngram";

void CheckOrderAlpha(int order, double alpha) {
  if (order < 1) {
    throw ArgumentError("n-gram order must be >= 1, got " +
                        std::to_string(order));
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ArgumentError("smoothing alpha must be a finite value > 0");
  }
}

// Token strings of a framed document, without the trailing </s>.
std::vector<std::string> FrameStrings(const ConditioningContext& context,
                                      std::string_view text, int order,
                                      TokenizerKind tokenizer) {
  std::vector<std::string> out(order - 1,
                               std::string(Vocabulary::kBosToken));
  auto append = [&](std::string_view s) {
    for (auto& t : Tokenize(s, tokenizer)) out.push_back(std::move(t));
  };
  if (!context.empty()) {
    append(context.knowledge);
    out.emplace_back(Vocabulary::kSepToken);
    for (const auto& utterance : context.history) {
      append(utterance);
      out.emplace_back(Vocabulary::kSepToken);
    }
  }
  append(text);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (std::string_view t : {kBosToken, kEosToken, kUnkToken, kSepToken}) {
    index_.emplace(std::string(t), static_cast<TokenId>(tokens_.size()));
    tokens_.emplace_back(t);
  }
}

bool Vocabulary::IsReserved(std::string_view token) {
  return token == kBosToken || token == kEosToken || token == kUnkToken ||
         token == kSepToken;
}

Vocabulary Vocabulary::Build(std::span<const std::string> words) {
  std::set<std::string> distinct;
  for (const auto& w : words) {
    if (!IsReserved(w)) distinct.insert(w);
  }
  Vocabulary v;
  for (const auto& w : distinct) {
    v.index_.emplace(w, static_cast<TokenId>(v.tokens_.size()));
    v.tokens_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::FromList(std::vector<std::string> tokens) {
  Vocabulary v;
  if (tokens.size() < kNumReserved) {
    throw DataError("vocabulary is missing reserved markers");
  }
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (tokens[i] != v.tokens_[i]) {
      throw DataError("vocabulary entry " + std::to_string(i) +
                      " must be reserved marker " + v.tokens_[i]);
    }
  }
  for (std::size_t i = kNumReserved; i < tokens.size(); ++i) {
    if (!v.index_.emplace(tokens[i], static_cast<TokenId>(i)).second) {
      throw DataError("duplicate vocabulary token '" + tokens[i] + "'");
    }
    v.tokens_.push_back(std::move(tokens[i]));
  }
  return v;
}

std::optional<TokenId> Vocabulary::Find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::Lookup(std::string_view token) const {
  return Find(token).value_or(kUnk);
}

// ---------------------------------------------------------------------------
// NgramModel

NgramModel::NgramModel(int order, double alpha, TokenizerKind tokenizer,
                       Vocabulary vocab, CountTable counts)
    : order_(order),
      alpha_(alpha),
      tokenizer_(tokenizer),
      vocab_(std::move(vocab)),
      counts_(std::move(counts)) {
  CheckOrderAlpha(order_, alpha_);
  const std::size_t v = vocab_.size();
  for (const auto& [history, row] : counts_) {
    if (history.size() != static_cast<std::size_t>(order_ - 1)) {
      throw DataError("count history length differs from order - 1");
    }
    for (TokenId id : history) {
      if (id >= v) throw DataError("count history token id out of range");
    }
    std::uint64_t total = 0;
    for (const auto& [id, c] : row.next) {
      if (id >= v) throw DataError("count token id out of range");
      if (c < 1) throw DataError("stored n-gram counts must be >= 1");
      total += c;
    }
    if (total != row.total) throw DataError("row total mismatch");
  }
}

std::vector<TokenId> NgramModel::Encode(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const auto& t : Tokenize(text, tokenizer_)) {
    ids.push_back(vocab_.Lookup(t));
  }
  return ids;
}

std::vector<std::string> NgramModel::Decode(
    std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab_.token(id));
  return out;
}

std::vector<TokenId> NgramModel::Frame(
    const ConditioningContext& context) const {
  std::vector<TokenId> out;
  for (const auto& t :
       FrameStrings(context, std::string_view(), order_, tokenizer_)) {
    out.push_back(vocab_.Lookup(t));
  }
  return out;
}

std::vector<double> NgramModel::Distribution(
    std::span<const TokenId> framed, std::span<const TokenId> prefix) const {
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  History history(width, Vocabulary::kBos);
  // Fill right to left from prefix, then framed; missing slots stay <s>.
  std::size_t slot = width;
  for (std::size_t i = prefix.size(); i > 0 && slot > 0; --i) {
    history[--slot] = prefix[i - 1];
  }
  for (std::size_t i = framed.size(); i > 0 && slot > 0; --i) {
    history[--slot] = framed[i - 1];
  }

  const std::size_t v = vocab_.size();
  const double alpha = alpha_;
  auto it = counts_.find(history);
  const double total =
      it == counts_.end() ? 0.0 : static_cast<double>(it->second.total);
  const double denom = total + alpha * static_cast<double>(v);
  std::vector<double> probs(v, alpha / denom);
  if (it != counts_.end()) {
    for (const auto& [id, c] : it->second.next) {
      probs[id] = (static_cast<double>(c) + alpha) / denom;
    }
  }
  return probs;
}

std::vector<double> NgramModel::NextTokenDistribution(
    std::span<const TokenId> prefix, const ConditioningContext& context) const {
  const auto framed = Frame(context);
  return Distribution(framed, prefix);
}

std::vector<double> NgramModel::SequenceLogProb(
    std::span<const TokenId> tokens, const ConditioningContext& context) const {
  if (tokens.empty()) {
    throw ArgumentError("sequence_logprob requires a non-empty sequence");
  }
  const auto framed = Frame(context);
  std::vector<double> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto probs = Distribution(framed, tokens.first(i));
    out.push_back(std::log(probs.at(tokens[i])));
  }
  return out;
}

json NgramModel::ToJson() const {
  json counts = json::array();
  for (const auto& [history, row] : counts_) {
    json next = json::array();
    for (const auto& [id, c] : row.next) next.push_back({id, c});
    counts.push_back({{"context", history}, {"next", std::move(next)}});
  }
  return {
      {"format", kFormatName},
      {"version", kFormatVersion},
      {"order", order_},
      {"alpha", alpha_},
      {"tokenizer", TokenizerName(tokenizer_)},
      {"vocab", vocab_.tokens()},
      {"counts", std::move(counts)},
  };
}

NgramModel NgramModel::FromJson(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kFormatName) {
      throw DataError("not a crr-ngram model file");
    }
    if (j.at("version").get<int>() != kFormatVersion) {
      throw DataError("unsupported model version " +
                      j.at("version").dump());
    }
    CountTable table;
    for (const auto& entry : j.at("counts")) {
      Row row;
      for (const auto& pair : entry.at("next")) {
        const auto c = pair.at(1).get<std::uint64_t>();
        row.next.emplace(pair.at(0).get<TokenId>(), c);
        row.total += c;
      }
      table.emplace(entry.at("context").get<History>(), std::move(row));
    }
    return NgramModel(
        j.at("order").get<int>(), j.at("alpha").get<double>(),
        ParseTokenizerKind(j.at("tokenizer").get<std::string>()),
        Vocabulary::FromList(j.at("vocab").get<std::vector<std::string>>()),
        std::move(table));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

void NgramModel::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model to " + path.string());
  out << ToJson().dump() << '\n';
}

NgramModel NgramModel::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("model " + path.string() + ": " + e.what());
  }
  return FromJson(j);
}

bool NgramModel::operator==(const NgramModel& other) const {
  return order_ == other.order_ && alpha_ == other.alpha_ &&
         tokenizer_ == other.tokenizer_ &&
         vocab_.tokens() == other.vocab_.tokens() && counts_ == other.counts_;
}

// ---------------------------------------------------------------------------
// Training

NgramCounter::NgramCounter(int order, TokenizerKind tokenizer)
    : order_(order), tokenizer_(tokenizer) {
  CheckOrderAlpha(order, 1.0);
}

bool NgramCounter::Add(const Document& doc) {
  if (doc.context.empty() && Tokenize(doc.text, tokenizer_).empty()) {
    return false;
  }
  auto framed = FrameStrings(doc.context, doc.text, order_, tokenizer_);
  framed.emplace_back(Vocabulary::kEosToken);
  const std::size_t width = static_cast<std::size_t>(order_ - 1);
  for (std::size_t i = width; i < framed.size(); ++i) {
    std::vector<std::string> history(framed.begin() + (i - width),
                                     framed.begin() + i);
    ++counts_[std::move(history)][framed[i]];
  }
  ++documents_;
  return true;
}

void NgramCounter::Merge(const NgramCounter& other) {
  if (other.order_ != order_ || other.tokenizer_ != tokenizer_) {
    throw ArgumentError("cannot merge counters of different configuration");
  }
  for (const auto& [history, row] : other.counts_) {
    auto& dst = counts_[history];
    for (const auto& [w, c] : row) dst[w] += c;
  }
  documents_ += other.documents_;
}

NgramModel NgramCounter::Build(double alpha) const {
  CheckOrderAlpha(order_, alpha);
  if (documents_ == 0) {
    throw TrainingError("training corpus has no non-empty document");
  }
  std::vector<std::string> words;
  for (const auto& [history, row] : counts_) {
    words.insert(words.end(), history.begin(), history.end());
    for (const auto& [w, c] : row) words.push_back(w);
  }
  Vocabulary vocab = Vocabulary::Build(words);
  NgramModel::CountTable table;
  for (const auto& [history, row] : counts_) {
    NgramModel::History ids;
    ids.reserve(history.size());
    for (const auto& h : history) ids.push_back(vocab.Lookup(h));
    auto& dst = table[ids];
    for (const auto& [w, c] : row) {
      dst.next[vocab.Lookup(w)] += c;
      dst.total += c;
    }
  }
  return NgramModel(order_, alpha, tokenizer_, std::move(vocab),
                    std::move(table));
}

NgramModel Train(std::span<const Document> corpus, int order, double alpha,
                 TokenizerKind tokenizer) {
  CheckOrderAlpha(order, alpha);
  NgramCounter counter(order, tokenizer);
  for (const auto& doc : corpus) counter.Add(doc);
  return counter.Build(alpha);
}

// ---------------------------------------------------------------------------

ConditionedModel::ConditionedModel(const NgramModel& model,
                                   const ConditioningContext& context)
    : model_(&model), framed_(model.Frame(context)) {}

std::vector<double> ConditionedModel::NextTokenDistribution(
    std::span<const TokenId> prefix) const {
  return model_->Distribution(framed_, prefix);
}

std::vector<Document> LoadCorpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  const bool jsonl = path.extension() == ".jsonl";
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!jsonl) {
      docs.push_back({{}, line});
      continue;
    }
    try {
      const json j = json::parse(line);
      Document doc;
      if (j.contains("text")) {
        doc.text = j.at("text").get<std::string>();
      } else {
        doc.context.knowledge = j.value("knowledge", "");
        if (j.contains("history")) {
          doc.context.history =
              j.at("history").get<std::vector<std::string>>();
        }
        doc.text = j.value("response", "");
      }
      docs.push_back(std::move(doc));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return docs;
}

}  // namespace crr
