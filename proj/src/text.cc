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

#include "crr/text.h"

#include <algorithm>
#include <array>
#include <cctype>

#include "crr/errors.h"

namespace crr {
namespace {

// English function words. Must stay sorted. Single letters are content.
constexpr std::array<std::string_view, 98> kStopwords = {
    "about", "after", "again", "all",   "also",  "am",    "an",    "and",
    "any",   "are",   "as",    "at",    "be",    "been",  "being", "but",
    "by",    "can",   "could", "did",   "do",    "does",  "doing", "for",
    "from",  "had",   "has",   "have",  "having", "he",   "her",   "here",
    "hers",  "him",   "his",   "how",   "if",    "in",    "into",  "is",
    "it",    "its",   "just",  "me",    "more",  "my",    "no",    "nor",
    "not",   "of",    "off",   "on",    "once",  "only",  "or",    "our",
    "ours",  "out",   "over",  "own",   "same",  "she",   "should", "so",
    "some",  "such",  "than",  "that",  "the",   "their", "theirs", "them",
    "then",  "there", "these", "they",  "this",  "those", "to",    "too",
    "under", "until", "up",    "very",  "was",   "we",    "were",  "what",
    "when",  "where", "which", "while", "who",   "why",   "with",  "would",
    "you",   "your",
};
static_assert(std::is_sorted(kStopwords.begin(), kStopwords.end()));

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::size_t Utf8Length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0) return 2;
  if ((lead & 0xF0) == 0xE0) return 3;
  if ((lead & 0xF8) == 0xF0) return 4;
  return 1;
}

}  // namespace

std::string_view TokenizerName(TokenizerKind kind) {
  return kind == TokenizerKind::kWord ? "word" : "char";
}

TokenizerKind ParseTokenizerKind(std::string_view name) {
  if (name == "word") return TokenizerKind::kWord;
  if (name == "char") return TokenizerKind::kChar;
  throw ArgumentError("unknown tokenizer '" + std::string(name) +
                      "' (expected word|char)");
}

std::vector<std::string> SplitUtf8(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = Utf8Length(static_cast<unsigned char>(text[i]));
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::vector<std::string> Tokenize(std::string_view text, TokenizerKind kind) {
  if (kind == TokenizerKind::kChar) return SplitUtf8(text);
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && IsSpace(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !IsSpace(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

std::string Detokenize(std::span<const std::string> tokens,
                       TokenizerKind kind) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (kind == TokenizerKind::kWord && i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

bool IsStopword(std::string_view lowercase_word) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(),
                            lowercase_word);
}

std::set<std::string> ContentTokens(std::string_view text) {
  std::set<std::string> out;
  for (const std::string& raw : Tokenize(text, TokenizerKind::kWord)) {
    std::string word;
    word.reserve(raw.size());
    for (char c : raw) {
      auto u = static_cast<unsigned char>(c);
      if (u < 0x80 && std::ispunct(u)) continue;
      word.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
    }
    if (!word.empty() && !IsStopword(word)) out.insert(std::move(word));
  }
  return out;
}

double ContentCoverage(std::string_view premise, std::string_view hypothesis) {
  const std::set<std::string> hyp = ContentTokens(hypothesis);
  if (hyp.empty()) return 1.0;
  const std::set<std::string> prem = ContentTokens(premise);
  std::size_t covered = 0;
  for (const auto& w : hyp) covered += prem.count(w);
  return static_cast<double>(covered) / static_cast<double>(hyp.size());
}

}  // namespace crr
