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

// Tokenization shared by the language model, the lexical entailment proxy and
// the rule-based faithfulness critic.

#ifndef CRR_TEXT_H_
#define CRR_TEXT_H_

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crr {

enum class TokenizerKind { kWord, kChar };

std::string_view TokenizerName(TokenizerKind kind);
// Accepts "word" or "char"; throws ArgumentError otherwise.
TokenizerKind ParseTokenizerKind(std::string_view name);

// Word mode splits on ASCII whitespace. Char mode yields one token per UTF-8
// code point (invalid bytes become single-byte tokens).
std::vector<std::string> Tokenize(std::string_view text, TokenizerKind kind);
std::string Detokenize(std::span<const std::string> tokens, TokenizerKind kind);

std::vector<std::string> SplitUtf8(std::string_view text);

bool IsStopword(std::string_view lowercase_word);

// Distinct content words: lowercased, ASCII punctuation removed, stopwords
// dropped.
std::set<std::string> ContentTokens(std::string_view text);

// |content(hypothesis) & content(premise)| / |content(hypothesis)|, 1.0 when
// the hypothesis has no content words.
double ContentCoverage(std::string_view premise, std::string_view hypothesis);

}  // namespace crr

#endif  // CRR_TEXT_H_
