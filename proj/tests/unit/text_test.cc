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

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "crr/errors.h"

namespace crr {
namespace {

TEST(TokenizeTest, WordModeSplitsOnWhitespaceRuns) {
  EXPECT_EQ(Tokenize("  the cat\tsat\n\non ", TokenizerKind::kWord),
            (std::vector<std::string>{"the", "cat", "sat", "on"}));
  EXPECT_TRUE(Tokenize(" \t\n", TokenizerKind::kWord).empty());
}

TEST(TokenizeTest, CharModeYieldsCodePoints) {
  EXPECT_EQ(Tokenize("a b", TokenizerKind::kChar),
            (std::vector<std::string>{"a", " ", "b"}));
  EXPECT_EQ(Tokenize("\xC3\xA9t\xE2\x82\xAC", TokenizerKind::kChar),
            (std::vector<std::string>{"\xC3\xA9", "t", "\xE2\x82\xAC"}));
}

TEST(TokenizeTest, InvalidUtf8BytesBecomeSingleTokens) {
  EXPECT_EQ(SplitUtf8("\xFF" "a"), (std::vector<std::string>{"\xFF", "a"}));
  // Truncated multi-byte sequence at the end of the input.
  EXPECT_EQ(SplitUtf8("a\xE2\x82").size(), 3u);
}

TEST(TokenizeTest, DetokenizeInvertsTokenize) {
  for (const std::string text : {"the cat sat", "x", "\xC3\xA9t\xC3\xA9 !"}) {
    for (auto kind : {TokenizerKind::kWord, TokenizerKind::kChar}) {
      EXPECT_EQ(Detokenize(Tokenize(text, kind), kind), text);
    }
  }
}

TEST(TokenizeTest, ParsesKindNames) {
  EXPECT_EQ(ParseTokenizerKind("word"), TokenizerKind::kWord);
  EXPECT_EQ(ParseTokenizerKind("char"), TokenizerKind::kChar);
  EXPECT_EQ(TokenizerName(TokenizerKind::kChar), "char");
  EXPECT_THROW(ParseTokenizerKind("bpe"), ArgumentError);
}

TEST(ContentTokensTest, LowercasesStripsPunctuationAndStopwords) {
  EXPECT_EQ(ContentTokens("The Eiffel tower, in PARIS!"),
            (std::set<std::string>{"eiffel", "tower", "paris"}));
  EXPECT_TRUE(ContentTokens("it is what it is .").empty());
}

TEST(ContentTokensTest, SingleLettersAreContent) {
  EXPECT_FALSE(IsStopword("a"));
  EXPECT_TRUE(IsStopword("the"));
  EXPECT_EQ(ContentTokens("a b"), (std::set<std::string>{"a", "b"}));
}

TEST(ContentCoverageTest, IdenticalTextsAreFullyCovered) {
  EXPECT_EQ(ContentCoverage("paris is in france", "paris is in france"), 1.0);
}

TEST(ContentCoverageTest, DisjointTextsHaveZeroCoverage) {
  EXPECT_EQ(ContentCoverage("paris france", "berlin germany"), 0.0);
}

TEST(ContentCoverageTest, HalfOfHypothesisCovered) {
  EXPECT_EQ(ContentCoverage("a c", "a b"), 0.5);
}

TEST(ContentCoverageTest, HypothesisWithoutContentIsCovered) {
  EXPECT_EQ(ContentCoverage("anything", ""), 1.0);
  EXPECT_EQ(ContentCoverage("anything", "it is the"), 1.0);
}

TEST(ContentCoverageTest, RepeatedWordsCountOnce) {
  EXPECT_EQ(ContentCoverage("cat", "cat cat cat dog"), 0.5);
}

}  // namespace
}  // namespace crr
