// Copyright 2026 The chartrans Authors. All Rights Reserved.
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

#include <gtest/gtest.h>

#include <algorithm>

#include "chartrans/chartrans.hpp"

namespace chartrans {
namespace {

std::vector<std::string> S(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

TEST(Vocabulary, ReservesSpecialSymbolsFirst) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.symbol(kPad), "<pad>");
  EXPECT_EQ(v.symbol(kBos), "<s>");
  EXPECT_EQ(v.symbol(kEos), "</s>");
  EXPECT_EQ(v.symbol(kUnk), "<unk>");
}

TEST(Vocabulary, AddIsIdempotentAndIdsAreDense) {
  Vocabulary v;
  EXPECT_EQ(v.add("a"), 4);
  EXPECT_EQ(v.add("b"), 5);
  EXPECT_EQ(v.add("a"), 4);
  EXPECT_EQ(v.size(), 6u);
}

TEST(Vocabulary, FeaturesAndCharactersDoNotCollide) {
  Vocabulary v;
  const int c = v.add("V");
  const int f = v.add_feature("V");
  EXPECT_NE(c, f);
  EXPECT_EQ(v.lookup_feature("V", false), f);
  EXPECT_EQ(v.lookup("V", false), c);
}

TEST(Vocabulary, UnknownSymbolsThrowOrMapToUnk) {
  Vocabulary v;
  v.add("a");
  EXPECT_THROW(v.lookup("z", false), VocabularyError);
  EXPECT_EQ(v.lookup("z", true), kUnk);
  EXPECT_EQ(v.lookup_feature("PST", true), kUnk);
}

TEST(Vocabulary, SymbolListRoundTrip) {
  Vocabulary v;
  v.add("x");
  v.add_feature("SG");
  EXPECT_EQ(Vocabulary::from_symbols(v.symbols()), v);
  EXPECT_THROW(Vocabulary::from_symbols(S({"<pad>", "<s>"})), VocabularyError);
  EXPECT_THROW(Vocabulary::from_symbols(S({"<s>", "<pad>", "</s>", "<unk>"})), VocabularyError);
  EXPECT_THROW(Vocabulary::from_symbols(S({"<pad>", "<s>", "</s>", "<unk>", "a", "a"})),
               VocabularyError);
}

class SourceLayout : public ::testing::Test {
 protected:
  void SetUp() override {
    for (const char* c : {"w", "a", "l", "k"}) vocab.add(c);
    for (const char* f : {"V", "PST", "3"}) vocab.add_feature(f);
  }
  Vocabulary vocab;
  std::vector<std::string> chars = S({"w", "a", "l", "k"});
  std::vector<std::string> feats = S({"V", "PST", "3"});
};

TEST_F(SourceLayout, FeatureInvariantPutsFeaturesAtZero) {
  auto src = build_source(feats, chars, vocab, EncoderMode::kFeatureInvariant);
  ASSERT_EQ(src.length(), 7u);
  EXPECT_EQ(src.char_count(), 4u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(src.tokens[i].type, TokenType::kFeature);
    EXPECT_EQ(src.tokens[i].position, 0);
  }
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(src.tokens[3 + i].type, TokenType::kCharacter);
    EXPECT_EQ(src.tokens[3 + i].position, static_cast<int>(i + 1));
    EXPECT_EQ(src.tokens[3 + i].symbol_id, vocab.lookup(chars[i], false));
  }
  EXPECT_NO_THROW(validate_feature_invariant(src));
}

TEST_F(SourceLayout, CharacterPositionsIgnoreFeatureCount) {
  auto one = build_source(std::span(feats).first(1), chars, vocab);
  auto three = build_source(feats, chars, vocab);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(one.tokens[1 + i].position, three.tokens[3 + i].position);
  }
}

TEST_F(SourceLayout, VanillaNumbersTokensConsecutively) {
  auto src = build_source(feats, chars, vocab, EncoderMode::kVanilla);
  for (std::size_t i = 0; i < src.length(); ++i) {
    EXPECT_EQ(src.tokens[i].position, static_cast<int>(i));
  }
  EXPECT_THROW(validate_feature_invariant(src), InvariantError);
}

TEST_F(SourceLayout, AppendPlacementPutsFeaturesLast) {
  auto src = build_source(feats, chars, vocab, EncoderMode::kVanilla, false,
                          FeaturePlacement::kAppend);
  EXPECT_EQ(src.tokens[0].type, TokenType::kCharacter);
  EXPECT_EQ(src.tokens[6].type, TokenType::kFeature);
  EXPECT_EQ(src.tokens[6].position, 6);
  auto fi = build_source(feats, chars, vocab, EncoderMode::kFeatureInvariant, false,
                         FeaturePlacement::kAppend);
  EXPECT_NO_THROW(validate_feature_invariant(fi));
}

TEST_F(SourceLayout, PermutingFeaturesPermutesOnlyFeatureTokens) {
  auto a = build_source(feats, chars, vocab);
  auto perm = S({"3", "V", "PST"});
  auto b = build_source(perm, chars, vocab);
  // Same multiset of (symbol, type, position) triples.
  auto key = [](const SourceToken& t) {
    return std::tuple(t.symbol_id, static_cast<int>(t.type), t.position);
  };
  std::vector<std::tuple<int, int, int>> ka, kb;
  for (const auto& t : a.tokens) ka.push_back(key(t));
  for (const auto& t : b.tokens) kb.push_back(key(t));
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  EXPECT_EQ(ka, kb);
  EXPECT_NE(a.tokens, b.tokens);
}

TEST_F(SourceLayout, NoFeaturesAndUnknownSymbols) {
  auto src = build_source({}, chars, vocab);
  EXPECT_EQ(src.length(), 4u);
  EXPECT_EQ(src.tokens[0].position, 1);
  auto unknown = S({"q"});
  EXPECT_THROW(build_source({}, unknown, vocab), VocabularyError);
  EXPECT_EQ(build_source({}, unknown, vocab, EncoderMode::kFeatureInvariant, true)
                .tokens[0]
                .symbol_id,
            kUnk);
}

TEST(EncoderMode, NamesRoundTrip) {
  EXPECT_EQ(parse_encoder_mode(to_string(EncoderMode::kVanilla)), EncoderMode::kVanilla);
  EXPECT_EQ(parse_encoder_mode("feature_invariant"), EncoderMode::kFeatureInvariant);
  EXPECT_THROW(parse_encoder_mode("fancy"), std::invalid_argument);
}

}  // namespace
}  // namespace chartrans
