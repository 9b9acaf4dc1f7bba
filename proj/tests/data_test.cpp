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

#include <set>
#include <sstream>

#include "chartrans/chartrans.hpp"

namespace chartrans {
namespace {

std::vector<std::string> S(std::initializer_list<const char*> xs) {
  return {xs.begin(), xs.end()};
}

std::vector<Example> parse_infl(const std::string& text) {
  std::istringstream in(text);
  return parse_inflection_tsv(in, "mem.tsv");
}

TEST(Utf8, SplitsIntoScalarValues) {
  EXPECT_EQ(utf8_split("abc"), S({"a", "b", "c"}));
  EXPECT_EQ(utf8_split("n\xC3\xA4h"), S({"n", "\xC3\xA4", "h"}));        // two-byte
  EXPECT_EQ(utf8_split("\xE0\xA4\x95"), S({"\xE0\xA4\x95"}));             // three-byte
  EXPECT_EQ(utf8_split("\xF0\x9F\x98\x80x"), S({"\xF0\x9F\x98\x80", "x"}));  // four-byte
  EXPECT_TRUE(utf8_split("").empty());
}

TEST(Utf8, RejectsMalformedInput) {
  EXPECT_THROW(utf8_split("\xC3"), std::invalid_argument);          // truncated
  EXPECT_THROW(utf8_split("\x80"), std::invalid_argument);          // stray continuation
  EXPECT_THROW(utf8_split("\xC0\xAF"), std::invalid_argument);      // overlong
  EXPECT_THROW(utf8_split("\xED\xA0\x80"), std::invalid_argument);  // surrogate
}

TEST(InflectionTsv, ParsesLemmaTargetAndFeatures) {
  auto ex = parse_infl("walk\twalked\tV;PST\n\nsing\tsings\tV;PRS;3;SG\r\n");
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_EQ(ex[0].source_chars, S({"w", "a", "l", "k"}));
  EXPECT_EQ(ex[0].target_chars, S({"w", "a", "l", "k", "e", "d"}));
  EXPECT_EQ(ex[0].features, S({"V", "PST"}));
  EXPECT_EQ(ex[1].features, S({"V", "PRS", "3", "SG"}));
}

TEST(InflectionTsv, ReportsLineNumbersOnErrors) {
  try {
    parse_infl("walk\twalked\tV;PST\n\nbad line\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("mem.tsv:3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_infl("a\tb\tV;;PST\n"), ParseError);
  EXPECT_THROW(parse_infl("a\t\tV\n"), ParseError);
  EXPECT_THROW(parse_infl("a\xC3\tb\tV\n"), ParseError);
}

TEST(PairTsv, CharacterAndPhonemeTargets) {
  std::istringstream chars("vnd\tund\n");
  auto c = parse_pair_tsv(chars, "n.tsv");
  EXPECT_EQ(c[0].target_chars, S({"u", "n", "d"}));
  EXPECT_TRUE(c[0].features.empty());
  std::istringstream phon("knight\tn  aɪ t\n");
  auto p = parse_pair_tsv(phon, "g.tsv", TargetUnit::kPhonemes);
  EXPECT_EQ(p[0].target_chars, S({"n", "aɪ", "t"}));
  std::istringstream bad("a\tb\tc\n");
  EXPECT_THROW(parse_pair_tsv(bad, "x"), ParseError);
}

TEST(Tsv, WriteThenParseRoundTrips) {
  std::vector<Example> ex = {{S({"g", "o"}), S({"V", "PST"}), S({"w", "e", "n", "t"})}};
  std::ostringstream out;
  write_inflection_tsv(out, ex);
  EXPECT_EQ(out.str(), "go\twent\tV;PST\n");
  EXPECT_EQ(parse_infl(out.str()), ex);

  std::vector<Example> g2p = {{S({"a", "b"}), {}, S({"eɪ", "b"})}};
  std::ostringstream pout;
  write_pair_tsv(pout, g2p, TargetUnit::kPhonemes);
  EXPECT_EQ(pout.str(), "ab\teɪ b\n");
  std::istringstream pin(pout.str());
  EXPECT_EQ(parse_pair_tsv(pin, "p", TargetUnit::kPhonemes), g2p);
}

TEST(Vocab, BuiltInFirstOccurrenceOrder) {
  auto ex = parse_infl("ab\tba\tX;Y\nca\tac\tY\n");
  auto [src, tgt] = build_vocab(ex);
  EXPECT_EQ(src.symbols(), S({"<pad>", "<s>", "</s>", "<unk>", "[X]", "[Y]", "a", "b", "c"}));
  EXPECT_EQ(tgt.symbols(), S({"<pad>", "<s>", "</s>", "<unk>", "b", "a", "c"}));
}

class Batching : public ::testing::Test {
 protected:
  void SetUp() override {
    examples = parse_infl(
        "abc\tabcx\tA;B\n"
        "a\tb\tA\n"
        "ba\tab\tB\n"
        "cab\tc\tA;B\n"
        "bb\tbbb\tB\n");
    std::tie(src, tgt) = build_vocab(examples);
    encoded = encode_examples(examples, src, tgt, {});
  }
  std::vector<Example> examples;
  Vocabulary src, tgt;
  std::vector<EncodedExample> encoded;
};

TEST_F(Batching, PadsToLongestRowWithMasks) {
  std::vector<std::size_t> rows = {0, 1};
  auto b = make_batch(encoded, rows);
  EXPECT_EQ(b.size, 2u);
  EXPECT_EQ(b.src_len, 5u);  // 2 features + 3 chars
  EXPECT_EQ(b.tgt_len, 5u);  // 4 symbols + EOS
  // Row 1: one feature + one character, then padding.
  EXPECT_EQ(std::vector<std::uint8_t>(b.src_mask.begin() + 5, b.src_mask.end()),
            (std::vector<std::uint8_t>{1, 1, 0, 0, 0}));
  EXPECT_EQ(b.src_ids[5 + 2], kPad);
  EXPECT_EQ(b.tgt_in[5], kBos);
  EXPECT_EQ(b.tgt_out[5], tgt.lookup("b", false));
  EXPECT_EQ(b.tgt_out[6], kEos);
  EXPECT_EQ(b.tgt_out[7], kPad);
  EXPECT_EQ(b.tgt_mask[6], 1);
  EXPECT_EQ(b.tgt_mask[7], 0);
}

TEST_F(Batching, UnpaddingRecoversEveryExample) {
  std::vector<std::size_t> rows = {4, 0, 2, 1, 3};
  auto b = make_batch(encoded, rows);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    EXPECT_EQ(b.source_row(r).tokens, encoded[rows[r]].source.tokens);
    EXPECT_EQ(b.target_row(r), encoded[rows[r]].target);
    EXPECT_EQ(b.example_index[r], rows[r]);
  }
}

TEST_F(Batching, BatchOfOneHasNoExtraPadding) {
  std::vector<std::size_t> rows = {1};
  auto b = make_batch(encoded, rows);
  EXPECT_EQ(b.src_len, encoded[1].source.length());
  EXPECT_EQ(b.tgt_len, encoded[1].target.size() + 1);
  for (auto m : b.src_mask) EXPECT_EQ(m, 1);
  for (auto m : b.tgt_mask) EXPECT_EQ(m, 1);
}

TEST_F(Batching, EpochCoversEveryExampleOnce) {
  auto batches = make_batches(encoded, 2, 7, true);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches.back().size, 1u);
  std::multiset<std::size_t> seen;
  for (const auto& b : batches)
    for (auto i : b.example_index) seen.insert(i);
  EXPECT_EQ(seen, (std::multiset<std::size_t>{0, 1, 2, 3, 4}));
}

TEST_F(Batching, ShuffleIsSeededAndVariesByEpoch) {
  EXPECT_EQ(epoch_order(50, 1, 0, true), epoch_order(50, 1, 0, true));
  EXPECT_NE(epoch_order(50, 1, 0, true), epoch_order(50, 1, 1, true));
  EXPECT_NE(epoch_order(50, 1, 0, true), epoch_order(50, 2, 0, true));
  auto plain = epoch_order(5, 1, 3, false);
  EXPECT_EQ(plain, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST_F(Batching, ScheduleCyclesThroughEpochs) {
  BatchSchedule schedule(encoded, 2, 7, true);
  EXPECT_EQ(schedule.per_epoch(), 3u);
  auto epoch1 = make_batches(encoded, 2, 7, true, 1);
  for (std::uint64_t s = 3; s < 6; ++s) {
    EXPECT_EQ(schedule.at(s).example_index, epoch1[s - 3].example_index);
  }
  // Random access back into epoch 0.
  auto epoch0 = make_batches(encoded, 2, 7, true, 0);
  EXPECT_EQ(schedule.at(1).example_index, epoch0[1].example_index);
}

TEST(BatchCount, FourPercentBatchesOfTenThousand) {
  EXPECT_EQ(batches_per_epoch(10000, 400), 25u);
  EXPECT_EQ(batches_per_epoch(10001, 400), 26u);
  EXPECT_EQ(batches_per_epoch(3, 1), 3u);
}

TEST(SourceBatch, CarriesLayoutForInference) {
  Vocabulary v;
  v.add("a");
  v.add_feature("F");
  std::vector<EncodedSource> srcs = {build_source(S({"F"}), S({"a", "a"}), v),
                                     build_source({}, S({"a"}), v)};
  auto b = make_source_batch(srcs);
  EXPECT_EQ(b.src_len, 3u);
  EXPECT_EQ(b.source_row(0).tokens, srcs[0].tokens);
  EXPECT_EQ(b.source_row(1).tokens, srcs[1].tokens);
  EXPECT_TRUE(b.tgt_in.empty());
}

}  // namespace
}  // namespace chartrans
