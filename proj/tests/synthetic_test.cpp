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

std::string apply(const std::string& lemma, const InflectionRule& r) {
  return join(apply_rule(utf8_split(lemma), r), "");
}

TEST(Rules, AffixesAndConsonantDoubling) {
  const InflectionRule past{"", "ed", true};
  EXPECT_EQ(apply("stop", past), "stopped");
  EXPECT_EQ(apply("smear", past), "smeared");  // two vowels before the final consonant
  EXPECT_EQ(apply("walk", past), "walked");    // consonant cluster
  EXPECT_EQ(apply("go", past), "goed");        // vowel-final
  EXPECT_EQ(apply("at", past), "atted");       // two-letter lemma
  EXPECT_EQ(apply("mac", InflectionRule{"ge", "t", false}), "gemact");
  EXPECT_EQ(apply("mac", InflectionRule{}), "mac");
}

TEST(Rules, TableRoundTripsThroughText) {
  const auto table = default_rule_table();
  std::ostringstream out;
  write_rule_table(out, table);
  std::istringstream in("# comment\n" + out.str());
  EXPECT_EQ(parse_rule_table(in, "rules.tsv"), table);
}

TEST(Rules, MalformedTablesAreRejected) {
  std::istringstream cols("V;PST\ted\n");
  EXPECT_THROW(parse_rule_table(cols, "r"), ParseError);
  std::istringstream flag("V;PST\t-\ted\tyes\n");
  EXPECT_THROW(parse_rule_table(flag, "r"), ParseError);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(parse_rule_table(empty, "r"), ParseError);
}

TEST(Generator, SplitsAreSizedDisjointAndRuleConsistent) {
  const auto rules = default_rule_table();
  const auto s = gen_synthetic_inflection(2500, 26, rules, 7);
  EXPECT_EQ(s.train.size(), 2000u);
  EXPECT_EQ(s.dev.size(), 250u);
  EXPECT_EQ(s.test.size(), 250u);
  std::set<std::string> lemmata;
  std::set<std::vector<std::string>> bundles;
  for (const auto* split : {&s.train, &s.dev, &s.test}) {
    for (const auto& ex : *split) {
      EXPECT_TRUE(lemmata.insert(join(ex.source_chars, "")).second);
      EXPECT_GE(ex.source_chars.size(), 3u);
      EXPECT_LE(ex.source_chars.size(), 7u);
      bundles.insert(ex.features);
      bool matched = false;
      for (const auto& r : rules) {
        if (r.bundle == ex.features) {
          EXPECT_EQ(ex.target_chars, apply_rule(ex.source_chars, r.rule));
          matched = true;
        }
      }
      EXPECT_TRUE(matched);
    }
  }
  EXPECT_EQ(bundles.size(), 4u);
}

TEST(Generator, SameSeedSameData) {
  const auto rules = default_rule_table();
  const auto a = gen_synthetic_inflection(300, 5, rules, 3);
  const auto b = gen_synthetic_inflection(300, 5, rules, 3);
  const auto c = gen_synthetic_inflection(300, 5, rules, 4);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.dev, b.dev);
  EXPECT_NE(a.train, c.train);
  for (const auto& ex : a.train)
    for (const auto& ch : ex.source_chars) EXPECT_TRUE(ch >= "a" && ch <= "e") << ch;
}

TEST(Generator, RejectsImpossibleRequests) {
  const auto rules = default_rule_table();
  EXPECT_THROW(gen_synthetic_inflection(100, 27, rules, 1), InvariantError);
  EXPECT_THROW(gen_synthetic_inflection(100, 5, {}, 1), InvariantError);
  SyntheticOptions tiny;
  tiny.min_length = tiny.max_length = 1;
  // Only two distinct one-letter lemmata exist over {a, b}.
  EXPECT_THROW(gen_synthetic_inflection(3, 2, rules, 1, tiny), InvariantError);
}

TEST(Generator, PermuteFeaturesKeepsTheMultiset) {
  const auto s = gen_synthetic_inflection(200, 26, default_rule_table(), 1);
  const auto p = permute_features(s.train, 5);
  ASSERT_EQ(p.size(), s.train.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto a = s.train[i].features, b = p[i].features;
    changed += a != b;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    EXPECT_EQ(p[i].source_chars, s.train[i].source_chars);
  }
  EXPECT_GT(changed, 0u);
}

}  // namespace
}  // namespace chartrans
