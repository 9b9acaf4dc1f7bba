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

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "chartrans/data.hpp"
#include "chartrans/errors.hpp"
#include "chartrans/rng.hpp"

// Rule-generated inflection data for desk-scale experiments.

namespace chartrans {

/// A deterministic string edit: optional prefix, optional suffix, and
/// optional doubling of a final consonant that follows a single short vowel
/// (stop -> stopped, but smear -> smeared).
struct InflectionRule {
  std::string prefix;
  std::string suffix;
  bool double_final = false;

  bool operator==(const InflectionRule&) const = default;
};

struct RuleEntry {
  std::vector<std::string> bundle;
  InflectionRule rule;

  bool operator==(const RuleEntry&) const = default;
};

using RuleTable = std::vector<RuleEntry>;

inline RuleTable default_rule_table() {
  return {
      {{"V", "PST", "PTCP"}, {"", "ed", true}},
      {{"V", "PRS", "3", "SG"}, {"", "s", false}},
      {{"V", "PFV", "PTCP"}, {"ge", "t", false}},
      {{"V", "NFIN"}, {"", "", false}},
  };
}

inline bool is_vowel(const std::string& c) {
  return c == "a" || c == "e" || c == "i" || c == "o" || c == "u";
}

inline std::vector<std::string> apply_rule(const std::vector<std::string>& lemma,
                                           const InflectionRule& rule) {
  std::vector<std::string> out = utf8_split(rule.prefix);
  out.insert(out.end(), lemma.begin(), lemma.end());
  const std::size_t n = lemma.size();
  if (rule.double_final && n >= 2 && !is_vowel(lemma[n - 1]) && is_vowel(lemma[n - 2]) &&
      (n == 2 || !is_vowel(lemma[n - 3]))) {
    out.push_back(lemma[n - 1]);
  }
  for (auto& c : utf8_split(rule.suffix)) out.push_back(std::move(c));
  return out;
}

/// Rule table file: bundle<TAB>prefix<TAB>suffix<TAB>double, with "-" for an
/// empty affix and double in {0, 1}. Lines starting with '#' are comments.
inline RuleTable parse_rule_table(std::istream& in, const std::string& name) {
  RuleTable table;
  detail::for_each_line(in, [&](std::size_t number, const std::string& line) {
    if (line[0] == '#') return;
    auto cols = split_on(line, '\t');
    if (cols.size() != 4) throw ParseError(name, number, "expected 4 columns");
    RuleEntry e;
    e.bundle = split_on(cols[0], ';');
    for (const auto& f : e.bundle) {
      if (f.empty()) throw ParseError(name, number, "empty feature in bundle");
    }
    e.rule.prefix = cols[1] == "-" ? "" : cols[1];
    e.rule.suffix = cols[2] == "-" ? "" : cols[2];
    if (cols[3] != "0" && cols[3] != "1") throw ParseError(name, number, "double must be 0 or 1");
    e.rule.double_final = cols[3] == "1";
    table.push_back(std::move(e));
  });
  if (table.empty()) throw ParseError(name, 0, "empty rule table");
  return table;
}

inline void write_rule_table(std::ostream& out, const RuleTable& table) {
  for (const auto& e : table) {
    out << join(e.bundle, ";") << '\t' << (e.rule.prefix.empty() ? "-" : e.rule.prefix) << '\t'
        << (e.rule.suffix.empty() ? "-" : e.rule.suffix) << '\t' << (e.rule.double_final ? 1 : 0)
        << '\n';
  }
}

struct SyntheticSplits {
  std::vector<Example> train;
  std::vector<Example> dev;
  std::vector<Example> test;
};

struct SyntheticOptions {
  std::size_t min_length = 3;
  std::size_t max_length = 7;
};

/// `num_examples` distinct random lemmata over the first `alphabet_size`
/// letters, each paired with a uniformly drawn bundle; split 8/1/1 so no
/// lemma occurs in two splits.
inline SyntheticSplits gen_synthetic_inflection(std::size_t num_examples,
                                                std::size_t alphabet_size,
                                                const RuleTable& rules, std::uint64_t seed,
                                                const SyntheticOptions& opt = {}) {
  if (rules.empty()) throw InvariantError("synthetic generator: empty rule table");
  if (alphabet_size < 1 || alphabet_size > 26) {
    throw InvariantError("synthetic generator: alphabet size must be in [1, 26]");
  }
  if (opt.min_length < 1 || opt.max_length < opt.min_length) {
    throw InvariantError("synthetic generator: bad lemma length range");
  }
  Rng rng(seed);
  std::set<std::string> seen;
  std::vector<Example> all;
  all.reserve(num_examples);
  std::size_t attempts = 0;
  while (all.size() < num_examples) {
    if (++attempts > 100 * num_examples + 1000) {
      throw InvariantError("synthetic generator: cannot draw enough distinct lemmata");
    }
    const std::size_t len =
        opt.min_length + rng.below(opt.max_length - opt.min_length + 1);
    std::string lemma;
    for (std::size_t i = 0; i < len; ++i) lemma += static_cast<char>('a' + rng.below(alphabet_size));
    if (!seen.insert(lemma).second) continue;
    const auto& entry = rules[rng.below(rules.size())];
    Example ex;
    ex.source_chars = utf8_split(lemma);
    ex.features = entry.bundle;
    ex.target_chars = apply_rule(ex.source_chars, entry.rule);
    all.push_back(std::move(ex));
  }
  SyntheticSplits s;
  const std::size_t n_train = num_examples * 8 / 10;
  const std::size_t n_dev = num_examples / 10;
  s.train.assign(all.begin(), all.begin() + n_train);
  s.dev.assign(all.begin() + n_train, all.begin() + n_train + n_dev);
  s.test.assign(all.begin() + n_train + n_dev, all.end());
  return s;
}

/// Copy of `examples` with each feature bundle independently shuffled.
inline std::vector<Example> permute_features(std::vector<Example> examples, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& ex : examples) rng.shuffle(ex.features);
  return examples;
}

}  // namespace chartrans
