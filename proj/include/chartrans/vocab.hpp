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

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "chartrans/errors.hpp"

namespace chartrans {

inline constexpr int kPad = 0;
inline constexpr int kBos = 1;
inline constexpr int kEos = 2;
inline constexpr int kUnk = 3;

/// Bidirectional symbol <-> index map with the four reserved entries first.
///
/// Feature symbols live in the same table as characters but under a
/// bracketed key, so a feature "V" never collides with the character "V".
class Vocabulary {
 public:
  Vocabulary() {
    for (const char* s : {"<pad>", "<s>", "</s>", "<unk>"}) insert(s);
  }

  static std::string feature_key(std::string_view feature) {
    return "[" + std::string(feature) + "]";
  }

  int add(std::string_view symbol) {
    if (auto id = find(symbol)) return *id;
    return insert(std::string(symbol));
  }
  int add_feature(std::string_view feature) { return add(feature_key(feature)); }

  std::optional<int> find(std::string_view symbol) const {
    auto it = index_.find(std::string(symbol));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  /// Index of `symbol`; unknown symbols map to UNK when allowed, else throw.
  int lookup(std::string_view symbol, bool allow_unk) const {
    if (auto id = find(symbol)) return *id;
    if (allow_unk) return kUnk;
    throw VocabularyError("symbol '" + std::string(symbol) + "' is not in the vocabulary");
  }
  int lookup_feature(std::string_view feature, bool allow_unk) const {
    return lookup(feature_key(feature), allow_unk);
  }

  const std::string& symbol(int id) const { return symbols_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  /// Rebuilds a vocabulary from its symbol list (as stored in checkpoints).
  static Vocabulary from_symbols(const std::vector<std::string>& symbols) {
    Vocabulary v;
    if (symbols.size() < 4) throw VocabularyError("vocabulary lacks reserved entries");
    for (std::size_t i = 0; i < 4; ++i) {
      if (symbols[i] != v.symbols_[i]) throw VocabularyError("reserved entries out of order");
    }
    for (std::size_t i = 4; i < symbols.size(); ++i) {
      if (v.find(symbols[i])) throw VocabularyError("duplicate symbol '" + symbols[i] + "'");
      v.insert(symbols[i]);
    }
    return v;
  }

  bool operator==(const Vocabulary& o) const { return symbols_ == o.symbols_; }

 private:
  int insert(std::string s) {
    const int id = static_cast<int>(symbols_.size());
    index_.emplace(s, id);
    symbols_.push_back(std::move(s));
    return id;
  }

  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace chartrans
