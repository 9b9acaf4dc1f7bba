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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "chartrans/errors.hpp"
#include "chartrans/vocab.hpp"

// Source-side input layout for feature-guided transduction.
//
// In feature-invariant mode every feature token sits at position 0 and
// characters count 1, 2, 3, ... so the positional offset between a character
// and any feature is the character's own index, however many features there
// are. A type embedding tells the two kinds apart. Vanilla mode numbers all
// tokens consecutively from 0 and adds no type embedding.

namespace chartrans {

enum class TokenType : std::uint8_t { kFeature = 0, kCharacter = 1 };

enum class EncoderMode { kFeatureInvariant, kVanilla };

enum class FeaturePlacement { kPrepend, kAppend };

inline std::string to_string(EncoderMode mode) {
  return mode == EncoderMode::kVanilla ? "vanilla" : "feature_invariant";
}

inline EncoderMode parse_encoder_mode(std::string_view s) {
  if (s == "feature_invariant") return EncoderMode::kFeatureInvariant;
  if (s == "vanilla") return EncoderMode::kVanilla;
  throw std::invalid_argument("unknown encoder mode '" + std::string(s) +
                              "' (expected feature_invariant or vanilla)");
}

struct SourceToken {
  int symbol_id = 0;
  TokenType type = TokenType::kCharacter;
  int position = 0;

  bool operator==(const SourceToken&) const = default;
};

struct EncodedSource {
  std::vector<SourceToken> tokens;

  std::size_t length() const { return tokens.size(); }
  std::size_t char_count() const {
    std::size_t n = 0;
    for (const auto& t : tokens) n += t.type == TokenType::kCharacter;
    return n;
  }
};

/// Lays out features and characters as typed, positioned tokens.
///
/// Unknown symbols throw unless `allow_unk`, in which case they become UNK
/// (evaluation-time behaviour).
inline EncodedSource build_source(std::span<const std::string> features,
                                  std::span<const std::string> characters,
                                  const Vocabulary& vocab,
                                  EncoderMode mode = EncoderMode::kFeatureInvariant,
                                  bool allow_unk = false,
                                  FeaturePlacement placement = FeaturePlacement::kPrepend) {
  EncodedSource out;
  out.tokens.reserve(features.size() + characters.size());
  auto push_features = [&] {
    for (const auto& f : features) {
      out.tokens.push_back({vocab.lookup_feature(f, allow_unk), TokenType::kFeature, 0});
    }
  };
  if (placement == FeaturePlacement::kPrepend) push_features();
  for (std::size_t i = 0; i < characters.size(); ++i) {
    out.tokens.push_back({vocab.lookup(characters[i], allow_unk), TokenType::kCharacter,
                          static_cast<int>(i + 1)});
  }
  if (placement == FeaturePlacement::kAppend) push_features();
  if (mode == EncoderMode::kVanilla) {
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
      out.tokens[i].position = static_cast<int>(i);
    }
  }
  return out;
}

/// Checks the feature-invariant layout: features at 0, characters numbered
/// 1..n without gaps in surface order.
inline void validate_feature_invariant(const EncodedSource& src) {
  int expected = 1;
  for (const auto& t : src.tokens) {
    if (t.type == TokenType::kFeature) {
      if (t.position != 0) throw InvariantError("feature token at nonzero position");
    } else {
      if (t.position != expected) {
        throw InvariantError("character positions are not consecutive from 1");
      }
      ++expected;
    }
  }
}

}  // namespace chartrans
