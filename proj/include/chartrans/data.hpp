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

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chartrans/errors.hpp"
#include "chartrans/featenc.hpp"
#include "chartrans/rng.hpp"
#include "chartrans/vocab.hpp"

namespace chartrans {

/// Splits UTF-8 text into unicode scalar values, one string per scalar.
/// Throws std::invalid_argument on malformed input.
inline std::vector<std::string> utf8_split(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len;
    std::uint32_t cp;
    if (lead < 0x80) {
      len = 1;
      cp = lead;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      throw std::invalid_argument("invalid UTF-8 lead byte");
    }
    if (i + len > text.size()) throw std::invalid_argument("truncated UTF-8 sequence");
    for (std::size_t k = 1; k < len; ++k) {
      const auto c = static_cast<unsigned char>(text[i + k]);
      if ((c & 0xC0) != 0x80) throw std::invalid_argument("invalid UTF-8 continuation byte");
      cp = (cp << 6) | (c & 0x3F);
    }
    static constexpr std::uint32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      throw std::invalid_argument("invalid UTF-8 scalar value");
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

inline std::vector<std::string> split_on(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

struct Example {
  std::vector<std::string> source_chars;
  std::vector<std::string> features;
  std::vector<std::string> target_chars;

  bool operator==(const Example&) const = default;
};

/// How the target column of a pair file is tokenized.
enum class TargetUnit { kCharacters, kPhonemes };

inline std::string to_string(TargetUnit u) {
  return u == TargetUnit::kPhonemes ? "phonemes" : "characters";
}

inline TargetUnit parse_target_unit(std::string_view s) {
  if (s == "characters" || s == "chars") return TargetUnit::kCharacters;
  if (s == "phonemes") return TargetUnit::kPhonemes;
  throw std::invalid_argument("unknown unit '" + std::string(s) + "'");
}

inline std::vector<std::string> tokenize(std::string_view text, TargetUnit unit) {
  if (unit == TargetUnit::kCharacters) return utf8_split(text);
  std::vector<std::string> out;
  for (auto& piece : split_on(text, ' ')) {
    if (!piece.empty()) out.push_back(std::move(piece));
  }
  return out;
}

inline std::string detokenize(const std::vector<std::string>& symbols, TargetUnit unit) {
  return join(symbols, unit == TargetUnit::kPhonemes ? " " : "");
}

namespace detail {

// Yields (line number, line) for each line, tolerating a trailing CR and a
// final line without LF. Blank lines are skipped.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(number, line);
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace detail

/// lemma<TAB>target<TAB>feat1;feat2;...
inline std::vector<Example> parse_inflection_tsv(std::istream& in, const std::string& name) {
  std::vector<Example> out;
  detail::for_each_line(in, [&](std::size_t number, const std::string& line) {
    auto cols = split_on(line, '\t');
    if (cols.size() != 3) {
      throw ParseError(name, number, "expected 3 tab-separated columns, found " +
                                         std::to_string(cols.size()));
    }
    Example ex;
    try {
      ex.source_chars = utf8_split(cols[0]);
      ex.target_chars = utf8_split(cols[1]);
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, number, e.what());
    }
    if (ex.source_chars.empty() || ex.target_chars.empty() || cols[2].empty()) {
      throw ParseError(name, number, "empty field");
    }
    for (auto& f : split_on(cols[2], ';')) {
      if (f.empty()) throw ParseError(name, number, "empty feature in bundle");
      ex.features.push_back(std::move(f));
    }
    out.push_back(std::move(ex));
  });
  return out;
}

inline std::vector<Example> read_inflection_tsv(const std::string& path) {
  auto in = detail::open_input(path);
  return parse_inflection_tsv(in, path);
}

/// source<TAB>target; phoneme targets are space-separated symbols.
inline std::vector<Example> parse_pair_tsv(std::istream& in, const std::string& name,
                                           TargetUnit unit = TargetUnit::kCharacters) {
  std::vector<Example> out;
  detail::for_each_line(in, [&](std::size_t number, const std::string& line) {
    auto cols = split_on(line, '\t');
    if (cols.size() != 2) {
      throw ParseError(name, number, "expected 2 tab-separated columns, found " +
                                         std::to_string(cols.size()));
    }
    Example ex;
    try {
      ex.source_chars = utf8_split(cols[0]);
      ex.target_chars = tokenize(cols[1], unit);
    } catch (const std::invalid_argument& e) {
      throw ParseError(name, number, e.what());
    }
    if (ex.source_chars.empty() || ex.target_chars.empty()) {
      throw ParseError(name, number, "empty field");
    }
    out.push_back(std::move(ex));
  });
  return out;
}

inline std::vector<Example> read_pair_tsv(const std::string& path,
                                          TargetUnit unit = TargetUnit::kCharacters) {
  auto in = detail::open_input(path);
  return parse_pair_tsv(in, path, unit);
}

inline void write_inflection_tsv(std::ostream& out, std::span<const Example> examples) {
  for (const auto& ex : examples) {
    out << join(ex.source_chars, "") << '\t' << join(ex.target_chars, "") << '\t'
        << join(ex.features, ";") << '\n';
  }
}

inline void write_pair_tsv(std::ostream& out, std::span<const Example> examples,
                           TargetUnit unit = TargetUnit::kCharacters) {
  for (const auto& ex : examples) {
    out << join(ex.source_chars, "") << '\t' << detokenize(ex.target_chars, unit) << '\n';
  }
}

/// Source and target vocabularies; symbols are numbered by first occurrence
/// (features before characters within an example) after the reserved four.
inline std::pair<Vocabulary, Vocabulary> build_vocab(std::span<const Example> examples) {
  if (examples.empty()) throw InvariantError("build_vocab: no examples");
  Vocabulary src, tgt;
  for (const auto& ex : examples) {
    for (const auto& f : ex.features) src.add_feature(f);
    for (const auto& c : ex.source_chars) src.add(c);
    for (const auto& c : ex.target_chars) tgt.add(c);
  }
  return {std::move(src), std::move(tgt)};
}

struct EncodedExample {
  EncodedSource source;
  std::vector<int> target;  // without BOS/EOS
};

struct EncodeOptions {
  EncoderMode mode = EncoderMode::kFeatureInvariant;
  FeaturePlacement placement = FeaturePlacement::kPrepend;
  bool allow_unk = false;
};

inline EncodedExample encode_example(const Example& ex, const Vocabulary& src_vocab,
                                     const Vocabulary& tgt_vocab, const EncodeOptions& opt) {
  EncodedExample out;
  out.source = build_source(ex.features, ex.source_chars, src_vocab, opt.mode, opt.allow_unk,
                            opt.placement);
  out.target.reserve(ex.target_chars.size());
  for (const auto& c : ex.target_chars) out.target.push_back(tgt_vocab.lookup(c, opt.allow_unk));
  return out;
}

inline std::vector<EncodedExample> encode_examples(std::span<const Example> examples,
                                                   const Vocabulary& src_vocab,
                                                   const Vocabulary& tgt_vocab,
                                                   const EncodeOptions& opt) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(encode_example(ex, src_vocab, tgt_vocab, opt));
  return out;
}

/// Padded, row-major minibatch. Source matrices are [size, src_len]; target
/// matrices are [size, tgt_len] where tgt_in = BOS + target and tgt_out =
/// target + EOS. Padding uses PAD (0) everywhere, with mask 0.
struct Batch {
  std::size_t size = 0;
  std::size_t src_len = 0;
  std::size_t tgt_len = 0;
  std::vector<int> src_ids;
  std::vector<std::uint8_t> src_types;
  std::vector<int> src_positions;
  std::vector<std::uint8_t> src_mask;
  std::vector<int> tgt_in;
  std::vector<int> tgt_out;
  std::vector<std::uint8_t> tgt_mask;
  std::vector<std::size_t> example_index;  // row -> index into the source list

  /// Source tokens of row `r` with padding stripped.
  EncodedSource source_row(std::size_t r) const {
    EncodedSource s;
    for (std::size_t j = 0; j < src_len; ++j) {
      const std::size_t k = r * src_len + j;
      if (!src_mask[k]) continue;
      s.tokens.push_back({src_ids[k], static_cast<TokenType>(src_types[k]), src_positions[k]});
    }
    return s;
  }

  /// Target symbols of row `r` (no BOS/EOS, no padding).
  std::vector<int> target_row(std::size_t r) const {
    std::vector<int> t;
    for (std::size_t j = 0; j < tgt_len; ++j) {
      const std::size_t k = r * tgt_len + j;
      if (tgt_mask[k] && tgt_out[k] != kEos) t.push_back(tgt_out[k]);
    }
    return t;
  }
};

inline Batch make_batch(std::span<const EncodedExample> examples,
                        std::span<const std::size_t> rows) {
  if (rows.empty()) throw InvariantError("make_batch: empty batch");
  Batch b;
  b.size = rows.size();
  for (auto r : rows) {
    b.src_len = std::max(b.src_len, examples[r].source.length());
    b.tgt_len = std::max(b.tgt_len, examples[r].target.size() + 1);
  }
  b.src_ids.assign(b.size * b.src_len, kPad);
  b.src_types.assign(b.size * b.src_len, static_cast<std::uint8_t>(TokenType::kCharacter));
  b.src_positions.assign(b.size * b.src_len, 0);
  b.src_mask.assign(b.size * b.src_len, 0);
  b.tgt_in.assign(b.size * b.tgt_len, kPad);
  b.tgt_out.assign(b.size * b.tgt_len, kPad);
  b.tgt_mask.assign(b.size * b.tgt_len, 0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& ex = examples[rows[i]];
    b.example_index.push_back(rows[i]);
    for (std::size_t j = 0; j < ex.source.length(); ++j) {
      const auto& tok = ex.source.tokens[j];
      const std::size_t k = i * b.src_len + j;
      b.src_ids[k] = tok.symbol_id;
      b.src_types[k] = static_cast<std::uint8_t>(tok.type);
      b.src_positions[k] = tok.position;
      b.src_mask[k] = 1;
    }
    const std::size_t base = i * b.tgt_len;
    b.tgt_in[base] = kBos;
    for (std::size_t j = 0; j < ex.target.size(); ++j) {
      b.tgt_in[base + j + 1] = ex.target[j];
      b.tgt_out[base + j] = ex.target[j];
    }
    b.tgt_out[base + ex.target.size()] = kEos;
    for (std::size_t j = 0; j <= ex.target.size(); ++j) b.tgt_mask[base + j] = 1;
  }
  return b;
}

/// Source-only batch for inference; target fields stay empty.
inline Batch make_source_batch(std::span<const EncodedSource> sources) {
  if (sources.empty()) throw InvariantError("make_source_batch: empty batch");
  Batch b;
  b.size = sources.size();
  for (const auto& s : sources) b.src_len = std::max(b.src_len, s.length());
  if (b.src_len == 0) throw InvariantError("make_source_batch: all sources are empty");
  b.src_ids.assign(b.size * b.src_len, kPad);
  b.src_types.assign(b.size * b.src_len, static_cast<std::uint8_t>(TokenType::kCharacter));
  b.src_positions.assign(b.size * b.src_len, 0);
  b.src_mask.assign(b.size * b.src_len, 0);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    b.example_index.push_back(i);
    for (std::size_t j = 0; j < sources[i].length(); ++j) {
      const auto& tok = sources[i].tokens[j];
      const std::size_t k = i * b.src_len + j;
      b.src_ids[k] = tok.symbol_id;
      b.src_types[k] = static_cast<std::uint8_t>(tok.type);
      b.src_positions[k] = tok.position;
      b.src_mask[k] = 1;
    }
  }
  return b;
}

/// Example order for one epoch. Shuffling is seeded by (seed, epoch) so that
/// every epoch differs yet any epoch can be regenerated independently.
inline std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed,
                                            std::uint64_t epoch, bool shuffle) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(mix_seed(mix_seed(seed, 3), epoch));
    rng.shuffle(order);
  }
  return order;
}

inline std::size_t batches_per_epoch(std::size_t n, std::size_t batch_size) {
  return (n + batch_size - 1) / batch_size;
}

/// All batches of one epoch: consecutive chunks of `batch_size` examples in
/// epoch order, the last one possibly smaller.
inline std::vector<Batch> make_batches(std::span<const EncodedExample> examples,
                                       std::size_t batch_size, std::uint64_t seed,
                                       bool shuffle, std::uint64_t epoch = 0) {
  if (batch_size == 0) throw InvariantError("make_batches: batch size must be >= 1");
  if (examples.empty()) throw InvariantError("make_batches: empty dataset");
  const auto order = epoch_order(examples.size(), seed, epoch, shuffle);
  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    out.push_back(make_batch(examples, std::span(order).subspan(start, end - start)));
  }
  return out;
}

/// Maps a global step counter onto (epoch, batch) and materializes that batch,
/// cycling through epochs indefinitely.
class BatchSchedule {
 public:
  BatchSchedule(std::span<const EncodedExample> examples, std::size_t batch_size,
                std::uint64_t seed, bool shuffle = true)
      : examples_(examples), batch_size_(batch_size), seed_(seed), shuffle_(shuffle) {
    if (batch_size == 0) throw InvariantError("batch size must be >= 1");
    if (examples.empty()) throw InvariantError("empty training set");
  }

  std::size_t per_epoch() const { return batches_per_epoch(examples_.size(), batch_size_); }

  /// Batch consumed by zero-based update `step`.
  Batch at(std::uint64_t step) {
    const std::uint64_t epoch = step / per_epoch();
    const std::size_t idx = static_cast<std::size_t>(step % per_epoch());
    if (epoch != cached_epoch_ || order_.empty()) {
      order_ = epoch_order(examples_.size(), seed_, epoch, shuffle_);
      cached_epoch_ = epoch;
    }
    const std::size_t start = idx * batch_size_;
    const std::size_t end = std::min(order_.size(), start + batch_size_);
    return make_batch(examples_, std::span(order_).subspan(start, end - start));
  }

 private:
  std::span<const EncodedExample> examples_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool shuffle_;
  std::uint64_t cached_epoch_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace chartrans
