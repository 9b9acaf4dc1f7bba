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
#include <span>
#include <string>
#include <vector>

#include "chartrans/data.hpp"
#include "chartrans/metrics.hpp"
#include "chartrans/transformer.hpp"
#include "chartrans/vocab.hpp"

namespace chartrans {

/// Output cap: max(30, 2 * source characters + 5).
inline std::size_t max_decode_length(const EncodedSource& src) {
  return std::max<std::size_t>(30, 2 * src.char_count() + 5);
}

/// Index of the largest entry; ties go to the lowest index.
template <typename T>
int argmax(std::span<const T> row) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k] > row[best]) best = k;
  return static_cast<int>(best);
}

/// Greedy left-to-right decoding of a batch of sources.
///
/// Each row starts from BOS and appends the argmax symbol until it emits EOS
/// or reaches its length cap. Returned sequences exclude BOS and EOS. When
/// `step_logits` is given, it receives, per row, the concatenated logit rows
/// of every step that row actually took.
template <typename T>
std::vector<std::vector<int>> greedy_decode(const Transformer<T>& model,
                                            std::span<const EncodedSource> sources,
                                            std::vector<std::vector<T>>* step_logits = nullptr) {
  std::vector<std::vector<int>> out(sources.size());
  if (sources.empty()) return out;
  NoGradGuard no_grad;
  const auto batch = make_source_batch(sources);
  const auto memory = model.encode(batch, false, nullptr);
  auto state = model.start_decoding(batch, memory);
  std::vector<std::size_t> cap(sources.size());
  std::size_t longest = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    cap[i] = max_decode_length(sources[i]);
    longest = std::max(longest, cap[i]);
  }
  if (step_logits) step_logits->assign(sources.size(), {});
  std::vector<bool> done(sources.size(), false);
  std::vector<int> tokens(sources.size(), kBos);
  std::size_t remaining = sources.size();
  for (std::size_t step = 0; step <= longest && remaining > 0; ++step) {
    const auto logits = model.decode_step(state, tokens);
    const std::size_t vocab = logits.dim(1);
    for (std::size_t i = 0; i < sources.size(); ++i) {
      if (done[i]) continue;
      auto row = logits.values().subspan(i * vocab, vocab);
      if (step_logits) (*step_logits)[i].insert((*step_logits)[i].end(), row.begin(), row.end());
      const int next = argmax(row);
      if (next == kEos || out[i].size() >= cap[i]) {
        done[i] = true;
        --remaining;
        continue;
      }
      out[i].push_back(next);
      tokens[i] = next;
    }
  }
  return out;
}

/// Decodes `sources` in chunks of `batch_size` rows.
template <typename T>
std::vector<std::vector<int>> greedy_decode_all(const Transformer<T>& model,
                                                std::span<const EncodedSource> sources,
                                                std::size_t batch_size = 256) {
  std::vector<std::vector<int>> out;
  out.reserve(sources.size());
  for (std::size_t start = 0; start < sources.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, sources.size() - start);
    auto part = greedy_decode(model, sources.subspan(start, n));
    for (auto& p : part) out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<std::string> to_symbols(const std::vector<int>& ids, const Vocabulary& vocab) {
  std::vector<std::string> s;
  s.reserve(ids.size());
  for (int id : ids) s.push_back(vocab.symbol(id));
  return s;
}

inline std::string describe_source(const Example& ex) {
  std::string s = join(ex.source_chars, "");
  if (!ex.features.empty()) s += " " + join(ex.features, ";");
  return s;
}

/// Decodes every example and pairs the output with its gold target.
template <typename T>
std::vector<Prediction> predict(const Transformer<T>& model, std::span<const Example> examples,
                                const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                                std::size_t batch_size = 256) {
  EncodeOptions opt;
  opt.mode = model.mode();
  opt.allow_unk = true;
  std::vector<EncodedSource> sources;
  sources.reserve(examples.size());
  for (const auto& ex : examples) {
    sources.push_back(build_source(ex.features, ex.source_chars, src_vocab, opt.mode, true));
  }
  const auto outputs = greedy_decode_all(model, std::span<const EncodedSource>(sources), batch_size);
  std::vector<Prediction> preds;
  preds.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    preds.push_back({describe_source(examples[i]), examples[i].target_chars,
                     to_symbols(outputs[i], tgt_vocab)});
  }
  return preds;
}

}  // namespace chartrans
