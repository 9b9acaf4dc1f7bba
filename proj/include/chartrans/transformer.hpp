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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chartrans/data.hpp"
#include "chartrans/errors.hpp"
#include "chartrans/featenc.hpp"
#include "chartrans/ops.hpp"
#include "chartrans/rng.hpp"
#include "chartrans/tensor.hpp"

namespace chartrans {

struct TransformerConfig {
  int num_layers = 4;
  int num_heads = 4;
  int d_model = 256;
  int d_ff = 1024;
  double dropout_rate = 0.3;
  int max_positions = 1024;
  int src_vocab_size = 0;
  int tgt_vocab_size = 0;

  void validate() const {
    if (num_layers < 0 || num_heads <= 0 || d_model <= 0 || d_ff <= 0 || max_positions <= 0 ||
        src_vocab_size <= 0 || tgt_vocab_size <= 0) {
      throw InvariantError("transformer config: sizes must be positive");
    }
    if (d_model % num_heads != 0) {
      throw InvariantError("transformer config: d_model " + std::to_string(d_model) +
                           " is not divisible by " + std::to_string(num_heads) + " heads");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw InvariantError("transformer config: dropout must lie in [0, 1)");
    }
  }

  bool operator==(const TransformerConfig&) const = default;
};

/// Sinusoidal encoding of one position: sin at even, cos at odd indices,
/// both at frequency 10000^(-2i/d_model).
inline std::vector<double> sinusoidal_pe(int position, int d_model) {
  if (position < 0) throw InvariantError("sinusoidal_pe: negative position");
  std::vector<double> pe(static_cast<std::size_t>(d_model));
  for (int j = 0; j < d_model; ++j) {
    const int i2 = j - (j % 2);
    const double angle =
        position / std::pow(10000.0, static_cast<double>(i2) / static_cast<double>(d_model));
    pe[static_cast<std::size_t>(j)] = (j % 2 == 0) ? std::sin(angle) : std::cos(angle);
  }
  return pe;
}

/// Named parameter tensors in creation order.
template <typename T = real>
class ParameterStore {
 public:
  Tensor<T> add(std::string name, Tensor<T> t) {
    if (index_.count(name)) throw InvariantError("duplicate parameter " + name);
    t.set_requires_grad(true);
    index_.emplace(name, tensors_.size());
    names_.push_back(std::move(name));
    tensors_.push_back(t);
    return t;
  }

  const Tensor<T>& get(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) throw InvariantError("unknown parameter " + std::string(name));
    return tensors_[it->second];
  }
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }

  std::size_t size() const { return tensors_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  std::span<Tensor<T>> tensors() { return tensors_; }
  std::span<const Tensor<T>> tensors() const { return tensors_; }

  void zero_grad() {
    for (auto& t : tensors_) t.zero_grad();
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct ParameterCounts {
  std::size_t total = 0;
  std::size_t layer_stack = 0;  // encoder/decoder layers only
  std::size_t embeddings = 0;   // symbol and type embeddings
  std::size_t output = 0;       // projection to the target vocabulary
  std::size_t final_norms = 0;  // norms after the last encoder/decoder layer
};

template <typename T>
ParameterCounts count_parameters(const ParameterStore<T>& params) {
  ParameterCounts c;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& name = params.names()[i];
    const std::size_t n = params.tensors()[i].numel();
    c.total += n;
    if (name.starts_with("encoder.layer") || name.starts_with("decoder.layer")) {
      c.layer_stack += n;
    } else if (name.ends_with("_embed.weight")) {
      c.embeddings += n;
    } else if (name.starts_with("output.")) {
      c.output += n;
    } else if (name.find(".final_norm.") != std::string::npos) {
      c.final_norms += n;
    }
  }
  return c;
}

/// Count for a named scope: "total", "layer-stack", "embeddings", "output",
/// or "final-norms".
template <typename T>
std::size_t count_parameters(const ParameterStore<T>& params, std::string_view scope) {
  const auto c = count_parameters(params);
  if (scope == "total") return c.total;
  if (scope == "layer-stack") return c.layer_stack;
  if (scope == "embeddings") return c.embeddings;
  if (scope == "output") return c.output;
  if (scope == "final-norms") return c.final_norms;
  throw std::invalid_argument("unknown parameter scope '" + std::string(scope) + "'");
}

template <typename T>
struct LinearParams {
  Tensor<T> weight;  // [in, out]
  Tensor<T> bias;
};

template <typename T>
struct NormParams {
  Tensor<T> gain;
  Tensor<T> bias;
};

template <typename T>
struct AttentionParams {
  LinearParams<T> q, k, v, o;
};

template <typename T>
struct FeedForwardParams {
  LinearParams<T> in, out;
};

template <typename T>
struct EncoderLayerParams {
  NormParams<T> self_attn_norm;
  AttentionParams<T> self_attn;
  NormParams<T> ff_norm;
  FeedForwardParams<T> ff;
};

template <typename T>
struct DecoderLayerParams {
  NormParams<T> self_attn_norm;
  AttentionParams<T> self_attn;
  NormParams<T> cross_attn_norm;
  AttentionParams<T> cross_attn;
  NormParams<T> ff_norm;
  FeedForwardParams<T> ff;
};

template <typename T>
Tensor<T> apply(const LinearParams<T>& p, const Tensor<T>& x) {
  return linear(x, p.weight, p.bias);
}

template <typename T>
Tensor<T> apply(const NormParams<T>& p, const Tensor<T>& x) {
  return layer_norm(x, p.gain, p.bias, T(1e-5));
}

/// Scaled dot-product attention over already projected rows.
/// q is [batch*lq, d]; k and v are [batch*lk, d]. Returns [batch*lq, d]
/// before the output projection.
template <typename T>
Tensor<T> attend_projected(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                           std::size_t batch, std::size_t heads,
                           std::span<const std::uint8_t> key_mask, bool causal,
                           double dropout_rate, bool training, Rng* rng) {
  const std::size_t d = q.shape().back();
  const T inv_scale = T(1) / std::sqrt(static_cast<T>(d / heads));
  auto qh = split_heads(q, batch, heads);
  auto kh = split_heads(k, batch, heads);
  auto vh = split_heads(v, batch, heads);
  auto scores = bmm(qh, kh, false, true);
  auto probs = masked_softmax(scores, key_mask, heads, causal, inv_scale);
  probs = dropout(probs, dropout_rate, training, rng);
  return merge_heads(bmm(probs, vh), heads);
}

/// Multi-head attention: project queries/keys/values, attend per head,
/// concatenate heads and apply the output projection. `key_mask` is
/// [batch, keys] with 1 on attendable keys (empty = all attendable).
template <typename T>
Tensor<T> multi_head_attention(const AttentionParams<T>& p, const Tensor<T>& queries,
                               const Tensor<T>& keys, const Tensor<T>& values,
                               std::size_t batch, std::size_t heads,
                               std::span<const std::uint8_t> key_mask, bool causal,
                               double dropout_rate = 0.0, bool training = false,
                               Rng* rng = nullptr) {
  auto ctx = attend_projected(apply(p.q, queries), apply(p.k, keys), apply(p.v, values), batch,
                              heads, key_mask, causal, dropout_rate, training, rng);
  return apply(p.o, ctx);
}

template <typename T>
Tensor<T> feed_forward(const FeedForwardParams<T>& p, const Tensor<T>& x) {
  return apply(p.out, relu(apply(p.in, x)));
}

/// Pre-LN encoder-decoder transformer over symbol sequences.
///
/// Activations are kept as row matrices [batch*len, d_model]. The encoder
/// input is the typed, positioned source layout from featenc; the decoder
/// consumes BOS-prefixed target ids at positions 1, 2, ... and never gets a
/// type embedding.
template <typename T = real>
class Transformer {
 public:
  Transformer(TransformerConfig config, EncoderMode mode, std::uint64_t seed)
      : config_(std::move(config)), mode_(mode) {
    config_.validate();
    build(seed);
    build_position_table();
  }

  Transformer(const Transformer&) = delete;
  Transformer& operator=(const Transformer&) = delete;
  Transformer(Transformer&&) = default;
  Transformer& operator=(Transformer&&) = default;

  /// Overwrites every parameter value with `other`'s (same config and mode).
  void copy_values_from(const Transformer& other) {
    if (!(other.config_ == config_) || other.mode_ != mode_) {
      throw InvariantError("copy_values_from: architecture mismatch");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto dst = params_.tensors()[i].mutable_values();
      auto src = other.params_.tensors()[i].values();
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }

  const TransformerConfig& config() const { return config_; }
  EncoderMode mode() const { return mode_; }
  ParameterStore<T>& parameters() { return params_; }
  const ParameterStore<T>& parameters() const { return params_; }

  /// Test hook: replaces every cross-attention output with zeros.
  bool ablate_cross_attention = false;

  /// sym*sqrt(d) + PE(position) [+ type], then dropout. [batch*src_len, d]
  Tensor<T> embed_source(const Batch& b, bool training, Rng* rng) const {
    check_positions(b.src_positions);
    auto x = scale(embedding(src_embed_, b.src_ids), embed_scale());
    x = add(x, position_rows(b.src_positions));
    if (mode_ == EncoderMode::kFeatureInvariant) {
      std::vector<int> types(b.src_types.begin(), b.src_types.end());
      x = add(x, embedding(type_embed_, types));
    }
    return dropout(x, config_.dropout_rate, training, rng);
  }

  /// Encoder output [batch*src_len, d_model] (after the final layer norm).
  Tensor<T> encode(const Batch& b, bool training = false, Rng* rng = nullptr) const {
    auto x = embed_source(b, training, rng);
    const std::size_t heads = static_cast<std::size_t>(config_.num_heads);
    for (const auto& layer : encoder_) {
      auto h = apply(layer.self_attn_norm, x);
      auto a = multi_head_attention(layer.self_attn, h, h, h, b.size, heads, b.src_mask, false,
                                    config_.dropout_rate, training, rng);
      x = add(x, dropout(a, config_.dropout_rate, training, rng));
      auto f = feed_forward(layer.ff, apply(layer.ff_norm, x));
      x = add(x, dropout(f, config_.dropout_rate, training, rng));
    }
    return apply(encoder_norm_, x);
  }

  /// Teacher-forced logits [batch*tgt_len, tgt_vocab] for `b.tgt_in`.
  Tensor<T> decode(const Batch& b, const Tensor<T>& memory, bool training = false,
                   Rng* rng = nullptr) const {
    std::vector<int> positions(b.size * b.tgt_len);
    for (std::size_t i = 0; i < positions.size(); ++i)
      positions[i] = static_cast<int>(i % b.tgt_len) + 1;
    check_positions(positions);
    auto x = scale(embedding(tgt_embed_, b.tgt_in), embed_scale());
    x = add(x, position_rows(positions));
    x = dropout(x, config_.dropout_rate, training, rng);
    const std::size_t heads = static_cast<std::size_t>(config_.num_heads);
    for (const auto& layer : decoder_) {
      auto h = apply(layer.self_attn_norm, x);
      auto a = multi_head_attention(layer.self_attn, h, h, h, b.size, heads, {}, true,
                                    config_.dropout_rate, training, rng);
      x = add(x, dropout(a, config_.dropout_rate, training, rng));
      h = apply(layer.cross_attn_norm, x);
      auto c = multi_head_attention(layer.cross_attn, h, memory, memory, b.size, heads,
                                    b.src_mask, false, config_.dropout_rate, training, rng);
      if (ablate_cross_attention) c = Tensor<T>::zeros(c.shape());
      x = add(x, dropout(c, config_.dropout_rate, training, rng));
      auto f = feed_forward(layer.ff, apply(layer.ff_norm, x));
      x = add(x, dropout(f, config_.dropout_rate, training, rng));
    }
    return apply(output_, apply(decoder_norm_, x));
  }

  /// Label-smoothed token-level cross-entropy of a training batch.
  Tensor<T> loss(const Batch& b, double label_smoothing, bool training = true,
                 Rng* rng = nullptr) const {
    auto memory = encode(b, training, rng);
    auto logits = decode(b, memory, training, rng);
    return cross_entropy_label_smoothed(logits, b.tgt_out, label_smoothing, kPad);
  }

  /// Cached state for left-to-right inference.
  struct DecoderState {
    std::size_t batch = 0;
    std::size_t steps = 0;
    std::vector<std::uint8_t> src_mask;
    std::vector<Tensor<T>> cross_k, cross_v;    // per layer, [batch*src_len, d]
    std::vector<std::vector<T>> self_k, self_v;  // per layer, [batch][steps][d]
  };

  DecoderState start_decoding(const Batch& b, const Tensor<T>& memory) const {
    NoGradGuard no_grad;
    DecoderState s;
    s.batch = b.size;
    s.src_mask = b.src_mask;
    for (const auto& layer : decoder_) {
      s.cross_k.push_back(apply(layer.cross_attn.k, memory));
      s.cross_v.push_back(apply(layer.cross_attn.v, memory));
      s.self_k.emplace_back();
      s.self_v.emplace_back();
    }
    return s;
  }

  /// Feeds one token per row and returns next-symbol logits [batch, tgt_vocab].
  /// Matches `decode` on the same prefix up to summation order.
  Tensor<T> decode_step(DecoderState& s, std::span<const int> tokens) const {
    NoGradGuard no_grad;
    if (tokens.size() != s.batch) throw DimensionError("decode_step: one token per row expected");
    const std::vector<int> positions(s.batch, static_cast<int>(s.steps) + 1);
    check_positions(positions);
    const std::size_t d = static_cast<std::size_t>(config_.d_model);
    const std::size_t heads = static_cast<std::size_t>(config_.num_heads);
    auto x = scale(embedding(tgt_embed_, tokens), embed_scale());
    x = add(x, position_rows(positions));
    for (std::size_t l = 0; l < decoder_.size(); ++l) {
      const auto& layer = decoder_[l];
      auto h = apply(layer.self_attn_norm, x);
      auto q = apply(layer.self_attn.q, h);
      auto k = append_rows(s.self_k[l], apply(layer.self_attn.k, h), s.batch, s.steps, d);
      auto v = append_rows(s.self_v[l], apply(layer.self_attn.v, h), s.batch, s.steps, d);
      auto ctx = attend_projected(q, k, v, s.batch, heads, {}, false, 0.0, false, nullptr);
      x = add(x, apply(layer.self_attn.o, ctx));
      h = apply(layer.cross_attn_norm, x);
      ctx = attend_projected(apply(layer.cross_attn.q, h), s.cross_k[l], s.cross_v[l], s.batch,
                             heads, s.src_mask, false, 0.0, false, nullptr);
      auto c = apply(layer.cross_attn.o, ctx);
      if (ablate_cross_attention) c = Tensor<T>::zeros(c.shape());
      x = add(x, c);
      x = add(x, feed_forward(layer.ff, apply(layer.ff_norm, x)));
    }
    ++s.steps;
    return apply(output_, apply(decoder_norm_, x));
  }

 private:
  T embed_scale() const { return std::sqrt(static_cast<T>(config_.d_model)); }

  void check_positions(std::span<const int> positions) const {
    for (int p : positions) {
      if (p < 0 || p >= config_.max_positions) {
        throw InvariantError("position " + std::to_string(p) + " exceeds max_positions " +
                             std::to_string(config_.max_positions));
      }
    }
  }

  Tensor<T> position_rows(std::span<const int> positions) const {
    const std::size_t d = static_cast<std::size_t>(config_.d_model);
    std::vector<T> rows(positions.size() * d);
    for (std::size_t i = 0; i < positions.size(); ++i) {
      std::copy_n(pe_table_.data() + static_cast<std::size_t>(positions[i]) * d, d,
                  rows.data() + i * d);
    }
    return Tensor<T>({positions.size(), d}, std::move(rows));
  }

  // Appends one new row per batch entry to a [batch][steps][d] cache and
  // returns the grown cache as a [batch*(steps+1), d] tensor.
  static Tensor<T> append_rows(std::vector<T>& cache, const Tensor<T>& fresh, std::size_t batch,
                               std::size_t steps, std::size_t d) {
    std::vector<T> grown(batch * (steps + 1) * d);
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy_n(cache.data() + b * steps * d, steps * d, grown.data() + b * (steps + 1) * d);
      std::copy_n(fresh.values().data() + b * d, d, grown.data() + (b * (steps + 1) + steps) * d);
    }
    cache = grown;
    return Tensor<T>({batch * (steps + 1), d}, std::move(grown));
  }

  void build_position_table() {
    const std::size_t d = static_cast<std::size_t>(config_.d_model);
    pe_table_.resize(static_cast<std::size_t>(config_.max_positions) * d);
    for (int p = 0; p < config_.max_positions; ++p) {
      const auto pe = sinusoidal_pe(p, config_.d_model);
      for (std::size_t j = 0; j < d; ++j)
        pe_table_[static_cast<std::size_t>(p) * d + j] = static_cast<T>(pe[j]);
    }
  }

  // Xavier/Glorot uniform for matrices, zeros for biases, ones for gains.
  Tensor<T> xavier(Rng& rng, std::size_t rows, std::size_t cols) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::vector<T> w(rows * cols);
    for (auto& x : w) x = static_cast<T>((2.0 * rng.uniform() - 1.0) * a);
    return Tensor<T>({rows, cols}, std::move(w));
  }

  LinearParams<T> make_linear(Rng& rng, const std::string& name, std::size_t in, std::size_t out) {
    LinearParams<T> p;
    p.weight = params_.add(name + ".weight", xavier(rng, in, out));
    p.bias = params_.add(name + ".bias", Tensor<T>::zeros({out}));
    return p;
  }

  NormParams<T> make_norm(const std::string& name, std::size_t d) {
    NormParams<T> p;
    p.gain = params_.add(name + ".gain", Tensor<T>::full({d}, T(1)));
    p.bias = params_.add(name + ".bias", Tensor<T>::zeros({d}));
    return p;
  }

  AttentionParams<T> make_attention(Rng& rng, const std::string& name, std::size_t d) {
    AttentionParams<T> p;
    p.q = make_linear(rng, name + ".q", d, d);
    p.k = make_linear(rng, name + ".k", d, d);
    p.v = make_linear(rng, name + ".v", d, d);
    p.o = make_linear(rng, name + ".o", d, d);
    return p;
  }

  FeedForwardParams<T> make_ff(Rng& rng, const std::string& name, std::size_t d, std::size_t dff) {
    return {make_linear(rng, name + ".in", d, dff), make_linear(rng, name + ".out", dff, d)};
  }

  void build(std::uint64_t seed) {
    Rng rng(seed);
    const auto d = static_cast<std::size_t>(config_.d_model);
    const auto dff = static_cast<std::size_t>(config_.d_ff);
    src_embed_ = params_.add("src_embed.weight",
                             xavier(rng, static_cast<std::size_t>(config_.src_vocab_size), d));
    tgt_embed_ = params_.add("tgt_embed.weight",
                             xavier(rng, static_cast<std::size_t>(config_.tgt_vocab_size), d));
    if (mode_ == EncoderMode::kFeatureInvariant) {
      type_embed_ = params_.add("type_embed.weight", xavier(rng, 2, d));
    }
    for (int l = 0; l < config_.num_layers; ++l) {
      const std::string p = "encoder.layer" + std::to_string(l);
      EncoderLayerParams<T> layer;
      layer.self_attn_norm = make_norm(p + ".self_attn_norm", d);
      layer.self_attn = make_attention(rng, p + ".self_attn", d);
      layer.ff_norm = make_norm(p + ".ff_norm", d);
      layer.ff = make_ff(rng, p + ".ff", d, dff);
      encoder_.push_back(std::move(layer));
    }
    encoder_norm_ = make_norm("encoder.final_norm", d);
    for (int l = 0; l < config_.num_layers; ++l) {
      const std::string p = "decoder.layer" + std::to_string(l);
      DecoderLayerParams<T> layer;
      layer.self_attn_norm = make_norm(p + ".self_attn_norm", d);
      layer.self_attn = make_attention(rng, p + ".self_attn", d);
      layer.cross_attn_norm = make_norm(p + ".cross_attn_norm", d);
      layer.cross_attn = make_attention(rng, p + ".cross_attn", d);
      layer.ff_norm = make_norm(p + ".ff_norm", d);
      layer.ff = make_ff(rng, p + ".ff", d, dff);
      decoder_.push_back(std::move(layer));
    }
    decoder_norm_ = make_norm("decoder.final_norm", d);
    output_ = make_linear(rng, "output", d, static_cast<std::size_t>(config_.tgt_vocab_size));
  }

  TransformerConfig config_;
  EncoderMode mode_;
  ParameterStore<T> params_;
  Tensor<T> src_embed_, tgt_embed_, type_embed_;
  std::vector<EncoderLayerParams<T>> encoder_;
  std::vector<DecoderLayerParams<T>> decoder_;
  NormParams<T> encoder_norm_, decoder_norm_;
  LinearParams<T> output_;
  std::vector<T> pe_table_;
};

}  // namespace chartrans
