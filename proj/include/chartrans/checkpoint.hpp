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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartrans/adam.hpp"
#include "chartrans/errors.hpp"
#include "chartrans/train_config.hpp"
#include "chartrans/transformer.hpp"
#include "chartrans/vocab.hpp"

// Checkpoint container (little-endian throughout):
//
//   "CHTRCKPT"                      8-byte magic
//   u32 version                     currently 1
//   u32 scalar bytes                8 (float64) or 4 (float32)
//   u64 n, n bytes                  UTF-8 JSON metadata (configs, step,
//                                   rng state, history, vocabularies, Adam
//                                   hyperparameters and step)
//   u64 tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u64 dims[rank],
//               row-major IEEE-754 payload
//   u64 moment count                0 or the tensor count
//   per tensor: first-moment payload, then second-moment payload
//   "CHTREND!"                      8-byte trailer

namespace chartrans {

inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T = real>
struct Checkpoint {
  TransformerConfig model_config;
  TrainConfig train_config;
  std::string task = "inflection";
  long step = 0;
  std::vector<std::string> names;
  std::vector<Shape> shapes;
  std::vector<std::vector<T>> values;
  AdamState<T> adam;
  std::string rng_state;
  std::vector<EvalRecord> history;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
};

/// Snapshot of a model (and optionally optimizer/rng state).
template <typename T>
Checkpoint<T> capture(const Transformer<T>& model, const TrainConfig& train_config,
                      const Vocabulary& src_vocab, const Vocabulary& tgt_vocab, long step,
                      const AdamState<T>* adam = nullptr, const Rng* rng = nullptr,
                      std::vector<EvalRecord> history = {}) {
  Checkpoint<T> ck;
  ck.model_config = model.config();
  ck.train_config = train_config;
  ck.train_config.encoder_mode = model.mode();
  ck.step = step;
  const auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    ck.names.push_back(params.names()[i]);
    ck.shapes.push_back(params.tensors()[i].shape());
    ck.values.push_back(params.tensors()[i].vec());
  }
  if (adam) ck.adam = *adam;
  if (rng) ck.rng_state = rng->state();
  ck.history = std::move(history);
  ck.src_vocab = src_vocab;
  ck.tgt_vocab = tgt_vocab;
  return ck;
}

/// Writes checkpoint values into an existing model of the same architecture.
template <typename T>
void restore_parameters(Transformer<T>& model, const Checkpoint<T>& ck) {
  auto& params = model.parameters();
  if (params.size() != ck.names.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(ck.names.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.names()[i] != ck.names[i] || params.tensors()[i].shape() != ck.shapes[i]) {
      throw CheckpointError("checkpoint tensor " + ck.names[i] + " " + shape_str(ck.shapes[i]) +
                            " does not match model tensor " + params.names()[i] + " " +
                            shape_str(params.tensors()[i].shape()));
    }
    auto dst = params.tensors()[i].mutable_values();
    std::copy(ck.values[i].begin(), ck.values[i].end(), dst.begin());
  }
}

template <typename T>
Transformer<T> model_from_checkpoint(const Checkpoint<T>& ck) {
  Transformer<T> model(ck.model_config, ck.train_config.encoder_mode, 0);
  restore_parameters(model, ck);
  return model;
}

namespace detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void get_bytes(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw CheckpointError("corrupt checkpoint: unexpected end of file");
  }
}

inline std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  get_bytes(in, reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  get_bytes(in, reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

template <typename T>
void put_payload(std::ostream& out, const std::vector<T>& values) {
  for (T v : values) {
    if constexpr (sizeof(T) == 8) {
      put_u64(out, std::bit_cast<std::uint64_t>(v));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
  }
}

template <typename T>
std::vector<T> get_payload(std::istream& in, std::size_t n) {
  std::vector<T> values(n);
  for (auto& v : values) {
    if constexpr (sizeof(T) == 8) {
      v = std::bit_cast<T>(get_u64(in));
    } else {
      v = std::bit_cast<T>(get_u32(in));
    }
  }
  return values;
}

inline constexpr char kMagic[8] = {'C', 'H', 'T', 'R', 'C', 'K', 'P', 'T'};
inline constexpr char kTrailer[8] = {'C', 'H', 'T', 'R', 'E', 'N', 'D', '!'};

}  // namespace detail

inline nlohmann::json to_json(const TransformerConfig& c) {
  return {{"num_layers", c.num_layers},         {"num_heads", c.num_heads},
          {"d_model", c.d_model},               {"d_ff", c.d_ff},
          {"dropout_rate", c.dropout_rate},     {"max_positions", c.max_positions},
          {"src_vocab_size", c.src_vocab_size}, {"tgt_vocab_size", c.tgt_vocab_size}};
}

inline TransformerConfig transformer_config_from_json(const nlohmann::json& j) {
  TransformerConfig c;
  c.num_layers = j.at("num_layers");
  c.num_heads = j.at("num_heads");
  c.d_model = j.at("d_model");
  c.d_ff = j.at("d_ff");
  c.dropout_rate = j.at("dropout_rate");
  c.max_positions = j.at("max_positions");
  c.src_vocab_size = j.at("src_vocab_size");
  c.tgt_vocab_size = j.at("tgt_vocab_size");
  return c;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"peak_lr", c.peak_lr},
          {"warmup_steps", c.warmup_steps},
          {"total_steps", c.total_steps},
          {"eval_every", c.eval_every},
          {"batch_size", c.batch_size},
          {"label_smoothing", c.label_smoothing},
          {"adam_beta2", c.adam_beta2},
          {"dropout_rate", c.dropout_rate},
          {"seed", c.seed},
          {"encoder_mode", to_string(c.encoder_mode)},
          {"eval_batch_size", c.eval_batch_size}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.peak_lr = j.at("peak_lr");
  c.warmup_steps = j.at("warmup_steps");
  c.total_steps = j.at("total_steps");
  c.eval_every = j.at("eval_every");
  c.batch_size = j.at("batch_size");
  c.label_smoothing = j.at("label_smoothing");
  c.adam_beta2 = j.at("adam_beta2");
  c.dropout_rate = j.at("dropout_rate");
  c.seed = j.at("seed");
  c.encoder_mode = parse_encoder_mode(j.at("encoder_mode").get<std::string>());
  c.eval_batch_size = j.at("eval_batch_size");
  return c;
}

template <typename T>
void write_checkpoint(std::ostream& out, const Checkpoint<T>& ck) {
  nlohmann::json meta;
  meta["model"] = to_json(ck.model_config);
  meta["train"] = to_json(ck.train_config);
  meta["task"] = ck.task;
  meta["step"] = ck.step;
  meta["rng_state"] = ck.rng_state;
  meta["adam"] = {{"step", ck.adam.step},
                  {"beta1", ck.adam.beta1},
                  {"beta2", ck.adam.beta2},
                  {"epsilon", ck.adam.epsilon}};
  auto hist = nlohmann::json::array();
  for (const auto& r : ck.history) {
    hist.push_back({{"step", r.step}, {"dev_acc", r.dev_acc}, {"train_loss", r.train_loss}});
  }
  meta["history"] = hist;
  meta["src_vocab"] = ck.src_vocab.symbols();
  meta["tgt_vocab"] = ck.tgt_vocab.symbols();
  const std::string text = meta.dump();

  out.write(detail::kMagic, 8);
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, sizeof(T));
  detail::put_u64(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  detail::put_u64(out, ck.names.size());
  for (std::size_t i = 0; i < ck.names.size(); ++i) {
    detail::put_u32(out, static_cast<std::uint32_t>(ck.names[i].size()));
    out.write(ck.names[i].data(), static_cast<std::streamsize>(ck.names[i].size()));
    detail::put_u32(out, static_cast<std::uint32_t>(ck.shapes[i].size()));
    for (auto d : ck.shapes[i]) detail::put_u64(out, d);
    detail::put_payload(out, ck.values[i]);
  }
  const bool has_moments = !ck.adam.m.empty();
  detail::put_u64(out, has_moments ? ck.names.size() : 0);
  if (has_moments) {
    for (std::size_t i = 0; i < ck.names.size(); ++i) {
      detail::put_payload(out, ck.adam.m[i]);
      detail::put_payload(out, ck.adam.v[i]);
    }
  }
  out.write(detail::kTrailer, 8);
  if (!out) throw CheckpointError("failed to write checkpoint");
}

template <typename T>
Checkpoint<T> read_checkpoint(std::istream& in) {
  char magic[8];
  detail::get_bytes(in, magic, 8);
  if (std::memcmp(magic, detail::kMagic, 8) != 0) {
    throw CheckpointError("corrupt checkpoint: bad magic");
  }
  const auto version = detail::get_u32(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " is not supported (expected " + std::to_string(kCheckpointVersion) +
                          ")");
  }
  const auto scalar_bytes = detail::get_u32(in);
  if (scalar_bytes != sizeof(T)) {
    throw CheckpointError("checkpoint stores " + std::to_string(8 * scalar_bytes) +
                          "-bit values, this build uses " + std::to_string(8 * sizeof(T)));
  }
  const auto meta_len = detail::get_u64(in);
  if (meta_len > (1ULL << 32)) throw CheckpointError("corrupt checkpoint: metadata too large");
  std::string text(meta_len, '\0');
  detail::get_bytes(in, text.data(), meta_len);

  Checkpoint<T> ck;
  try {
    const auto meta = nlohmann::json::parse(text);
    ck.model_config = transformer_config_from_json(meta.at("model"));
    ck.train_config = train_config_from_json(meta.at("train"));
    ck.task = meta.at("task");
    ck.step = meta.at("step");
    ck.rng_state = meta.at("rng_state");
    const auto& adam = meta.at("adam");
    ck.adam.step = adam.at("step");
    ck.adam.beta1 = adam.at("beta1");
    ck.adam.beta2 = adam.at("beta2");
    ck.adam.epsilon = adam.at("epsilon");
    for (const auto& r : meta.at("history")) {
      ck.history.push_back({r.at("step"), r.at("dev_acc"), r.at("train_loss")});
    }
    ck.src_vocab = Vocabulary::from_symbols(meta.at("src_vocab"));
    ck.tgt_vocab = Vocabulary::from_symbols(meta.at("tgt_vocab"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
  }

  const auto count = detail::get_u64(in);
  if (count > 100000) throw CheckpointError("corrupt checkpoint: implausible tensor count");
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto name_len = detail::get_u32(in);
    if (name_len > 4096) throw CheckpointError("corrupt checkpoint: implausible name length");
    std::string name(name_len, '\0');
    detail::get_bytes(in, name.data(), name_len);
    const auto rank = detail::get_u32(in);
    if (rank > 8) throw CheckpointError("corrupt checkpoint: implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = detail::get_u64(in);
    const std::size_t n = shape_numel(shape);
    if (n > (1ULL << 31)) throw CheckpointError("corrupt checkpoint: implausible tensor size");
    ck.names.push_back(std::move(name));
    ck.shapes.push_back(shape);
    ck.values.push_back(detail::get_payload<T>(in, n));
  }
  const auto moments = detail::get_u64(in);
  if (moments != 0 && moments != count) {
    throw CheckpointError("corrupt checkpoint: optimizer state does not match tensors");
  }
  for (std::uint64_t i = 0; i < moments; ++i) {
    const std::size_t n = ck.values[i].size();
    ck.adam.m.push_back(detail::get_payload<T>(in, n));
    ck.adam.v.push_back(detail::get_payload<T>(in, n));
  }
  char trailer[8];
  detail::get_bytes(in, trailer, 8);
  if (std::memcmp(trailer, detail::kTrailer, 8) != 0) {
    throw CheckpointError("corrupt checkpoint: bad trailer");
  }
  return ck;
}

template <typename T>
void save_checkpoint(const Checkpoint<T>& ck, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write " + path);
  write_checkpoint(out, ck);
}

template <typename T = real>
Checkpoint<T> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read " + path);
  return read_checkpoint<T>(in);
}

}  // namespace chartrans
