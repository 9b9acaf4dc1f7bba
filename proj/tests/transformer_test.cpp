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

#include <cmath>
#include <sstream>

#include "test_support.hpp"

namespace chartrans {
namespace {

using Model = Transformer<double>;

TransformerConfig small_config(int src_vocab, int tgt_vocab) {
  TransformerConfig c;
  c.num_layers = 2;
  c.num_heads = 2;
  c.d_model = 8;
  c.d_ff = 16;
  c.dropout_rate = 0.0;
  c.src_vocab_size = src_vocab;
  c.tgt_vocab_size = tgt_vocab;
  return c;
}

class TinyTask : public ::testing::Test {
 protected:
  void SetUp() override {
    std::istringstream in(
        "walk\twalked\tV;PST\n"
        "sing\tsings\tV;PRS;3;SG\n"
        "go\tgo\tV;NFIN\n");
    examples = parse_inflection_tsv(in, "tiny");
    std::tie(src, tgt) = build_vocab(examples);
  }
  Model model(EncoderMode mode, std::uint64_t seed = 1) const {
    return Model(small_config(static_cast<int>(src.size()), static_cast<int>(tgt.size())), mode,
                 seed);
  }
  Batch batch(EncoderMode mode, std::vector<std::size_t> rows) const {
    EncodeOptions opt;
    opt.mode = mode;
    encoded = encode_examples(examples, src, tgt, opt);
    return make_batch(encoded, rows);
  }
  std::vector<Example> examples;
  Vocabulary src, tgt;
  mutable std::vector<EncodedExample> encoded;
};

TEST(ParameterCount, DefaultLayerStackIsExact) {
  TransformerConfig c;
  c.src_vocab_size = 100;
  c.tgt_vocab_size = 60;
  Model m(c, EncoderMode::kFeatureInvariant, 1);
  const std::size_t d = 256, f = 1024;
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t ff = (d * f + f) + (f * d + d);
  const std::size_t enc = attn + ff + 2 * 2 * d;
  const std::size_t dec = 2 * attn + ff + 3 * 2 * d;
  EXPECT_EQ(4 * (enc + dec), 7372800u);
  EXPECT_EQ(count_parameters(m.parameters(), "layer-stack"), 7372800u);
  EXPECT_EQ(count_parameters(m.parameters(), "embeddings"), 100 * d + 60 * d + 2 * d);
  EXPECT_EQ(count_parameters(m.parameters(), "output"), d * 60 + 60);
  EXPECT_EQ(count_parameters(m.parameters(), "final-norms"), 2 * 2 * d);
  EXPECT_EQ(count_parameters(m.parameters(), "total"),
            7372800u + 100 * d + 60 * d + 2 * d + d * 60 + 60 + 4 * d);
  EXPECT_THROW(count_parameters(m.parameters(), "bogus"), std::invalid_argument);
}

TEST(ParameterCount, VanillaHasNoTypeEmbedding) {
  auto c = small_config(10, 10);
  Model fi(c, EncoderMode::kFeatureInvariant, 1);
  Model va(c, EncoderMode::kVanilla, 1);
  EXPECT_TRUE(fi.parameters().contains("type_embed.weight"));
  EXPECT_FALSE(va.parameters().contains("type_embed.weight"));
  EXPECT_EQ(count_parameters(fi.parameters(), "layer-stack"),
            count_parameters(va.parameters(), "layer-stack"));
}

TEST(Config, RejectsInvalidShapes) {
  auto c = small_config(10, 10);
  c.num_heads = 3;
  EXPECT_THROW(Model(c, EncoderMode::kVanilla, 1), InvariantError);
  c = small_config(0, 10);
  EXPECT_THROW(Model(c, EncoderMode::kVanilla, 1), InvariantError);
}

TEST(PositionalEncoding, MatchesSinusoidFormula) {
  auto p0 = sinusoidal_pe(0, 4);
  EXPECT_EQ(p0, (std::vector<double>{0.0, 1.0, 0.0, 1.0}));
  auto p3 = sinusoidal_pe(3, 4);
  EXPECT_DOUBLE_EQ(p3[0], std::sin(3.0));
  EXPECT_DOUBLE_EQ(p3[1], std::cos(3.0));
  EXPECT_DOUBLE_EQ(p3[2], std::sin(3.0 / 100.0));
  EXPECT_DOUBLE_EQ(p3[3], std::cos(3.0 / 100.0));
}

TEST(Init, SeedDeterminesEveryParameter) {
  auto c = small_config(12, 9);
  Model a(c, EncoderMode::kFeatureInvariant, 5), b(c, EncoderMode::kFeatureInvariant, 5);
  Model other(c, EncoderMode::kFeatureInvariant, 6);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.parameters().size(); ++i) {
    EXPECT_EQ(a.parameters().tensors()[i].vec(), b.parameters().tensors()[i].vec());
    any_diff |= a.parameters().tensors()[i].vec() != other.parameters().tensors()[i].vec();
  }
  EXPECT_TRUE(any_diff);
  // Norm gains start at 1 and biases at 0.
  EXPECT_EQ(a.parameters().get("encoder.layer0.ff_norm.gain").vec(), std::vector<double>(8, 1.0));
  EXPECT_EQ(a.parameters().get("output.bias").vec(), std::vector<double>(9, 0.0));
}

TEST_F(TinyTask, DecoderIsCausal) {
  auto m = model(EncoderMode::kFeatureInvariant);
  auto b = batch(EncoderMode::kFeatureInvariant, {0});
  auto memory = m.encode(b);
  auto logits = m.decode(b, memory);
  auto altered = b;
  altered.tgt_in[4] = tgt.lookup("s", false);  // change input at position 4
  auto logits2 = m.decode(altered, memory);
  const std::size_t v = tgt.size();
  for (std::size_t t = 0; t < b.tgt_len; ++t) {
    double diff = 0.0;
    for (std::size_t k = 0; k < v; ++k)
      diff = std::max(diff, std::abs(logits[t * v + k] - logits2[t * v + k]));
    if (t < 4) {
      EXPECT_EQ(diff, 0.0) << "position " << t;
    } else {
      EXPECT_GT(diff, 0.0) << "position " << t;
    }
  }
}

TEST_F(TinyTask, SourcePaddingDoesNotLeak) {
  for (auto mode : {EncoderMode::kFeatureInvariant, EncoderMode::kVanilla}) {
    auto m = model(mode);
    auto alone = batch(mode, {2});       // "go", shortest source
    auto padded = batch(mode, {2, 1});   // padded to "sing" + 4 features
    auto e1 = m.encode(alone);
    auto e2 = m.encode(padded);
    const std::size_t d = 8;
    for (std::size_t j = 0; j < alone.src_len; ++j)
      for (std::size_t k = 0; k < d; ++k)
        EXPECT_NEAR(e1[j * d + k], e2[j * d + k], 1e-10);
    auto l1 = m.decode(alone, e1);
    auto l2 = m.decode(padded, e2);
    const std::size_t v = tgt.size();
    for (std::size_t t = 0; t < alone.tgt_len; ++t)
      for (std::size_t k = 0; k < v; ++k) EXPECT_NEAR(l1[t * v + k], l2[t * v + k], 1e-10);
  }
}

TEST_F(TinyTask, FeatureOrderDoesNotMatterInInvariantMode) {
  auto m = model(EncoderMode::kFeatureInvariant);
  auto b = batch(EncoderMode::kFeatureInvariant, {1});
  auto logits = m.decode(b, m.encode(b));
  auto shuffled = examples;
  shuffled[1].features = {"SG", "3", "V", "PRS"};
  auto enc = encode_examples(shuffled, src, tgt, {});
  std::vector<std::size_t> rows = {1};
  auto b2 = make_batch(enc, rows);
  auto logits2 = m.decode(b2, m.encode(b2));
  for (std::size_t i = 0; i < logits.numel(); ++i) EXPECT_NEAR(logits[i], logits2[i], 1e-12);

  // The same permutation changes a vanilla model's output.
  auto v = model(EncoderMode::kVanilla);
  EncodeOptions vopt;
  vopt.mode = EncoderMode::kVanilla;
  auto ve1 = encode_examples(examples, src, tgt, vopt);
  auto ve2 = encode_examples(shuffled, src, tgt, vopt);
  auto vb1 = make_batch(ve1, rows), vb2 = make_batch(ve2, rows);
  auto vl1 = v.decode(vb1, v.encode(vb1)), vl2 = v.decode(vb2, v.encode(vb2));
  double diff = 0.0;
  for (std::size_t i = 0; i < vl1.numel(); ++i) diff = std::max(diff, std::abs(vl1[i] - vl2[i]));
  EXPECT_GT(diff, 1e-6);
}

TEST_F(TinyTask, IncrementalDecodingMatchesTeacherForcing) {
  auto m = model(EncoderMode::kFeatureInvariant);
  auto b = batch(EncoderMode::kFeatureInvariant, {0, 1, 2});
  auto memory = m.encode(b);
  auto full = m.decode(b, memory);
  auto state = m.start_decoding(b, memory);
  const std::size_t v = tgt.size();
  for (std::size_t t = 0; t < b.tgt_len; ++t) {
    std::vector<int> tokens(b.size);
    for (std::size_t r = 0; r < b.size; ++r) tokens[r] = b.tgt_in[r * b.tgt_len + t];
    auto step = m.decode_step(state, tokens);
    for (std::size_t r = 0; r < b.size; ++r)
      for (std::size_t k = 0; k < v; ++k)
        EXPECT_NEAR(step[r * v + k], full[(r * b.tgt_len + t) * v + k], 1e-10);
  }
}

TEST_F(TinyTask, CrossAttentionAblationRemovesSourceDependence) {
  auto m = model(EncoderMode::kFeatureInvariant);
  m.ablate_cross_attention = true;
  auto b0 = batch(EncoderMode::kFeatureInvariant, {0});
  auto b1 = b0;
  for (std::size_t j = 0; j < b1.src_len; ++j)
    if (b1.src_types[j] == static_cast<std::uint8_t>(TokenType::kCharacter))
      b1.src_ids[j] = src.lookup("g", false);
  auto l0 = m.decode(b0, m.encode(b0));
  auto l1 = m.decode(b1, m.encode(b1));
  EXPECT_EQ(l0.vec(), l1.vec());
  m.ablate_cross_attention = false;
  EXPECT_NE(m.decode(b0, m.encode(b0)).vec(), m.decode(b1, m.encode(b1)).vec());
}

TEST_F(TinyTask, LossGradientsMatchFiniteDifferences) {
  auto m = model(EncoderMode::kFeatureInvariant);
  auto b = batch(EncoderMode::kFeatureInvariant, {0, 2});
  auto params = m.parameters().tensors();
  std::vector<Tensor<double>> inputs(params.begin(), params.end());
  auto r = testing::check_gradients([&] { return m.loss(b, 0.1, false); }, inputs);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  EXPECT_GT(r.checked, 1000u);
}

TEST_F(TinyTask, DropoutOnlyActsInTraining) {
  auto c = small_config(static_cast<int>(src.size()), static_cast<int>(tgt.size()));
  c.dropout_rate = 0.3;
  Model m(c, EncoderMode::kFeatureInvariant, 1);
  auto b = batch(EncoderMode::kFeatureInvariant, {0, 1});
  Rng r1(1), r2(2);
  EXPECT_EQ(m.loss(b, 0.1, false).item(), m.loss(b, 0.1, false).item());
  EXPECT_NE(m.loss(b, 0.1, true, &r1).item(), m.loss(b, 0.1, true, &r2).item());
}

TEST_F(TinyTask, PositionsBeyondTableAreRejected) {
  auto c = small_config(static_cast<int>(src.size()), static_cast<int>(tgt.size()));
  c.max_positions = 3;
  Model m(c, EncoderMode::kFeatureInvariant, 1);
  auto b = batch(EncoderMode::kFeatureInvariant, {0});
  EXPECT_THROW(m.encode(b), InvariantError);
}

TEST_F(TinyTask, CopyValuesRequiresSameArchitecture) {
  auto a = model(EncoderMode::kFeatureInvariant, 1);
  auto b = model(EncoderMode::kFeatureInvariant, 2);
  b.copy_values_from(a);
  for (std::size_t i = 0; i < a.parameters().size(); ++i)
    EXPECT_EQ(a.parameters().tensors()[i].vec(), b.parameters().tensors()[i].vec());
  auto v = model(EncoderMode::kVanilla, 1);
  EXPECT_THROW(v.copy_values_from(a), InvariantError);
}

}  // namespace
}  // namespace chartrans
