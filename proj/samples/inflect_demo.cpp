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


// Trains a small feature-invariant model on generated inflection data and
// prints a few dev predictions.
//
//   inflect_demo [steps]

#include <cstdlib>
#include <iostream>

#include "chartrans/chartrans.hpp"

int main(int argc, char** argv) {
  using namespace chartrans;
  const long steps = argc > 1 ? std::atol(argv[1]) : 600;

  const auto splits = gen_synthetic_inflection(600, 8, default_rule_table(), 7);
  const auto data = make_train_data(splits.train, splits.dev);

  TransformerConfig arch;
  arch.num_layers = 1;
  arch.num_heads = 2;
  arch.d_model = 32;
  arch.d_ff = 64;

  TrainConfig cfg;
  cfg.total_steps = steps;
  cfg.eval_every = steps > 0 ? steps / 3 : 1;
  cfg.total_steps -= cfg.total_steps % cfg.eval_every;
  cfg.warmup_steps = 200;
  cfg.batch_size = 32;
  cfg.dropout_rate = 0.1;

  auto model = make_model<double>(arch, cfg, data);
  TrainHooks<double> hooks;
  hooks.on_eval = [](const EvalRecord& r) {
    std::cout << "step " << r.step << "  dev acc " << r.dev_acc << "  loss " << r.train_loss
              << '\n';
  };
  const auto result = train(model, data, cfg, hooks);
  const auto best = model_from_checkpoint(result.best);
  const auto preds =
      predict(best, std::span(splits.dev).first(8), data.src_vocab, data.tgt_vocab);
  for (const auto& p : preds) {
    std::cout << p.source << " -> " << join(p.predicted, "") << (p.correct() ? "" : "  (gold ")
              << (p.correct() ? "" : join(p.gold, "") + ")") << '\n';
  }
  write_metrics(std::cout, evaluate(preds));
  return 0;
}
