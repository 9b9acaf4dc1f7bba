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
#include <cstdio>
#include <functional>
#include <future>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "chartrans/adam.hpp"
#include "chartrans/checkpoint.hpp"
#include "chartrans/data.hpp"
#include "chartrans/decode.hpp"
#include "chartrans/metrics.hpp"
#include "chartrans/train_config.hpp"
#include "chartrans/transformer.hpp"

namespace chartrans {

/// Training and development data with the vocabularies built from training.
struct TrainData {
  std::span<const Example> train;
  std::span<const Example> dev;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  std::string task = "inflection";
};

inline TrainData make_train_data(std::span<const Example> train, std::span<const Example> dev,
                                 std::string task = "inflection") {
  auto [src, tgt] = build_vocab(train);
  return {train, dev, std::move(src), std::move(tgt), std::move(task)};
}

/// Model sized for the data, with dropout and encoder mode from the recipe.
/// Initialization is seeded from the recipe seed.
template <typename T = real>
Transformer<T> make_model(TransformerConfig arch, const TrainConfig& cfg, const TrainData& data) {
  arch.src_vocab_size = static_cast<int>(data.src_vocab.size());
  arch.tgt_vocab_size = static_cast<int>(data.tgt_vocab.size());
  arch.dropout_rate = cfg.dropout_rate;
  return Transformer<T>(arch, cfg.encoder_mode, mix_seed(cfg.seed, 1));
}

template <typename T>
double dev_accuracy(const Transformer<T>& model, const TrainData& data, std::size_t batch_size) {
  if (data.dev.empty()) return 0.0;
  const auto preds = predict(model, data.dev, data.src_vocab, data.tgt_vocab, batch_size);
  std::size_t correct = 0;
  for (const auto& p : preds) correct += p.correct();
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

template <typename T>
struct TrainHooks {
  /// Called with every periodic checkpoint (e.g. to write it to disk).
  std::function<void(const Checkpoint<T>&)> on_checkpoint;
  /// Called after every dev evaluation.
  std::function<void(const EvalRecord&)> on_eval;
  /// Ends training after the current evaluation when it returns true.
  std::function<bool(const EvalRecord&)> should_stop;
};

template <typename T>
struct TrainResult {
  Checkpoint<T> best;   // highest dev accuracy, earliest on ties
  Checkpoint<T> last;   // state after the final update
  std::vector<EvalRecord> history;
  long checkpoints = 0;  // periodic checkpoints produced by this call
};

/// Runs `cfg.total_steps` Adam updates on `model`.
///
/// Batches cycle through reshuffled epochs; the lr follows lr_schedule. Every
/// `eval_every` updates the dev set is greedily decoded, a full checkpoint
/// (parameters, optimizer moments, rng state, history) is produced, and the
/// best one by dev accuracy is retained. Passing `resume` continues a run from
/// one of its checkpoints and reproduces the uninterrupted trajectory;
/// `resume_best` is the best checkpoint of the interrupted segment, if known.
template <typename T>
TrainResult<T> train(Transformer<T>& model, const TrainData& data, const TrainConfig& cfg,
                     const TrainHooks<T>& hooks = {}, const Checkpoint<T>* resume = nullptr,
                     const Checkpoint<T>* resume_best = nullptr) {
  cfg.validate();
  if (model.config().dropout_rate != cfg.dropout_rate || model.mode() != cfg.encoder_mode) {
    throw InvariantError("train: model dropout/encoder mode differ from the train config");
  }
  EncodeOptions opt;
  opt.mode = cfg.encoder_mode;
  const auto encoded = encode_examples(data.train, data.src_vocab, data.tgt_vocab, opt);
  BatchSchedule schedule(encoded, static_cast<std::size_t>(cfg.batch_size), cfg.seed, true);

  Rng rng(mix_seed(cfg.seed, 2));
  AdamState<T> adam(0.9, cfg.adam_beta2, 1e-9);
  long step = 0;
  std::vector<EvalRecord> history;
  if (resume) {
    restore_parameters(model, *resume);
    adam = resume->adam;
    rng.set_state(resume->rng_state);
    step = resume->step;
    history = resume->history;
  }

  auto snapshot = [&] {
    auto ck = capture(model, cfg, data.src_vocab, data.tgt_vocab, step, &adam, &rng, history);
    ck.task = data.task;
    return ck;
  };

  TrainResult<T> result;
  std::optional<Checkpoint<T>> best;
  double best_acc = -1.0;
  for (const auto& r : history) {
    if (r.dev_acc > best_acc) best_acc = r.dev_acc;
  }
  if (resume && !history.empty()) {
    // Without the earlier best checkpoint, the resume point stands in for it.
    best = resume_best ? *resume_best : *resume;
  }

  auto& params = model.parameters();
  double loss_sum = 0.0;
  long loss_count = 0;
  while (step < cfg.total_steps) {
    const auto batch = schedule.at(static_cast<std::uint64_t>(step));
    params.zero_grad();
    const double lr = lr_schedule(step + 1, cfg.peak_lr, cfg.warmup_steps);
    auto loss = model.loss(batch, cfg.label_smoothing, true, &rng);
    const double value = static_cast<double>(loss.item());
    if (!std::isfinite(value)) {
      throw NonFiniteLossError(step + 1, lr, static_cast<std::size_t>(step) % schedule.per_epoch(),
                               value);
    }
    loss.backward();
    adam_step(params.tensors(), adam, lr);
    ++step;
    loss_sum += value;
    ++loss_count;

    if (step % cfg.eval_every == 0) {
      EvalRecord rec;
      rec.step = step;
      rec.dev_acc = dev_accuracy(model, data, static_cast<std::size_t>(cfg.eval_batch_size));
      rec.train_loss = loss_sum / static_cast<double>(loss_count);
      loss_sum = 0.0;
      loss_count = 0;
      history.push_back(rec);
      if (hooks.on_eval) hooks.on_eval(rec);
      auto ck = snapshot();
      ++result.checkpoints;
      if (hooks.on_checkpoint) hooks.on_checkpoint(ck);
      if (rec.dev_acc > best_acc) {
        best_acc = rec.dev_acc;
        best = std::move(ck);
      }
      if (hooks.should_stop && hooks.should_stop(rec)) break;
    }
  }
  result.last = snapshot();
  result.best = best ? std::move(*best) : result.last;
  result.best.history = history;
  result.history = std::move(history);
  return result;
}

/// Index of the best record: maximal dev accuracy, earliest step on ties.
inline std::optional<std::size_t> select_best(std::span<const EvalRecord> history) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (!best || history[i].dev_acc > history[*best].dev_acc) best = i;
  }
  return best;
}

struct SweepRow {
  EncoderMode mode = EncoderMode::kFeatureInvariant;
  long batch_size = 0;
  double best_dev_acc = 0.0;
  long best_step = 0;
  double final_dev_acc = 0.0;
  std::vector<EvalRecord> curve;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;  // trend violations; never fatal
};

/// One training run per (mode, batch size) with everything else fixed,
/// including the update budget and the seed. Flags any mode whose best dev
/// accuracy decreases as the batch grows.
template <typename T>
SweepReport sweep_batch_size(const TransformerConfig& arch, const TrainData& data,
                             const TrainConfig& base, std::span<const long> sizes,
                             std::span<const EncoderMode> modes, bool parallel = false,
                             const std::function<void(const SweepRow&)>& on_row = {}) {
  if (sizes.empty()) throw InvariantError("sweep: no batch sizes");
  if (modes.empty()) throw InvariantError("sweep: no encoder modes");
  auto run_one = [&](EncoderMode mode, long size) {
    TrainConfig cfg = base;
    cfg.batch_size = size;
    cfg.encoder_mode = mode;
    auto model = make_model<T>(arch, cfg, data);
    auto res = train(model, data, cfg);
    SweepRow row;
    row.mode = mode;
    row.batch_size = size;
    row.curve = res.history;
    if (auto b = select_best(res.history)) {
      row.best_dev_acc = res.history[*b].dev_acc;
      row.best_step = res.history[*b].step;
      row.final_dev_acc = res.history.back().dev_acc;
    }
    return row;
  };

  SweepReport report;
  if (parallel) {
    std::vector<std::future<SweepRow>> jobs;
    for (auto mode : modes)
      for (auto size : sizes) jobs.push_back(std::async(std::launch::async, run_one, mode, size));
    for (auto& j : jobs) {
      report.rows.push_back(j.get());
      if (on_row) on_row(report.rows.back());
    }
  } else {
    for (auto mode : modes)
      for (auto size : sizes) {
        report.rows.push_back(run_one(mode, size));
        if (on_row) on_row(report.rows.back());
      }
  }
  for (std::size_t m = 0; m < modes.size(); ++m) {
    for (std::size_t i = 1; i < sizes.size(); ++i) {
      const auto& prev = report.rows[m * sizes.size() + i - 1];
      const auto& cur = report.rows[m * sizes.size() + i];
      if (cur.batch_size > prev.batch_size && cur.best_dev_acc < prev.best_dev_acc) {
        char buf[200];
        std::snprintf(buf, sizeof buf,
                      "non-monotone (%s): batch %ld dev acc %.4f < batch %ld dev acc %.4f",
                      to_string(modes[m]).c_str(), cur.batch_size, cur.best_dev_acc,
                      prev.batch_size, prev.best_dev_acc);
        report.warnings.emplace_back(buf);
      }
    }
  }
  return report;
}

/// Summary table, then one curve line per (run, checkpoint).
inline void write_sweep_report(std::ostream& out, const SweepReport& report) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "%-18s %10s %12s %10s %12s\n", "mode", "batch", "best_acc",
                "best_step", "final_acc");
  out << buf;
  for (const auto& r : report.rows) {
    std::snprintf(buf, sizeof buf, "%-18s %10ld %12.4f %10ld %12.4f\n", to_string(r.mode).c_str(),
                  r.batch_size, r.best_dev_acc, r.best_step, r.final_dev_acc);
    out << buf;
  }
  for (const auto& w : report.warnings) out << "WARNING " << w << '\n';
  out << "\n# curve: mode<TAB>batch<TAB>step<TAB>dev_acc\n";
  for (const auto& r : report.rows) {
    for (const auto& c : r.curve) {
      std::snprintf(buf, sizeof buf, "%s\t%ld\t%ld\t%.6f\n", to_string(r.mode).c_str(),
                    r.batch_size, c.step, c.dev_acc);
      out << buf;
    }
  }
}

}  // namespace chartrans
