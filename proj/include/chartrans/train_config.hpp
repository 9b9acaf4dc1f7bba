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
#include <cmath>
#include <cstdint>
#include <string>

#include "chartrans/errors.hpp"
#include "chartrans/featenc.hpp"

namespace chartrans {

/// Optimization recipe. Defaults: Adam at peak lr 1e-3 with 4k warmup
/// steps, 20k updates, dev evaluation every 400 updates (50 checkpoints),
/// batches of 400 examples, label smoothing 0.1, beta2 0.98.
struct TrainConfig {
  double peak_lr = 0.001;
  long warmup_steps = 4000;
  long total_steps = 20000;
  long eval_every = 400;
  long batch_size = 400;
  double label_smoothing = 0.1;
  double adam_beta2 = 0.98;
  double dropout_rate = 0.3;
  std::uint64_t seed = 1;
  EncoderMode encoder_mode = EncoderMode::kFeatureInvariant;
  long eval_batch_size = 256;

  long num_checkpoints() const { return total_steps / eval_every; }

  void validate() const {
    if (peak_lr <= 0.0) throw InvariantError("train config: peak_lr must be positive");
    if (warmup_steps < 1) throw InvariantError("train config: warmup_steps must be >= 1");
    if (total_steps < 0) throw InvariantError("train config: total_steps must be >= 0");
    if (eval_every < 1) throw InvariantError("train config: eval_every must be >= 1");
    if (total_steps % eval_every != 0) {
      throw InvariantError("train config: eval_every (" + std::to_string(eval_every) +
                           ") must divide total_steps (" + std::to_string(total_steps) + ")");
    }
    if (batch_size < 1 || eval_batch_size < 1) {
      throw InvariantError("train config: batch sizes must be >= 1");
    }
    if (!(label_smoothing >= 0.0 && label_smoothing < 1.0)) {
      throw InvariantError("train config: label_smoothing must lie in [0, 1)");
    }
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
      throw InvariantError("train config: adam_beta2 must lie in (0, 1)");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw InvariantError("train config: dropout_rate must lie in [0, 1)");
    }
  }

  bool operator==(const TrainConfig&) const = default;
};

/// Dev evaluation at one checkpoint.
struct EvalRecord {
  long step = 0;
  double dev_acc = 0.0;
  double train_loss = 0.0;  // mean loss over the updates since the previous record

  bool operator==(const EvalRecord&) const = default;
};

/// Linear warmup to `peak_lr` at `warmup_steps`, then decay with the inverse
/// square root of the step: peak * min(step/warmup, sqrt(warmup/step)).
inline double lr_schedule(long step, double peak_lr, long warmup_steps) {
  if (step < 1) throw InvariantError("lr_schedule: step must be >= 1");
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup_steps);
  return peak_lr * std::min(s / w, std::sqrt(w / s));
}

}  // namespace chartrans
