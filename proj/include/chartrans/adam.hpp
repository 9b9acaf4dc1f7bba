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
#include <vector>

#include "chartrans/errors.hpp"
#include "chartrans/tensor.hpp"

namespace chartrans {

template <typename T = real>
struct AdamState {
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-9;
  // One moment buffer per parameter, in parameter order.
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;

  AdamState() = default;
  AdamState(double b1, double b2, double eps) : beta1(b1), beta2(b2), epsilon(eps) {}
};

/// One bias-corrected Adam update, in place. Moment buffers are created on the
/// first call and must keep matching the parameter shapes afterwards.
template <typename T>
void adam_step(std::span<Tensor<T>> params, AdamState<T>& state, double lr) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw InvariantError("adam_step: parameter " + std::to_string(i) + " of shape " +
                           shape_str(params[i].shape()) + " has no gradient");
    }
  }
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), T(0));
      state.v.emplace_back(p.numel(), T(0));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw InvariantError("adam_step: optimizer state tracks " +
                         std::to_string(state.m.size()) + " parameters, got " +
                         std::to_string(params.size()));
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T step_size = static_cast<T>(lr);
  const T eps = static_cast<T>(state.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_values();
    auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != w.size() || v.size() != w.size()) {
      throw InvariantError("adam_step: moment shape mismatch for parameter " + std::to_string(i));
    }
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (T(1) - b1) * g[j];
      v[j] = b2 * v[j] + (T(1) - b2) * g[j] * g[j];
      const T m_hat = m[j] / c1;
      const T v_hat = v[j] / c2;
      w[j] -= step_size * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

}  // namespace chartrans
