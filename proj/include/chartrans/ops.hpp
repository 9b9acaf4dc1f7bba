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

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "chartrans/errors.hpp"
#include "chartrans/rng.hpp"
#include "chartrans/tensor.hpp"

// Differentiable tensor primitives. Every op is a pure function of its
// inputs (and, for dropout, the rng stream); reductions always run in a
// fixed order so results are bit-reproducible.

namespace chartrans {

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;

// out (+)= op(a) * op(b), where a is ar x ac and b is br x bc (row-major).
template <typename T>
void gemm(T* out, const T* a, std::size_t ar, std::size_t ac, bool ta, const T* b,
          std::size_t br, std::size_t bc, bool tb, bool accumulate) {
  using Index = Eigen::Index;
  ConstMatMap<T> A(a, static_cast<Index>(ar), static_cast<Index>(ac));
  ConstMatMap<T> B(b, static_cast<Index>(br), static_cast<Index>(bc));
  const auto m = static_cast<Index>(ta ? ac : ar);
  const auto n = static_cast<Index>(tb ? br : bc);
  const auto k = static_cast<Index>(ta ? ar : ac);
  if (m * n * k <= 16384) {
    // Small products (per-head attention scores) are dominated by call overhead.
    const std::size_t as0 = ta ? 1 : ac, as1 = ta ? ac : 1;
    const std::size_t bs0 = tb ? 1 : bc, bs1 = tb ? bc : 1;
    for (Index i = 0; i < m; ++i) {
      T* crow = out + i * n;
      if (!accumulate) std::fill(crow, crow + n, T(0));
      for (Index p = 0; p < k; ++p) {
        const T av = a[i * as0 + p * as1];
        const T* bp = b + p * bs0;
        for (Index j = 0; j < n; ++j) crow[j] += av * bp[j * bs1];
      }
    }
    return;
  }
  MatMap<T> C(out, m, n);
  auto run = [&](const auto& X, const auto& Y) {
    if (accumulate) {
      C.noalias() += X * Y;
    } else {
      C.noalias() = X * Y;
    }
  };
  if (!ta && !tb) {
    run(A, B);
  } else if (!ta && tb) {
    run(A, B.transpose());
  } else if (ta && !tb) {
    run(A.transpose(), B);
  } else {
    run(A.transpose(), B.transpose());
  }
}

struct MatDims {
  std::size_t batch, rows, cols;
};

inline MatDims mat_dims(const Shape& s) {
  if (s.size() == 2) return {1, s[0], s[1]};
  if (s.size() == 3) return {s[0], s[1], s[2]};
  throw DimensionError("matmul expects rank-2 or rank-3 operands, got " + shape_str(s));
}

inline void require_same_shape(const char* op, const Shape& a, const Shape& b) {
  if (a != b) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
  }
}

}  // namespace detail

/// Batched product op(a) x op(b) with optional transposes of the inner
/// matrices. Rank-2 operands broadcast against the batch of a rank-3 one.
template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b, bool trans_a = false,
              bool trans_b = false) {
  const auto da = detail::mat_dims(a.shape());
  const auto db = detail::mat_dims(b.shape());
  const std::size_t m = trans_a ? da.cols : da.rows;
  const std::size_t k = trans_a ? da.rows : da.cols;
  const std::size_t kb = trans_b ? db.cols : db.rows;
  const std::size_t n = trans_b ? db.rows : db.cols;
  if (k != kb || (da.batch != db.batch && da.batch != 1 && db.batch != 1)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  const std::size_t batch = std::max(da.batch, db.batch);
  const bool rank3 = a.rank() == 3 || b.rank() == 3;
  Shape out_shape = rank3 ? Shape{batch, m, n} : Shape{m, n};
  std::vector<T> out(batch * m * n);
  const std::size_t sa = da.rows * da.cols, sb = db.rows * db.cols;
  for (std::size_t i = 0; i < batch; ++i) {
    const T* pa = a.values().data() + (da.batch == 1 ? 0 : i * sa);
    const T* pb = b.values().data() + (db.batch == 1 ? 0 : i * sb);
    detail::gemm(out.data() + i * m * n, pa, da.rows, da.cols, trans_a, pb, db.rows,
                 db.cols, trans_b, false);
  }
  return detail::make_result<T>(
      std::move(out_shape), std::move(out), {a, b},
      [=](detail::Node<T>& node) {
        auto& na = *node.inputs[0];
        auto& nb = *node.inputs[1];
        for (std::size_t i = 0; i < batch; ++i) {
          const T* dc = node.grad.data() + i * m * n;
          const std::size_t ia = da.batch == 1 ? 0 : i * sa;
          const std::size_t ib = db.batch == 1 ? 0 : i * sb;
          if (na.requires_grad) {
            if (!trans_a) {
              detail::gemm(na.grad.data() + ia, dc, m, n, false, nb.value.data() + ib,
                           db.rows, db.cols, !trans_b, true);
            } else {
              detail::gemm(na.grad.data() + ia, nb.value.data() + ib, db.rows, db.cols,
                           trans_b, dc, m, n, true, true);
            }
          }
          if (nb.requires_grad) {
            if (!trans_b) {
              detail::gemm(nb.grad.data() + ib, na.value.data() + ia, da.rows, da.cols,
                           !trans_a, dc, m, n, false, true);
            } else {
              detail::gemm(nb.grad.data() + ib, dc, m, n, true, na.value.data() + ia,
                           da.rows, da.cols, trans_a, true);
            }
          }
        }
      });
}

/// Standard matrix product of rank-2 or rank-3 tensors.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  return bmm(a, b, false, false);
}

/// y = x W + bias over the last dimension of x; W is [in, out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (weight.rank() != 2 || bias.rank() != 1 || x.shape().back() != weight.dim(0) ||
      bias.dim(0) != weight.dim(1)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + ", weight " +
                         shape_str(weight.shape()) + ", bias " + shape_str(bias.shape()));
  }
  const std::size_t in = weight.dim(0), out_dim = weight.dim(1);
  const std::size_t rows = x.numel() / in;
  std::vector<T> out(rows * out_dim);
  detail::gemm(out.data(), x.values().data(), rows, in, false, weight.values().data(), in,
               out_dim, false, false);
  const T* pb = bias.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = out.data() + r * out_dim;
    for (std::size_t c = 0; c < out_dim; ++c) row[c] += pb[c];
  }
  Shape shape = x.shape();
  shape.back() = out_dim;
  return detail::make_result<T>(
      std::move(shape), std::move(out), {x, weight, bias},
      [=](detail::Node<T>& node) {
        auto& nx = *node.inputs[0];
        auto& nw = *node.inputs[1];
        auto& nbias = *node.inputs[2];
        const T* dy = node.grad.data();
        if (nx.requires_grad) {
          detail::gemm(nx.grad.data(), dy, rows, out_dim, false, nw.value.data(), in,
                       out_dim, true, true);
        }
        if (nw.requires_grad) {
          detail::gemm(nw.grad.data(), nx.value.data(), rows, in, true, dy, rows, out_dim,
                       false, true);
        }
        if (nbias.requires_grad) {
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < out_dim; ++c) nbias.grad[c] += dy[r * out_dim + c];
          }
        }
      });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape("add", a.shape(), b.shape());
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return detail::make_result<T>(a.shape(), std::move(out), {a, b},
                                [](detail::Node<T>& node) {
                                  for (auto& in : node.inputs) {
                                    if (!in->requires_grad) continue;
                                    for (std::size_t i = 0; i < node.grad.size(); ++i)
                                      in->grad[i] += node.grad[i];
                                  }
                                });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape("mul", a.shape(), b.shape());
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return detail::make_result<T>(a.shape(), std::move(out), {a, b},
                                [](detail::Node<T>& node) {
                                  auto& na = *node.inputs[0];
                                  auto& nb = *node.inputs[1];
                                  for (std::size_t i = 0; i < node.grad.size(); ++i) {
                                    if (na.requires_grad) na.grad[i] += node.grad[i] * nb.value[i];
                                    if (nb.requires_grad) nb.grad[i] += node.grad[i] * na.value[i];
                                  }
                                });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * s;
  return detail::make_result<T>(a.shape(), std::move(out), {a},
                                [s](detail::Node<T>& node) {
                                  auto& na = *node.inputs[0];
                                  for (std::size_t i = 0; i < node.grad.size(); ++i)
                                    na.grad[i] += node.grad[i] * s;
                                });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] > T(0) ? a[i] : T(0);
  return detail::make_result<T>(a.shape(), std::move(out), {a},
                                [](detail::Node<T>& node) {
                                  auto& na = *node.inputs[0];
                                  for (std::size_t i = 0; i < node.grad.size(); ++i)
                                    na.grad[i] += na.value[i] > T(0) ? node.grad[i] : T(0);
                                });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T total(0);
  for (T v : a.values()) total += v;
  return detail::make_result<T>({1}, {total}, {a}, [](detail::Node<T>& node) {
    auto& na = *node.inputs[0];
    for (auto& g : na.grad) g += node.grad[0];
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                         shape_str(shape));
  }
  return detail::make_result<T>(std::move(shape), a.vec(), {a},
                                [](detail::Node<T>& node) {
                                  auto& na = *node.inputs[0];
                                  for (std::size_t i = 0; i < node.grad.size(); ++i)
                                    na.grad[i] += node.grad[i];
                                });
}

/// Numerically stable softmax along `axis` (negative counts from the end).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis = -1) {
  const int r = static_cast<int>(x.rank());
  const int ax = axis < 0 ? axis + r : axis;
  if (ax < 0 || ax >= r) {
    throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " +
                         shape_str(x.shape()));
  }
  std::size_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= x.dim(i);
  for (int i = ax + 1; i < r; ++i) inner *= x.dim(i);
  const std::size_t len = x.dim(ax);
  std::vector<T> out(x.numel());
  const T* in = x.values().data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t base = o * len * inner + j;
      T mx = in[base];
      for (std::size_t k = 1; k < len; ++k) mx = std::max(mx, in[base + k * inner]);
      T total(0);
      for (std::size_t k = 0; k < len; ++k) {
        T e = std::exp(in[base + k * inner] - mx);
        out[base + k * inner] = e;
        total += e;
      }
      for (std::size_t k = 0; k < len; ++k) out[base + k * inner] /= total;
    }
  }
  return detail::make_result<T>(
      x.shape(), std::move(out), {x}, [=](detail::Node<T>& node) {
        auto& nx = *node.inputs[0];
        const T* y = node.value.data();
        const T* dy = node.grad.data();
        for (std::size_t o = 0; o < outer; ++o) {
          for (std::size_t j = 0; j < inner; ++j) {
            const std::size_t base = o * len * inner + j;
            T dot(0);
            for (std::size_t k = 0; k < len; ++k)
              dot += y[base + k * inner] * dy[base + k * inner];
            for (std::size_t k = 0; k < len; ++k) {
              const std::size_t i = base + k * inner;
              nx.grad[i] += y[i] * (dy[i] - dot);
            }
          }
        }
      });
}

/// Attention weights: softmax(scale * scores) over the key axis of a
/// [batch*heads, queries, keys] tensor. `key_mask` is [batch, keys] with 1 on
/// attendable positions. With `causal`, query i sees keys j <= i + (keys -
/// queries), so a single trailing query sees the whole prefix.
template <typename T>
Tensor<T> masked_softmax(const Tensor<T>& scores, std::span<const std::uint8_t> key_mask,
                         std::size_t heads, bool causal, T scale_factor) {
  if (scores.rank() != 3 || scores.dim(0) % heads != 0) {
    throw DimensionError("masked_softmax: scores shape " + shape_str(scores.shape()));
  }
  const std::size_t bh = scores.dim(0), lq = scores.dim(1), lk = scores.dim(2);
  const std::size_t batch = bh / heads;
  if (!key_mask.empty() && key_mask.size() != batch * lk) {
    throw DimensionError("masked_softmax: key mask has " + std::to_string(key_mask.size()) +
                         " entries, expected " + std::to_string(batch * lk));
  }
  const std::size_t offset = lk >= lq ? lk - lq : 0;
  std::vector<T> out(scores.numel(), T(0));
  const T* in = scores.values().data();
  for (std::size_t g = 0; g < bh; ++g) {
    const std::uint8_t* km = key_mask.empty() ? nullptr : key_mask.data() + (g / heads) * lk;
    for (std::size_t i = 0; i < lq; ++i) {
      const T* row = in + (g * lq + i) * lk;
      T* orow = out.data() + (g * lq + i) * lk;
      const std::size_t limit = causal ? std::min(lk, i + offset + 1) : lk;
      T mx = -std::numeric_limits<T>::infinity();
      std::size_t visible = 0;
      for (std::size_t j = 0; j < limit; ++j)
        if (!km || km[j]) {
          mx = std::max(mx, row[j] * scale_factor);
          ++visible;
        }
      if (visible == 0) {
        throw InvariantError("attention: every key is masked for query " + std::to_string(i));
      }
      T total(0);
      for (std::size_t j = 0; j < limit; ++j) {
        if (km && !km[j]) continue;
        orow[j] = std::exp(row[j] * scale_factor - mx);
        total += orow[j];
      }
      for (std::size_t j = 0; j < limit; ++j) orow[j] /= total;
    }
  }
  return detail::make_result<T>(
      scores.shape(), std::move(out), {scores}, [=](detail::Node<T>& node) {
        auto& ns = *node.inputs[0];
        const std::size_t rows = bh * lq;
        for (std::size_t r = 0; r < rows; ++r) {
          const T* y = node.value.data() + r * lk;
          const T* dy = node.grad.data() + r * lk;
          T* dx = ns.grad.data() + r * lk;
          T dot(0);
          for (std::size_t j = 0; j < lk; ++j) dot += y[j] * dy[j];
          for (std::size_t j = 0; j < lk; ++j) dx[j] += scale_factor * y[j] * (dy[j] - dot);
        }
      });
}

/// Per-vector normalization over the last dimension followed by gain/bias.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& bias,
                     T eps = T(1e-5)) {
  const std::size_t d = x.shape().back();
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layer_norm: input " + shape_str(x.shape()) + ", gain " +
                         shape_str(gain.shape()) + ", bias " + shape_str(bias.shape()));
  }
  const std::size_t rows = x.numel() / d;
  std::vector<T> out(x.numel());
  std::vector<T> xhat(x.numel());
  std::vector<T> rstd(rows);
  const T* in = x.values().data();
  const T* g = gain.values().data();
  const T* b = bias.values().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = in + r * d;
    T mean(0);
    for (std::size_t c = 0; c < d; ++c) mean += row[c];
    mean /= static_cast<T>(d);
    T var(0);
    for (std::size_t c = 0; c < d; ++c) var += (row[c] - mean) * (row[c] - mean);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    rstd[r] = rs;
    for (std::size_t c = 0; c < d; ++c) {
      const T h = (row[c] - mean) * rs;
      xhat[r * d + c] = h;
      out[r * d + c] = g[c] * h + b[c];
    }
  }
  return detail::make_result<T>(
      x.shape(), std::move(out), {x, gain, bias},
      [=, xhat = std::move(xhat), rstd = std::move(rstd)](detail::Node<T>& node) {
        auto& nx = *node.inputs[0];
        auto& ng = *node.inputs[1];
        auto& nb = *node.inputs[2];
        std::vector<T> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          const T* dy = node.grad.data() + r * d;
          const T* h = xhat.data() + r * d;
          if (ng.requires_grad)
            for (std::size_t c = 0; c < d; ++c) ng.grad[c] += dy[c] * h[c];
          if (nb.requires_grad)
            for (std::size_t c = 0; c < d; ++c) nb.grad[c] += dy[c];
          if (!nx.requires_grad) continue;
          T mean_dh(0), mean_dh_h(0);
          for (std::size_t c = 0; c < d; ++c) {
            dh[c] = dy[c] * ng.value[c];
            mean_dh += dh[c];
            mean_dh_h += dh[c] * h[c];
          }
          mean_dh /= static_cast<T>(d);
          mean_dh_h /= static_cast<T>(d);
          for (std::size_t c = 0; c < d; ++c)
            nx.grad[r * d + c] += rstd[r] * (dh[c] - mean_dh - h[c] * mean_dh_h);
        }
      });
}

/// Inverted dropout. Identity in evaluation mode or at rate 0; otherwise each
/// element is zeroed with probability `rate` and survivors scaled by
/// 1/(1-rate). Draws exactly one uniform per element from `rng`.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, Rng* rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw InvariantError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  if (!rng) throw InvariantError("dropout in training mode needs an rng");
  const T keep_scale = T(1) / static_cast<T>(1.0 - rate);
  std::vector<T> mask(x.numel());
  std::vector<T> out(x.numel());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = rng->uniform() < rate ? T(0) : keep_scale;
    out[i] = x[i] * mask[i];
  }
  return detail::make_result<T>(x.shape(), std::move(out), {x},
                                [mask = std::move(mask)](detail::Node<T>& node) {
                                  auto& nx = *node.inputs[0];
                                  for (std::size_t i = 0; i < mask.size(); ++i)
                                    nx.grad[i] += node.grad[i] * mask[i];
                                });
}

/// Row lookup: [ids.size(), d] from a [vocab, d] table.
template <typename T>
Tensor<T> embedding(const Tensor<T>& table, std::span<const int> ids) {
  if (table.rank() != 2) throw DimensionError("embedding table must be rank 2");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<T> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw DimensionError("embedding: index " + std::to_string(ids[i]) +
                           " outside vocabulary of size " + std::to_string(vocab));
    }
    std::copy_n(table.values().data() + ids[i] * d, d, out.data() + i * d);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return detail::make_result<T>({ids.size(), d}, std::move(out), {table},
                                [idx = std::move(idx), d](detail::Node<T>& node) {
                                  auto& nt = *node.inputs[0];
                                  for (std::size_t i = 0; i < idx.size(); ++i) {
                                    T* dst = nt.grad.data() + idx[i] * d;
                                    const T* src = node.grad.data() + i * d;
                                    for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
                                  }
                                });
}

namespace detail {

// [batch*len, heads*dh] <-> [batch*heads, len, dh]
template <typename T>
void permute_heads(const T* src, T* dst, std::size_t batch, std::size_t len,
                   std::size_t heads, std::size_t dh, bool split, bool accumulate) {
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t l = 0; l < len; ++l) {
        const std::size_t flat = ((b * len + l) * heads + h) * dh;
        const std::size_t grouped = ((b * heads + h) * len + l) * dh;
        const T* s = src + (split ? flat : grouped);
        T* o = dst + (split ? grouped : flat);
        if (accumulate) {
          for (std::size_t e = 0; e < dh; ++e) o[e] += s[e];
        } else {
          std::copy_n(s, dh, o);
        }
      }
}

}  // namespace detail

/// [batch*len, d] -> [batch*heads, len, d/heads]
template <typename T>
Tensor<T> split_heads(const Tensor<T>& x, std::size_t batch, std::size_t heads) {
  const std::size_t d = x.shape().back();
  if (d % heads != 0 || x.numel() % (batch * d) != 0) {
    throw DimensionError("split_heads: shape " + shape_str(x.shape()) + " with " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t len = x.numel() / (batch * d), dh = d / heads;
  std::vector<T> out(x.numel());
  detail::permute_heads(x.values().data(), out.data(), batch, len, heads, dh, true, false);
  return detail::make_result<T>({batch * heads, len, dh}, std::move(out), {x},
                                [=](detail::Node<T>& node) {
                                  detail::permute_heads(node.grad.data(),
                                                        node.inputs[0]->grad.data(), batch,
                                                        len, heads, dh, false, true);
                                });
}

/// [batch*heads, len, dh] -> [batch*len, heads*dh]
template <typename T>
Tensor<T> merge_heads(const Tensor<T>& x, std::size_t heads) {
  if (x.rank() != 3 || x.dim(0) % heads != 0) {
    throw DimensionError("merge_heads: shape " + shape_str(x.shape()));
  }
  const std::size_t batch = x.dim(0) / heads, len = x.dim(1), dh = x.dim(2);
  std::vector<T> out(x.numel());
  detail::permute_heads(x.values().data(), out.data(), batch, len, heads, dh, false, false);
  return detail::make_result<T>({batch * len, heads * dh}, std::move(out), {x},
                                [=](detail::Node<T>& node) {
                                  detail::permute_heads(node.grad.data(),
                                                        node.inputs[0]->grad.data(), batch,
                                                        len, heads, dh, true, true);
                                });
}

/// Mean cross-entropy of [positions, vocab] logits against label-smoothed
/// targets q = (1-eps)*onehot(gold) + eps/vocab. Positions whose target equals
/// `ignore_index` contribute nothing. Returns 0 when every position is ignored.
template <typename T>
Tensor<T> cross_entropy_label_smoothed(const Tensor<T>& logits, std::span<const int> targets,
                                       double epsilon, int ignore_index) {
  if (logits.rank() != 2 || logits.dim(0) != targets.size()) {
    throw DimensionError("cross_entropy: logits " + shape_str(logits.shape()) + " vs " +
                         std::to_string(targets.size()) + " targets");
  }
  const std::size_t n = logits.dim(0), vocab = logits.dim(1);
  const T eps = static_cast<T>(epsilon);
  const T off = eps / static_cast<T>(vocab);
  const T on = T(1) - eps + off;
  std::vector<T> probs(n * vocab, T(0));
  std::vector<int> tgt(targets.begin(), targets.end());
  std::size_t counted = 0;
  T total(0);
  for (std::size_t r = 0; r < n; ++r) {
    if (tgt[r] == ignore_index) continue;
    if (tgt[r] < 0 || static_cast<std::size_t>(tgt[r]) >= vocab) {
      throw InvariantError("cross_entropy: target " + std::to_string(tgt[r]) +
                           " outside vocabulary of size " + std::to_string(vocab));
    }
    ++counted;
    const T* row = logits.values().data() + r * vocab;
    T mx = row[0];
    for (std::size_t k = 1; k < vocab; ++k) mx = std::max(mx, row[k]);
    T z(0);
    for (std::size_t k = 0; k < vocab; ++k) z += std::exp(row[k] - mx);
    const T log_z = mx + std::log(z);
    T row_loss(0);
    for (std::size_t k = 0; k < vocab; ++k) {
      const T logp = row[k] - log_z;
      probs[r * vocab + k] = std::exp(logp);
      const T q = static_cast<std::size_t>(tgt[r]) == k ? on : off;
      if (q != T(0)) row_loss -= q * logp;
    }
    total += row_loss;
  }
  const T denom = counted ? static_cast<T>(counted) : T(1);
  return detail::make_result<T>(
      {1}, {total / denom}, {logits},
      [=, probs = std::move(probs), tgt = std::move(tgt)](detail::Node<T>& node) {
        auto& nl = *node.inputs[0];
        const T g = node.grad[0] / denom;
        for (std::size_t r = 0; r < n; ++r) {
          if (tgt[r] == ignore_index) continue;
          for (std::size_t k = 0; k < vocab; ++k) {
            const T q = static_cast<std::size_t>(tgt[r]) == k ? on : off;
            nl.grad[r * vocab + k] += g * (probs[r * vocab + k] - q);
          }
        }
      });
}

}  // namespace chartrans
