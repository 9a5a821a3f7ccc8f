#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/architecture.hpp"
#include "ecgnet/nn/params.hpp"
#include "ecgnet/tensor.hpp"

namespace ecgnet::nn {

// ---------------------------------------------------------------------------
// Convolution block: same-length conv (zero padding), ReLU, max pool of 2.

template <typename T>
struct ConvCache {
  Tensor3<T> input;
  Tensor3<T> activation;            // post-ReLU, pre-pool
  std::vector<std::uint8_t> choice; // 0/1: which element of each pool pair won
};

template <typename T>
Tensor3<T> conv_block_forward(const Tensor3<T>& x, const NamedArray<T>& kernel, const NamedArray<T>& bias,
                              ConvCache<T>* cache = nullptr) {
  if (kernel.shape.size() != 3 || bias.shape.size() != 1 || bias.shape[0] != kernel.shape[2])
    throw ShapeError("malformed conv parameters '" + kernel.name + "'");
  const std::size_t k = kernel.shape[0], cin = kernel.shape[1], cout = kernel.shape[2];
  if (x.channels() != cin)
    throw ShapeError("conv input has " + std::to_string(x.channels()) + " channels, '" + kernel.name + "' expects " +
                     std::to_string(cin));
  if (x.width() % 2 != 0 || x.width() == 0) throw ShapeError("conv input width must be even and non-zero");

  const std::size_t n_win = x.windows(), width = x.width();
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  Tensor3<T> act(n_win, width, cout);
  const T* kw = kernel.data.data();

  for (std::size_t n = 0; n < n_win; ++n) {
    const auto in = x.window(n);
    auto out = act.window(n);
    for (std::size_t p = 0; p < width; ++p) {
      T* acc = out.data() + p * cout;
      std::copy(bias.data.begin(), bias.data.end(), acc);
      for (std::size_t kk = 0; kk < k; ++kk) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(kk) - pad;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(width)) continue;
        const T* xin = in.data() + static_cast<std::size_t>(src) * cin;
        const T* krow = kw + kk * cin * cout;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const T v = xin[ci];
          const T* w = krow + ci * cout;
          for (std::size_t co = 0; co < cout; ++co) acc[co] += v * w[co];
        }
      }
      for (std::size_t co = 0; co < cout; ++co) acc[co] = acc[co] > T{0} ? acc[co] : T{0};
    }
  }

  Tensor3<T> pooled(n_win, width / 2, cout);
  std::vector<std::uint8_t> choice(pooled.size());
  for (std::size_t n = 0; n < n_win; ++n) {
    const auto a = act.window(n);
    auto o = pooled.window(n);
    for (std::size_t p = 0; p < width / 2; ++p)
      for (std::size_t co = 0; co < cout; ++co) {
        const T first = a[(2 * p) * cout + co], second = a[(2 * p + 1) * cout + co];
        const bool take_second = second > first;
        o[p * cout + co] = take_second ? second : first;
        choice[(n * (width / 2) + p) * cout + co] = take_second ? 1 : 0;
      }
  }
  if (cache) {
    cache->input = x;
    cache->activation = std::move(act);
    cache->choice = std::move(choice);
  }
  return pooled;
}

/// Accumulates kernel/bias gradients and returns the gradient w.r.t. the input.
template <typename T>
Tensor3<T> conv_block_backward(const Tensor3<T>& grad_out, const ConvCache<T>& cache, const NamedArray<T>& kernel,
                               NamedArray<T>& grad_kernel, NamedArray<T>& grad_bias) {
  const std::size_t k = kernel.shape[0], cin = kernel.shape[1], cout = kernel.shape[2];
  const Tensor3<T>& x = cache.input;
  const std::size_t n_win = x.windows(), width = x.width();
  if (grad_out.windows() != n_win || grad_out.width() != width / 2 || grad_out.channels() != cout)
    throw ShapeError("conv backward: gradient shape " + grad_out.shape_string() + " does not match cache");
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);

  Tensor3<T> grad_in(n_win, width, cin);
  std::vector<T> dpre(width * cout);
  const T* kw = kernel.data.data();
  T* gk = grad_kernel.data.data();

  for (std::size_t n = 0; n < n_win; ++n) {
    std::fill(dpre.begin(), dpre.end(), T{0});
    const auto a = cache.activation.window(n);
    const auto g = grad_out.window(n);
    for (std::size_t p = 0; p < width / 2; ++p)
      for (std::size_t co = 0; co < cout; ++co) {
        const std::size_t src = 2 * p + cache.choice[(n * (width / 2) + p) * cout + co];
        if (a[src * cout + co] > T{0}) dpre[src * cout + co] = g[p * cout + co];
      }

    const auto in = x.window(n);
    auto gin = grad_in.window(n);
    for (std::size_t p = 0; p < width; ++p) {
      const T* d = dpre.data() + p * cout;
      for (std::size_t co = 0; co < cout; ++co) grad_bias.data[co] += d[co];
      for (std::size_t kk = 0; kk < k; ++kk) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(p) + static_cast<std::ptrdiff_t>(kk) - pad;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(width)) continue;
        const T* xin = in.data() + static_cast<std::size_t>(src) * cin;
        T* gx = gin.data() + static_cast<std::size_t>(src) * cin;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const T v = xin[ci];
          const T* w = kw + (kk * cin + ci) * cout;
          T* gw = gk + (kk * cin + ci) * cout;
          T s{0};
          for (std::size_t co = 0; co < cout; ++co) {
            gw[co] += v * d[co];
            s += w[co] * d[co];
          }
          gx[ci] += s;
        }
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Global average pooling over the window axis: (N, W, C) -> (N, C).

template <typename T>
Matrix<T> global_avg_pool(const Tensor3<T>& x) {
  if (x.width() == 0) throw ShapeError("global average pooling over an empty width");
  Matrix<T> out(x.windows(), x.channels());
  const T inv = T{1} / static_cast<T>(x.width());
  for (std::size_t n = 0; n < x.windows(); ++n) {
    auto o = out.row(n);
    const auto in = x.window(n);
    for (std::size_t p = 0; p < x.width(); ++p)
      for (std::size_t c = 0; c < x.channels(); ++c) o[c] += in[p * x.channels() + c];
    for (T& v : o) v *= inv;
  }
  return out;
}

template <typename T>
Tensor3<T> global_avg_pool_backward(const Matrix<T>& grad_out, std::size_t width) {
  Tensor3<T> g(grad_out.rows(), width, grad_out.cols());
  const T inv = T{1} / static_cast<T>(width);
  for (std::size_t n = 0; n < grad_out.rows(); ++n) {
    const auto go = grad_out.row(n);
    auto gi = g.window(n);
    for (std::size_t p = 0; p < width; ++p)
      for (std::size_t c = 0; c < grad_out.cols(); ++c) gi[p * grad_out.cols() + c] = go[c] * inv;
  }
  return g;
}

// ---------------------------------------------------------------------------
// LSTM over the window sequence, returning the last hidden state.

template <typename T>
inline T sigmoid(T z) {
  if (z >= T{0}) return T{1} / (T{1} + std::exp(-z));
  const T e = std::exp(z);
  return e / (T{1} + e);
}

/// Variational dropout masks: one input mask (F) and one recurrent mask (H)
/// per sequence, already carrying the 1/(1-rate) scale. Empty means identity.
template <typename T>
struct LstmMasks {
  std::vector<T> input;
  std::vector<T> recurrent;
};

template <typename T>
struct LstmCache {
  Matrix<T> inputs;  // masked inputs, N x F
  Matrix<T> gates;   // activated gates i, f, g, o; N x 4H
  Matrix<T> cells;   // N x H
  Matrix<T> hidden;  // N x H
  LstmMasks<T> masks;
};

template <typename T>
std::vector<T> lstm_forward(const Matrix<T>& seq, const NamedArray<T>& input_kernel, const NamedArray<T>& recurrent_kernel,
                            const NamedArray<T>& bias, const std::type_identity_t<LstmMasks<T>>* masks = nullptr,
                            LstmCache<T>* cache = nullptr) {
  const std::size_t steps = seq.rows(), f = seq.cols();
  const std::size_t h4 = bias.data.size(), h = h4 / 4;
  if (input_kernel.shape.size() != 2 || input_kernel.shape[0] != f || input_kernel.shape[1] != h4)
    throw ShapeError("LSTM input has " + std::to_string(f) + " features; input kernel shape mismatch");
  if (recurrent_kernel.shape.size() != 2 || recurrent_kernel.shape[0] != h || recurrent_kernel.shape[1] != h4)
    throw ShapeError("LSTM recurrent kernel shape mismatch");
  if (steps == 0) throw ShapeError("LSTM over an empty sequence");
  if (!all_finite(seq.data())) throw NumericError("non-finite value in LSTM input");
  const bool use_masks = masks && (!masks->input.empty() || !masks->recurrent.empty());
  if (use_masks && (masks->input.size() != f || masks->recurrent.size() != h))
    throw ShapeError("dropout mask sizes do not match LSTM dimensions");

  Matrix<T> xin(steps, f), gates(steps, h4), cells(steps, h), hidden(steps, h);
  std::vector<T> h_prev(h, T{0}), c_prev(h, T{0}), hm(h), z(h4);
  const T* wx = input_kernel.data.data();
  const T* wh = recurrent_kernel.data.data();

  for (std::size_t t = 0; t < steps; ++t) {
    auto xm = xin.row(t);
    const auto xr = seq.row(t);
    for (std::size_t i = 0; i < f; ++i) xm[i] = use_masks ? xr[i] * masks->input[i] : xr[i];
    for (std::size_t i = 0; i < h; ++i) hm[i] = use_masks ? h_prev[i] * masks->recurrent[i] : h_prev[i];

    std::copy(bias.data.begin(), bias.data.end(), z.begin());
    for (std::size_t i = 0; i < f; ++i) {
      const T v = xm[i];
      if (v == T{0}) continue;
      const T* w = wx + i * h4;
      for (std::size_t j = 0; j < h4; ++j) z[j] += v * w[j];
    }
    for (std::size_t i = 0; i < h; ++i) {
      const T v = hm[i];
      if (v == T{0}) continue;
      const T* w = wh + i * h4;
      for (std::size_t j = 0; j < h4; ++j) z[j] += v * w[j];
    }

    auto g = gates.row(t);
    auto c = cells.row(t);
    auto hh = hidden.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      const T gi = sigmoid(z[j]);
      const T gf = sigmoid(z[h + j]);
      const T gc = std::tanh(z[2 * h + j]);
      const T go = sigmoid(z[3 * h + j]);
      g[j] = gi;
      g[h + j] = gf;
      g[2 * h + j] = gc;
      g[3 * h + j] = go;
      c[j] = gf * c_prev[j] + gi * gc;
      hh[j] = go * std::tanh(c[j]);
    }
    std::copy(c.begin(), c.end(), c_prev.begin());
    std::copy(hh.begin(), hh.end(), h_prev.begin());
  }

  if (cache) {
    cache->inputs = std::move(xin);
    cache->gates = std::move(gates);
    cache->cells = std::move(cells);
    cache->hidden = std::move(hidden);
    cache->masks = use_masks ? *masks : LstmMasks<T>{};
  }
  return h_prev;
}

/// Backpropagation through time from the gradient of the final hidden state.
/// Accumulates parameter gradients; returns the gradient w.r.t. the unmasked
/// input sequence.
template <typename T>
Matrix<T> lstm_backward(std::span<const T> grad_last_hidden, const LstmCache<T>& cache,
                        const NamedArray<T>& input_kernel, const NamedArray<T>& recurrent_kernel,
                        NamedArray<T>& grad_input_kernel, NamedArray<T>& grad_recurrent_kernel, NamedArray<T>& grad_bias) {
  const std::size_t steps = cache.inputs.rows(), f = cache.inputs.cols();
  const std::size_t h = cache.cells.cols(), h4 = 4 * h;
  const bool use_masks = !cache.masks.input.empty();

  Matrix<T> grad_seq(steps, f);
  std::vector<T> dh(grad_last_hidden.begin(), grad_last_hidden.end());
  std::vector<T> dc(h, T{0}), dz(h4), hm(h), dhm(h);
  const T* wx = input_kernel.data.data();
  const T* wh = recurrent_kernel.data.data();
  T* gwx = grad_input_kernel.data.data();
  T* gwh = grad_recurrent_kernel.data.data();

  for (std::size_t t = steps; t-- > 0;) {
    const auto g = cache.gates.row(t);
    const auto c = cache.cells.row(t);
    for (std::size_t j = 0; j < h; ++j) {
      const T gi = g[j], gf = g[h + j], gc = g[2 * h + j], go = g[3 * h + j];
      const T c_prev = t > 0 ? cache.cells(t - 1, j) : T{0};
      const T tc = std::tanh(c[j]);
      dc[j] += dh[j] * go * (T{1} - tc * tc);
      dz[j] = dc[j] * gc * gi * (T{1} - gi);
      dz[h + j] = dc[j] * c_prev * gf * (T{1} - gf);
      dz[2 * h + j] = dc[j] * gi * (T{1} - gc * gc);
      dz[3 * h + j] = dh[j] * tc * go * (T{1} - go);
      dc[j] *= gf;
    }
    for (std::size_t j = 0; j < h4; ++j) grad_bias.data[j] += dz[j];

    const auto xm = cache.inputs.row(t);
    auto gx = grad_seq.row(t);
    for (std::size_t i = 0; i < f; ++i) {
      const T v = xm[i];
      const T* w = wx + i * h4;
      T* gw = gwx + i * h4;
      T s{0};
      for (std::size_t j = 0; j < h4; ++j) {
        gw[j] += v * dz[j];
        s += w[j] * dz[j];
      }
      gx[i] = use_masks ? s * cache.masks.input[i] : s;
    }

    for (std::size_t i = 0; i < h; ++i) {
      const T prev = t > 0 ? cache.hidden(t - 1, i) : T{0};
      hm[i] = use_masks ? prev * cache.masks.recurrent[i] : prev;
    }
    for (std::size_t i = 0; i < h; ++i) {
      const T v = hm[i];
      const T* w = wh + i * h4;
      T* gw = gwh + i * h4;
      T s{0};
      for (std::size_t j = 0; j < h4; ++j) {
        gw[j] += v * dz[j];
        s += w[j] * dz[j];
      }
      dhm[i] = s;
    }
    for (std::size_t i = 0; i < h; ++i) dh[i] = use_masks ? dhm[i] * cache.masks.recurrent[i] : dhm[i];
  }
  return grad_seq;
}

// ---------------------------------------------------------------------------
// Classification head and loss.

/// Class probabilities. The logistic head emits one unit p = P(class 1),
/// reported as (1 - p, p).
template <typename T>
std::vector<T> head_forward(std::span<const T> hidden, const NamedArray<T>& kernel, const NamedArray<T>& bias,
                            HeadKind kind) {
  const std::size_t h = hidden.size(), k = bias.data.size();
  if (kernel.shape.size() != 2 || kernel.shape[0] != h || kernel.shape[1] != k)
    throw ShapeError("head kernel shape mismatch");
  if ((kind == HeadKind::logistic) != (k == 1)) throw ShapeError("head kind does not match head width");
  std::vector<T> z(bias.data.begin(), bias.data.end());
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < k; ++j) z[j] += hidden[i] * kernel.data[i * k + j];

  if (kind == HeadKind::logistic) {
    const T p = sigmoid(z[0]);
    return {T{1} - p, p};
  }
  const T zmax = *std::max_element(z.begin(), z.end());
  T sum{0};
  for (T& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (T& v : z) v /= sum;
  return z;
}

inline constexpr double kProbabilityFloor = 1e-12;

template <typename T>
T cross_entropy(std::span<const T> probs, std::size_t label) {
  if (label >= probs.size()) throw ShapeError("label out of range");
  return -std::log(std::clamp(probs[label], static_cast<T>(kProbabilityFloor), T{1}));
}

/// Gradient of cross_entropy(head_forward(...)) w.r.t. the head input;
/// accumulates head parameter gradients.
template <typename T>
std::vector<T> head_backward(std::span<const T> hidden, std::span<const T> probs, std::size_t label,
                             const NamedArray<T>& kernel, HeadKind kind, NamedArray<T>& grad_kernel,
                             NamedArray<T>& grad_bias) {
  const std::size_t h = hidden.size(), k = grad_bias.data.size();
  std::vector<T> dz(k, T{0});
  // Below the floor the clamped loss is flat.
  if (probs[label] >= static_cast<T>(kProbabilityFloor)) {
    if (kind == HeadKind::logistic) {
      dz[0] = probs[1] - (label == 1 ? T{1} : T{0});
    } else {
      for (std::size_t j = 0; j < k; ++j) dz[j] = probs[j] - (j == label ? T{1} : T{0});
    }
  }
  std::vector<T> dh(h, T{0});
  for (std::size_t j = 0; j < k; ++j) grad_bias.data[j] += dz[j];
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      grad_kernel.data[i * k + j] += hidden[i] * dz[j];
      dh[i] += kernel.data[i * k + j] * dz[j];
    }
  return dh;
}

} // namespace ecgnet::nn
