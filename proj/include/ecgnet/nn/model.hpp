#pragma once

#include <cstddef>
#include <type_traits>
#include <vector>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/architecture.hpp"
#include "ecgnet/nn/layers.hpp"
#include "ecgnet/nn/params.hpp"
#include "ecgnet/rng.hpp"
#include "ecgnet/tensor.hpp"

namespace ecgnet::nn {

enum class Mode { train, eval };

/// Per-sequence dropout masks for the LSTM, drawn input mask first (F
/// entries), then recurrent mask (H entries); one uniform per entry.
template <typename T>
LstmMasks<T> sample_dropout_masks(const ArchitectureConfig& config, Rng& rng) {
  LstmMasks<T> m;
  const double rate = config.dropout_rate;
  if (rate <= 0.0) return m;
  const T kept = static_cast<T>(1.0 / (1.0 - rate));
  m.input.resize(config.features());
  m.recurrent.resize(config.lstm_units);
  for (T& v : m.input) v = rng.uniform() < rate ? T{0} : kept;
  for (T& v : m.recurrent) v = rng.uniform() < rate ? T{0} : kept;
  return m;
}

template <typename T>
struct ForwardCache {
  std::vector<ConvCache<T>> conv;
  std::size_t last_width = 0;
  Matrix<T> pooled;
  LstmCache<T> lstm;
  std::vector<T> hidden;
};

namespace detail {

template <typename T>
void check_input(const Tensor3<T>& windows, const ArchitectureConfig& config) {
  if (windows.windows() == 0) throw ShapeError("no windows to classify");
  if (windows.width() != config.window_size)
    throw ShapeError("window width " + std::to_string(windows.width()) + " does not match architecture " +
                     config.name());
  if (windows.channels() != 1) throw ShapeError("expected single-channel windows");
}

template <typename T>
std::vector<T> forward_impl(const Tensor3<T>& windows, const ModelParams<T>& params, const LstmMasks<T>* masks,
                            ForwardCache<T>* cache, std::vector<LayerShape>* trace) {
  const ArchitectureConfig& config = params.config();
  check_input(windows, config);
  if (trace) {
    trace->clear();
    trace->push_back({"input", {windows.windows(), windows.width(), windows.channels()}});
  }
  if (cache) cache->conv.assign(config.conv_layers, {});

  Tensor3<T> x = windows;
  for (std::size_t l = 1; l <= config.conv_layers; ++l) {
    x = conv_block_forward(x, params.conv_kernel(l), params.conv_bias(l), cache ? &cache->conv[l - 1] : nullptr);
    if (trace) trace->push_back({"conv" + std::to_string(l), {x.windows(), x.width(), x.channels()}});
  }
  Matrix<T> pooled = global_avg_pool(x);
  if (trace) trace->push_back({"global_avg_pool", {pooled.rows(), pooled.cols()}});

  std::vector<T> hidden = lstm_forward(pooled, params.lstm_input_kernel(), params.lstm_recurrent_kernel(),
                                       params.lstm_bias(), masks, cache ? &cache->lstm : nullptr);
  if (trace) trace->push_back({"lstm", {hidden.size()}});

  std::vector<T> probs = head_forward<T>(hidden, params.head_kernel(), params.head_bias(), config.head);
  if (trace) trace->push_back({to_string(config.head), {params.head_bias().data.size()}});

  if (cache) {
    cache->last_width = x.width();
    cache->pooled = std::move(pooled);
    cache->hidden = std::move(hidden);
  }
  return probs;
}

} // namespace detail

/// Class probabilities for one signal's windows (N x W x 1). In eval mode no
/// dropout is applied and `masks` must be null; in train mode `masks` may be
/// null only when the architecture's dropout rate is zero.
template <typename T>
std::vector<T> model_forward(const Tensor3<T>& windows, const ModelParams<T>& params, Mode mode = Mode::eval,
                             const std::type_identity_t<LstmMasks<T>>* masks = nullptr,
                             std::vector<LayerShape>* trace = nullptr) {
  if (mode == Mode::eval && masks) throw ConfigError("dropout masks supplied in eval mode");
  if (mode == Mode::train && !masks && params.config().dropout_rate > 0.0)
    throw ConfigError("train mode requires dropout masks");
  return detail::forward_impl<T>(windows, params, masks, nullptr, trace);
}

template <typename T>
struct BackwardResult {
  T loss{};
  std::vector<T> probs;
  ModelParams<T> grads;
};

/// Loss and exact gradient of the cross-entropy for one labelled signal,
/// using the given dropout masks (null for none).
template <typename T>
BackwardResult<T> model_backward(const Tensor3<T>& windows, const ModelParams<T>& params, std::size_t label,
                                 const std::type_identity_t<LstmMasks<T>>* masks = nullptr) {
  const ArchitectureConfig& config = params.config();
  if (label >= config.num_classes) throw ShapeError("label out of range for architecture");

  ForwardCache<T> cache;
  BackwardResult<T> r;
  r.probs = detail::forward_impl<T>(windows, params, masks, &cache, nullptr);
  r.loss = cross_entropy<T>(r.probs, label);
  r.grads = params.zeros_like();
  auto& g = r.grads;

  std::vector<T> dh = head_backward<T>(cache.hidden, r.probs, label, params.head_kernel(), config.head,
                                       g.head_kernel(), g.head_bias());
  Matrix<T> dpooled = lstm_backward<T>(dh, cache.lstm, params.lstm_input_kernel(), params.lstm_recurrent_kernel(),
                                       g.lstm_input_kernel(), g.lstm_recurrent_kernel(), g.lstm_bias());
  Tensor3<T> dx = global_avg_pool_backward(dpooled, cache.last_width);
  for (std::size_t l = config.conv_layers; l >= 1; --l)
    dx = conv_block_backward(dx, cache.conv[l - 1], params.conv_kernel(l), g.conv_kernel(l), g.conv_bias(l));
  return r;
}

} // namespace ecgnet::nn
