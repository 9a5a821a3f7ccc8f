#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/architecture.hpp"
#include "ecgnet/rng.hpp"

namespace ecgnet::nn {

template <typename T>
struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> data;

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
  }
};

/// All trainable arrays of one network, in a fixed order:
///
///   conv{l}.kernel  (kernel, in, out)   conv{l}.bias (out)      for l = 1..L
///   lstm.input_kernel (F, 4H)  lstm.recurrent_kernel (H, 4H)  lstm.bias (4H)
///   head.kernel (H, K')  head.bias (K')
///
/// LSTM gate blocks along the 4H axis are ordered input, forget, cell, output.
/// K' is 1 for the logistic head.
template <typename T>
class ModelParams {
public:
  ModelParams() = default;

  /// Zero-filled parameters shaped for `config`.
  explicit ModelParams(const ArchitectureConfig& config) : config_(config) {
    config_.validate();
    const std::size_t k = config.kernel_size;
    for (std::size_t l = 1; l <= config.conv_layers; ++l) {
      add("conv" + std::to_string(l) + ".kernel", {k, config.in_channels(l), config.out_channels(l)});
      add("conv" + std::to_string(l) + ".bias", {config.out_channels(l)});
    }
    const std::size_t h = config.lstm_units;
    add("lstm.input_kernel", {config.features(), 4 * h});
    add("lstm.recurrent_kernel", {h, 4 * h});
    add("lstm.bias", {4 * h});
    add("head.kernel", {h, config.head_outputs()});
    add("head.bias", {config.head_outputs()});
  }

  const ArchitectureConfig& config() const { return config_; }

  std::vector<NamedArray<T>>& arrays() { return arrays_; }
  const std::vector<NamedArray<T>>& arrays() const { return arrays_; }

  std::size_t total_count() const {
    std::size_t n = 0;
    for (const auto& a : arrays_) n += a.data.size();
    return n;
  }

  NamedArray<T>& conv_kernel(std::size_t layer) { return arrays_[2 * (layer - 1)]; }
  const NamedArray<T>& conv_kernel(std::size_t layer) const { return arrays_[2 * (layer - 1)]; }
  NamedArray<T>& conv_bias(std::size_t layer) { return arrays_[2 * (layer - 1) + 1]; }
  const NamedArray<T>& conv_bias(std::size_t layer) const { return arrays_[2 * (layer - 1) + 1]; }

  NamedArray<T>& lstm_input_kernel() { return arrays_[lstm_base()]; }
  const NamedArray<T>& lstm_input_kernel() const { return arrays_[lstm_base()]; }
  NamedArray<T>& lstm_recurrent_kernel() { return arrays_[lstm_base() + 1]; }
  const NamedArray<T>& lstm_recurrent_kernel() const { return arrays_[lstm_base() + 1]; }
  NamedArray<T>& lstm_bias() { return arrays_[lstm_base() + 2]; }
  const NamedArray<T>& lstm_bias() const { return arrays_[lstm_base() + 2]; }
  NamedArray<T>& head_kernel() { return arrays_[lstm_base() + 3]; }
  const NamedArray<T>& head_kernel() const { return arrays_[lstm_base() + 3]; }
  NamedArray<T>& head_bias() { return arrays_[lstm_base() + 4]; }
  const NamedArray<T>& head_bias() const { return arrays_[lstm_base() + 4]; }

  /// Same shapes, every element zero.
  ModelParams zeros_like() const {
    ModelParams z = *this;
    for (auto& a : z.arrays_) std::fill(a.data.begin(), a.data.end(), T{0});
    return z;
  }

  bool congruent(const ModelParams& o) const {
    if (arrays_.size() != o.arrays_.size()) return false;
    for (std::size_t i = 0; i < arrays_.size(); ++i)
      if (arrays_[i].name != o.arrays_[i].name || arrays_[i].shape != o.arrays_[i].shape) return false;
    return true;
  }

  bool all_finite() const {
    for (const auto& a : arrays_)
      for (T v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
  }

  /// this += scale * o
  void axpy(T scale, const ModelParams& o) {
    for (std::size_t i = 0; i < arrays_.size(); ++i)
      for (std::size_t j = 0; j < arrays_[i].data.size(); ++j) arrays_[i].data[j] += scale * o.arrays_[i].data[j];
  }

  void scale(T s) {
    for (auto& a : arrays_)
      for (T& v : a.data) v *= s;
  }

  bool operator==(const ModelParams& o) const {
    if (!(config_ == o.config_) || !congruent(o)) return false;
    for (std::size_t i = 0; i < arrays_.size(); ++i)
      if (arrays_[i].data != o.arrays_[i].data) return false;
    return true;
  }

private:
  std::size_t lstm_base() const { return 2 * config_.conv_layers; }

  void add(std::string name, std::vector<std::size_t> shape) {
    const std::size_t n = NamedArray<T>::element_count(shape);
    arrays_.push_back({std::move(name), std::move(shape), std::vector<T>(n, T{0})});
  }

  ArchitectureConfig config_;
  std::vector<NamedArray<T>> arrays_;
};

namespace detail {
template <typename T>
void fill_uniform(std::vector<T>& v, double limit, Rng& rng) {
  for (T& x : v) x = static_cast<T>(rng.uniform(-limit, limit));
}
} // namespace detail

/// Initialised network. Conv and dense kernels are Glorot-uniform, the
/// recurrent kernel is Glorot-uniform on (H, 4H), biases are zero except the
/// LSTM forget-gate block which starts at one. Draws happen in array order from
/// a stream seeded by `seed`.
template <typename T = double>
ModelParams<T> build_model(const ArchitectureConfig& config, std::uint64_t seed) {
  ModelParams<T> p(config);
  Rng rng(seed);
  const double k = static_cast<double>(config.kernel_size);
  for (std::size_t l = 1; l <= config.conv_layers; ++l) {
    const double fan_in = k * static_cast<double>(config.in_channels(l));
    const double fan_out = k * static_cast<double>(config.out_channels(l));
    detail::fill_uniform(p.conv_kernel(l).data, std::sqrt(6.0 / (fan_in + fan_out)), rng);
  }
  const double h = static_cast<double>(config.lstm_units);
  const double f = static_cast<double>(config.features());
  detail::fill_uniform(p.lstm_input_kernel().data, std::sqrt(6.0 / (f + 4.0 * h)), rng);
  detail::fill_uniform(p.lstm_recurrent_kernel().data, std::sqrt(6.0 / (h + 4.0 * h)), rng);
  auto& b = p.lstm_bias().data;
  for (std::size_t j = config.lstm_units; j < 2 * config.lstm_units; ++j) b[j] = T{1};
  detail::fill_uniform(p.head_kernel().data, std::sqrt(6.0 / (h + static_cast<double>(config.head_outputs()))), rng);
  return p;
}

} // namespace ecgnet::nn
