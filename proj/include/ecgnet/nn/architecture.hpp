#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgnet/error.hpp"

namespace ecgnet::nn {

enum class HeadKind { softmax, logistic };

inline std::string to_string(HeadKind h) { return h == HeadKind::softmax ? "softmax" : "logistic"; }

inline HeadKind head_from_string(const std::string& s) {
  if (s == "softmax") return HeadKind::softmax;
  if (s == "logistic") return HeadKind::logistic;
  throw ConfigError("unknown head kind '" + s + "'");
}

/// Network shape. The three published variants are (512, 7), (1024, 7) and
/// (1024, 8); anything else needs allow_nonstandard (used for small test
/// models).
struct ArchitectureConfig {
  std::size_t window_size = 512;
  std::size_t conv_layers = 7;
  std::size_t kernel_size = 5;
  std::size_t pool_size = 2;
  std::size_t first_channels = 8;
  std::size_t lstm_units = 128;
  std::size_t num_classes = 4;
  HeadKind head = HeadKind::softmax;
  double dropout_rate = 0.5;
  bool allow_nonstandard = false;

  static ArchitectureConfig standard(std::size_t window, std::size_t layers, std::size_t classes) {
    ArchitectureConfig c;
    c.window_size = window;
    c.conv_layers = layers;
    c.num_classes = classes;
    c.head = classes == 2 ? HeadKind::logistic : HeadKind::softmax;
    c.validate();
    return c;
  }

  static bool is_standard_pair(std::size_t window, std::size_t layers) {
    return (window == 512 && layers == 7) || (window == 1024 && layers == 7) || (window == 1024 && layers == 8);
  }

  void validate() const {
    if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (head == HeadKind::logistic && num_classes != 2) throw ConfigError("logistic head requires exactly 2 classes");
    if (head == HeadKind::softmax && num_classes < 3)
      throw ConfigError("softmax head requires at least 3 classes; use the logistic head for 2");
    if (window_size == 0 || window_size % 2 != 0) throw ConfigError("window size must be even");
    if (pool_size != 2) throw ConfigError("only pool size 2 is supported");
    if (kernel_size == 0 || kernel_size % 2 == 0) throw ConfigError("kernel size must be odd");
    if (conv_layers == 0 || conv_layers > 30 || first_channels == 0 || lstm_units == 0)
      throw ConfigError("conv_layers, first_channels and lstm_units must be positive");
    if ((window_size >> conv_layers) == 0 || (window_size % (std::size_t{1} << conv_layers)) != 0)
      throw ConfigError("window size " + std::to_string(window_size) + " cannot be halved " +
                        std::to_string(conv_layers) + " times");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
    if (!allow_nonstandard) {
      if (!is_standard_pair(window_size, conv_layers))
        throw ConfigError("unsupported architecture (W=" + std::to_string(window_size) +
                          ", L=" + std::to_string(conv_layers) + "); expected 512x7, 1024x7 or 1024x8");
      if (kernel_size != 5 || first_channels != 8 || lstm_units != 128)
        throw ConfigError("standard architectures use kernel 5, 8 first channels and 128 LSTM units");
    }
  }

  /// Output channels of conv layer `layer` (1-based).
  std::size_t out_channels(std::size_t layer) const { return first_channels << (layer - 1); }
  std::size_t in_channels(std::size_t layer) const { return layer == 1 ? 1 : out_channels(layer - 1); }
  /// Window width after conv layer `layer` (0 = input).
  std::size_t width_after(std::size_t layer) const { return window_size >> layer; }
  /// Feature size fed to the LSTM.
  std::size_t features() const { return out_channels(conv_layers); }
  std::size_t head_outputs() const { return head == HeadKind::logistic ? 1 : num_classes; }

  std::string name() const { return std::to_string(window_size) + "x" + std::to_string(conv_layers); }

  bool operator==(const ArchitectureConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ArchitectureConfig& c) {
  j = nlohmann::json{{"window_size", c.window_size},   {"conv_layers", c.conv_layers},
                     {"kernel_size", c.kernel_size},   {"pool_size", c.pool_size},
                     {"first_channels", c.first_channels}, {"lstm_units", c.lstm_units},
                     {"num_classes", c.num_classes},   {"head", to_string(c.head)},
                     {"dropout_rate", c.dropout_rate}, {"allow_nonstandard", c.allow_nonstandard}};
}

inline void from_json(const nlohmann::json& j, ArchitectureConfig& c) {
  ArchitectureConfig d;
  c.window_size = j.value("window_size", d.window_size);
  c.conv_layers = j.value("conv_layers", d.conv_layers);
  c.kernel_size = j.value("kernel_size", d.kernel_size);
  c.pool_size = j.value("pool_size", d.pool_size);
  c.first_channels = j.value("first_channels", d.first_channels);
  c.lstm_units = j.value("lstm_units", d.lstm_units);
  c.num_classes = j.value("num_classes", d.num_classes);
  c.head = j.contains("head") ? head_from_string(j.at("head").get<std::string>())
                              : (c.num_classes == 2 ? HeadKind::logistic : HeadKind::softmax);
  c.dropout_rate = j.value("dropout_rate", d.dropout_rate);
  c.allow_nonstandard = j.value("allow_nonstandard", d.allow_nonstandard);
}

/// One row of the per-layer output-shape table.
struct LayerShape {
  std::string layer;
  std::vector<std::size_t> dims;
  bool operator==(const LayerShape&) const = default;
};

/// Output shape of every stage for a signal cut into `windows` windows.
inline std::vector<LayerShape> shape_trace(const ArchitectureConfig& c, std::size_t windows) {
  std::vector<LayerShape> rows;
  rows.push_back({"input", {windows, c.window_size, 1}});
  for (std::size_t l = 1; l <= c.conv_layers; ++l)
    rows.push_back({"conv" + std::to_string(l), {windows, c.width_after(l), c.out_channels(l)}});
  rows.push_back({"global_avg_pool", {windows, c.features()}});
  rows.push_back({"lstm", {c.lstm_units}});
  rows.push_back({to_string(c.head), {c.head_outputs()}});
  return rows;
}

} // namespace ecgnet::nn
