#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "ecgnet/data/batching.hpp"
#include "ecgnet/data/split.hpp"
#include "ecgnet/dsp/scale.hpp"
#include "ecgnet/error.hpp"
#include "ecgnet/nn/architecture.hpp"
#include "ecgnet/train/trainer.hpp"

namespace ecgnet {

/// Everything a run depends on. Defaults are the published training setup:
/// 100 epochs, batch 50, Adam at 5e-4 halved after 5 stale epochs down to
/// 1e-5, dropout 0.5, both augmentations on.
struct RunConfig {
  std::filesystem::path manifest;
  std::string split_targets = "physionet"; // or "cinc"
  nn::ArchitectureConfig architecture = nn::ArchitectureConfig::standard(512, 7, 4);
  dsp::PreprocessSpec preprocessing;
  std::size_t epochs = 100;
  std::size_t batch_size = 50;
  double learning_rate = 5e-4;
  std::size_t patience = 5;
  double lr_floor = 1e-5;
  data::AugmentOptions augment;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "run";
  std::size_t threads = 0; // 0 = all cores; results do not depend on it

  data::SplitTargets targets() const {
    if (split_targets == "physionet") return data::SplitTargets::physionet();
    if (split_targets == "cinc") return data::SplitTargets::cinc();
    throw ConfigError("split_targets must be 'physionet' or 'cinc', got '" + split_targets + "'");
  }

  train::TrainOptions train_options() const {
    train::TrainOptions o;
    o.epochs = epochs;
    o.batch_size = batch_size;
    o.learning_rate = learning_rate;
    o.patience = patience;
    o.lr_floor = lr_floor;
    o.augment = augment;
    o.seed = seed;
    o.threads = threads;
    return o;
  }

  void validate() const {
    architecture.validate();
    targets();
    if (batch_size == 0) throw ConfigError("batch_size must be positive");
    if (!(learning_rate > 0.0) || !(lr_floor > 0.0) || patience == 0)
      throw ConfigError("learning_rate, lr_floor and patience must be positive");
    if (!(preprocessing.bandpass.low_hz > 0.0 && preprocessing.bandpass.low_hz < preprocessing.bandpass.high_hz))
      throw ConfigError("band edges must satisfy 0 < low_hz < high_hz");
    if (!(preprocessing.target_fs > 2.0 * preprocessing.bandpass.high_hz))
      throw ConfigError("target_fs must exceed twice the upper band edge");
  }
};

inline void to_json(nlohmann::json& j, const RunConfig& c) {
  j = {{"manifest", c.manifest.generic_string()},
       {"split_targets", c.split_targets},
       {"architecture", c.architecture},
       {"preprocessing", c.preprocessing},
       {"training",
        {{"epochs", c.epochs},
         {"batch_size", c.batch_size},
         {"learning_rate", c.learning_rate},
         {"patience", c.patience},
         {"lr_floor", c.lr_floor}}},
       {"augmentation", {{"sign_flip", c.augment.sign_flip}, {"random_offset", c.augment.random_offset}}},
       {"seed", c.seed},
       {"out_dir", c.out_dir.generic_string()},
       {"threads", c.threads}};
}

namespace detail {
inline void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}
} // namespace detail

/// Missing keys take their defaults; unknown keys are rejected so typos do
/// not silently fall back to a default.
inline void from_json(const nlohmann::json& j, RunConfig& c) {
  detail::reject_unknown_keys(j,
                              {"manifest", "split_targets", "architecture", "preprocessing", "training",
                               "augmentation", "seed", "out_dir", "threads"},
                              "config");
  const RunConfig d;
  c.manifest = j.value("manifest", std::string{});
  c.split_targets = j.value("split_targets", d.split_targets);
  if (j.contains("architecture")) {
    detail::reject_unknown_keys(j["architecture"],
                                {"window_size", "conv_layers", "kernel_size", "pool_size", "first_channels",
                                 "lstm_units", "num_classes", "head", "dropout_rate", "allow_nonstandard"},
                                "architecture");
    c.architecture = j["architecture"].get<nn::ArchitectureConfig>();
  }
  if (j.contains("preprocessing")) {
    detail::reject_unknown_keys(
        j["preprocessing"], {"low_hz", "high_hz", "filter_order", "target_fs", "taps_per_phase", "kaiser_beta"},
        "preprocessing");
    c.preprocessing = j["preprocessing"].get<dsp::PreprocessSpec>();
  }
  const nlohmann::json t = j.value("training", nlohmann::json::object());
  detail::reject_unknown_keys(t, {"epochs", "batch_size", "learning_rate", "patience", "lr_floor"}, "training");
  c.epochs = t.value("epochs", d.epochs);
  c.batch_size = t.value("batch_size", d.batch_size);
  c.learning_rate = t.value("learning_rate", d.learning_rate);
  c.patience = t.value("patience", d.patience);
  c.lr_floor = t.value("lr_floor", d.lr_floor);
  const nlohmann::json a = j.value("augmentation", nlohmann::json::object());
  detail::reject_unknown_keys(a, {"sign_flip", "random_offset"}, "augmentation");
  c.augment.sign_flip = a.value("sign_flip", d.augment.sign_flip);
  c.augment.random_offset = a.value("random_offset", d.augment.random_offset);
  c.seed = j.value("seed", d.seed);
  c.out_dir = j.value("out_dir", d.out_dir.generic_string());
  c.threads = j.value("threads", d.threads);
}

/// Reads a config file; relative paths inside it are taken relative to the
/// file's directory.
inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw MissingFileError("cannot open config file '" + path.string() + "'");
  RunConfig c;
  try {
    c = nlohmann::json::parse(is).get<RunConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  const auto base = path.parent_path();
  if (!c.manifest.empty() && c.manifest.is_relative()) c.manifest = base / c.manifest;
  if (c.out_dir.is_relative()) c.out_dir = base / c.out_dir;
  return c;
}

} // namespace ecgnet
