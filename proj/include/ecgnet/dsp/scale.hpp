#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgnet/dsp/butterworth.hpp"
#include "ecgnet/dsp/resample.hpp"
#include "ecgnet/error.hpp"

namespace ecgnet::dsp {

/// Population standard deviation (divides by n).
inline double standard_deviation(std::span<const double> x) {
  if (x.empty()) throw ShapeError("standard deviation of an empty signal");
  // A constant signal must give exactly zero, not a rounding residue.
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); })) return 0.0;
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

/// Per-database amplitude scale: mean of per-signal standard deviations over
/// the training split.
struct ScaleStats {
  std::map<std::string, double> by_database;

  double at(const std::string& database) const {
    auto it = by_database.find(database);
    if (it == by_database.end()) throw ConfigError("no scale statistics for database '" + database + "'");
    return it->second;
  }

  bool operator==(const ScaleStats&) const = default;
};

/// Mean of standard deviations, folded in the given order.
inline double mean_of_stds(const std::vector<std::span<const double>>& signals) {
  if (signals.empty()) throw ConfigError("cannot compute scale from an empty training split");
  double sum = 0.0;
  for (const auto& s : signals) sum += standard_deviation(s);
  return sum / static_cast<double>(signals.size());
}

/// `training` maps database id to that database's training signals.
inline ScaleStats compute_scale(const std::map<std::string, std::vector<std::span<const double>>>& training) {
  ScaleStats stats;
  for (const auto& [db, signals] : training) {
    if (signals.empty()) throw ConfigError("database '" + db + "' has no training signals");
    const double s = mean_of_stds(signals);
    if (!(std::isfinite(s) && s > 0.0))
      throw NumericError("database '" + db + "' has degenerate scale " + std::to_string(s));
    stats.by_database[db] = s;
  }
  if (stats.by_database.empty()) throw ConfigError("cannot compute scale from an empty training split");
  return stats;
}

inline std::vector<double> apply_scale(std::span<const double> x, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("scale must be positive and finite");
  std::vector<double> y(x.begin(), x.end());
  for (double& v : y) v /= scale;
  return y;
}

inline void to_json(nlohmann::json& j, const ScaleStats& s) { j = nlohmann::json{{"scale", s.by_database}}; }
inline void from_json(const nlohmann::json& j, ScaleStats& s) {
  s.by_database = j.at("scale").get<std::map<std::string, double>>();
}

struct PreprocessSpec {
  BandpassSpec bandpass;
  double target_fs = 200.0;
  ResamplerSpec resampler;
};

inline void to_json(nlohmann::json& j, const PreprocessSpec& p) {
  j = {{"low_hz", p.bandpass.low_hz},
       {"high_hz", p.bandpass.high_hz},
       {"filter_order", p.bandpass.order},
       {"target_fs", p.target_fs},
       {"taps_per_phase", p.resampler.taps_per_phase},
       {"kaiser_beta", p.resampler.kaiser_beta}};
}

inline void from_json(const nlohmann::json& j, PreprocessSpec& p) {
  const PreprocessSpec d;
  p.bandpass.low_hz = j.value("low_hz", d.bandpass.low_hz);
  p.bandpass.high_hz = j.value("high_hz", d.bandpass.high_hz);
  p.bandpass.order = j.value("filter_order", d.bandpass.order);
  p.target_fs = j.value("target_fs", d.target_fs);
  p.resampler.taps_per_phase = j.value("taps_per_phase", d.resampler.taps_per_phase);
  p.resampler.kaiser_beta = j.value("kaiser_beta", d.resampler.kaiser_beta);
}

/// Band-pass then resample. Scaling is applied separately because its
/// statistics come from the training split.
inline std::vector<double> filter_and_resample(std::span<const double> x, double fs, const PreprocessSpec& spec = {}) {
  const std::vector<double> filtered = bandpass_zero_phase(x, fs, spec.bandpass);
  return resample(filtered, fs, spec.target_fs, spec.resampler);
}

} // namespace ecgnet::dsp
