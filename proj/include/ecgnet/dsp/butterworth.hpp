#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ecgnet/error.hpp"

namespace ecgnet::dsp {

/// Second-order section with a0 normalised to 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

using Sos = std::vector<Biquad>;
using SosState = std::vector<std::array<double, 2>>;

/// Digital Butterworth band-pass of prototype order `order` (2*order poles),
/// designed by bilinear transform with pre-warped band edges, as cascaded
/// second-order sections. Unit gain at the geometric centre frequency.
inline Sos butter_bandpass(int order, double low_hz, double high_hz, double fs) {
  using cd = std::complex<double>;
  if (order < 1) throw ConfigError("filter order must be positive");
  if (!(low_hz > 0.0 && low_hz < high_hz)) throw ConfigError("band edges must satisfy 0 < low < high");
  if (!(fs > 2.0 * high_hz))
    throw UnsupportedRateError("sampling rate " + std::to_string(fs) + " Hz is too low for a " +
                               std::to_string(high_hz) + " Hz band edge");

  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * fs;
  const double w1 = fs2 * std::tan(pi * low_hz / fs);
  const double w2 = fs2 * std::tan(pi * high_hz / fs);
  const double bw = w2 - w1, w0 = std::sqrt(w1 * w2);

  std::vector<cd> poles;
  for (int k = 0; k < order; ++k) {
    const cd proto = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const cd half = proto * bw / 2.0;
    const cd root = std::sqrt(half * half - w0 * w0);
    for (const cd s : {half + root, half - root}) {
      const cd z = (fs2 + s) / (fs2 - s);
      if (z.imag() > 0.0) poles.push_back(z);
    }
  }
  if (poles.size() != static_cast<std::size_t>(order))
    throw NumericError("band-pass design produced real poles; band edges too close");
  std::sort(poles.begin(), poles.end(), [](cd a, cd b) { return std::abs(a) < std::abs(b); });

  Sos sos;
  for (const cd p : poles) sos.push_back({1.0, 0.0, -1.0, -2.0 * p.real(), std::norm(p)});

  // Normalise at the digital image of the analog centre frequency.
  const double centre = 2.0 * std::atan(w0 / fs2);
  const cd zc = std::polar(1.0, centre);
  cd h = 1.0;
  for (const auto& s : sos) h *= (s.b0 + s.b1 / zc + s.b2 / (zc * zc)) / (1.0 + s.a1 / zc + s.a2 / (zc * zc));
  const double g = std::pow(1.0 / std::abs(h), 1.0 / static_cast<double>(sos.size()));
  for (auto& s : sos) {
    s.b0 *= g;
    s.b1 *= g;
    s.b2 *= g;
  }
  return sos;
}

inline std::complex<double> frequency_response(const Sos& sos, double f_hz, double fs) {
  const std::complex<double> z = std::polar(1.0, 2.0 * std::numbers::pi * f_hz / fs);
  std::complex<double> h = 1.0;
  for (const auto& s : sos) h *= (s.b0 + s.b1 / z + s.b2 / (z * z)) / (1.0 + s.a1 / z + s.a2 / (z * z));
  return h;
}

/// Steady-state section states for a unit step input (transposed direct
/// form II), so that filtering x starting from zi * x[0] has no transient when
/// x is constant.
inline SosState sosfilt_zi(const Sos& sos) {
  SosState zi(sos.size());
  double scale = 1.0;
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const auto& s = sos[i];
    const double gain = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    const double z1 = s.b2 - s.a2 * gain;
    const double z0 = s.b1 - s.a1 * gain + z1;
    zi[i] = {scale * z0, scale * z1};
    scale *= gain;
  }
  return zi;
}

/// Causal cascade filtering, transposed direct form II. `state` is updated.
inline std::vector<double> sosfilt(const Sos& sos, std::span<const double> x, SosState& state) {
  if (state.size() != sos.size()) state.assign(sos.size(), {0.0, 0.0});
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = 0; i < sos.size(); ++i) {
    const auto& s = sos[i];
    double z0 = state[i][0], z1 = state[i][1];
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z0;
      z0 = s.b1 * in - s.a1 * out + z1;
      z1 = s.b2 * in - s.a2 * out;
      v = out;
    }
    state[i] = {z0, z1};
  }
  return y;
}

inline std::vector<double> sosfilt(const Sos& sos, std::span<const double> x) {
  SosState state(sos.size(), {0.0, 0.0});
  return sosfilt(sos, x, state);
}

/// Odd extension: `pad` reflected samples about each endpoint.
inline std::vector<double> odd_extend(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
  return ext;
}

/// One causal pass starting from the steady state for the first sample.
inline std::vector<double> sosfilt_steady(const Sos& sos, std::span<const double> x) {
  SosState state = sosfilt_zi(sos);
  const double x0 = x.empty() ? 0.0 : x.front();
  for (auto& s : state) {
    s[0] *= x0;
    s[1] *= x0;
  }
  return sosfilt(sos, x, state);
}

/// Default padding: three times the filter order at each end.
inline std::size_t default_padlen(const Sos& sos) { return 3 * 2 * sos.size(); }

/// Forward-backward (zero-phase) filtering with odd-extension edge padding.
/// Output has the length of the input.
inline std::vector<double> filtfilt(const Sos& sos, std::span<const double> x, std::size_t padlen) {
  if (x.size() < 2) throw ShapeError("zero-phase filtering needs at least two samples");
  const std::size_t pad = std::min(padlen, x.size() - 1);
  std::vector<double> y = sosfilt_steady(sos, odd_extend(x, pad));
  std::reverse(y.begin(), y.end());
  y = sosfilt_steady(sos, y);
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad), y.end() - static_cast<std::ptrdiff_t>(pad)};
}

struct BandpassSpec {
  double low_hz = 0.5;
  double high_hz = 40.0;
  int order = 4;
};

inline std::vector<double> bandpass_zero_phase(std::span<const double> x, double fs, const BandpassSpec& spec = {}) {
  const Sos sos = butter_bandpass(spec.order, spec.low_hz, spec.high_hz, fs);
  return filtfilt(sos, x, default_padlen(sos));
}

} // namespace ecgnet::dsp
