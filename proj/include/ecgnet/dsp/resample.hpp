#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "ecgnet/error.hpp"

namespace ecgnet::dsp {

struct ResamplerSpec {
  std::size_t taps_per_phase = 32;
  double kaiser_beta = 8.0;
};

/// Rational factor up/down in lowest terms.
struct Ratio {
  std::uint64_t up = 1;
  std::uint64_t down = 1;
};

/// Rates are compared at millihertz resolution, which covers every supported
/// source rate exactly.
inline Ratio rate_ratio(double fs_in, double fs_out) {
  if (!(fs_in > 0.0 && fs_out > 0.0)) throw UnsupportedRateError("sampling rates must be positive");
  const auto in_mhz = static_cast<std::uint64_t>(std::llround(fs_in * 1000.0));
  const auto out_mhz = static_cast<std::uint64_t>(std::llround(fs_out * 1000.0));
  if (in_mhz == 0 || out_mhz == 0) throw UnsupportedRateError("sampling rate below 1 mHz");
  const std::uint64_t g = std::gcd(in_mhz, out_mhz);
  const Ratio r{out_mhz / g, in_mhz / g};
  if (std::max(r.up, r.down) > 100000)
    throw UnsupportedRateError("resampling ratio " + std::to_string(r.up) + "/" + std::to_string(r.down) +
                               " is too large for polyphase resampling");
  return r;
}

/// round(n * up / down), halves rounding up.
inline std::size_t resampled_length(std::size_t n, Ratio r) {
  return static_cast<std::size_t>((2 * static_cast<std::uint64_t>(n) * r.up + r.down) / (2 * r.down));
}

/// Kaiser-windowed sinc low-pass at the upsampled rate, cut off at the lower
/// of the two Nyquist frequencies. Length taps_per_phase * max(up, down) + 1,
/// DC gain `up`.
inline std::vector<double> design_resampling_filter(Ratio r, const ResamplerSpec& spec = {}) {
  const std::uint64_t m = std::max(r.up, r.down);
  const std::size_t half = spec.taps_per_phase * m / 2;
  const std::size_t len = 2 * half + 1;
  const double fc = 0.5 / static_cast<double>(m);
  const double i0_beta = std::cyl_bessel_i(0.0, spec.kaiser_beta);
  std::vector<double> h(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double t = static_cast<double>(n) - static_cast<double>(half);
    const double arg = 2.0 * fc * t;
    const double sinc = t == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
    const double ratio = half == 0 ? 0.0 : t / static_cast<double>(half);
    const double w = std::cyl_bessel_i(0.0, spec.kaiser_beta * std::sqrt(std::max(0.0, 1.0 - ratio * ratio))) / i0_beta;
    h[n] = 2.0 * fc * sinc * w;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (double& v : h) v *= static_cast<double>(r.up) / sum;
  return h;
}

/// Polyphase rational resampling. Samples outside the signal are zero; the
/// filter is centred so there is no net delay.
inline std::vector<double> resample_poly(std::span<const double> x, Ratio r, const ResamplerSpec& spec = {}) {
  if (r.up == r.down) return {x.begin(), x.end()};
  const std::vector<double> h = design_resampling_filter(r, spec);
  const auto half = static_cast<std::int64_t>(h.size() / 2);
  const auto len = static_cast<std::int64_t>(h.size());
  const auto up = static_cast<std::int64_t>(r.up), down = static_cast<std::int64_t>(r.down);
  const auto n_in = static_cast<std::int64_t>(x.size());

  std::vector<double> y(resampled_length(x.size(), r));
  for (std::size_t m = 0; m < y.size(); ++m) {
    const std::int64_t centre = static_cast<std::int64_t>(m) * down + half;
    // filter index j = centre - k*up must lie in [0, len)
    std::int64_t k_lo = centre - (len - 1);
    k_lo = k_lo <= 0 ? 0 : (k_lo + up - 1) / up;
    const std::int64_t k_hi = std::min(centre / up, n_in - 1);
    double acc = 0.0;
    for (std::int64_t k = k_lo; k <= k_hi; ++k) acc += x[static_cast<std::size_t>(k)] * h[static_cast<std::size_t>(centre - k * up)];
    y[m] = acc;
  }
  return y;
}

inline std::vector<double> resample(std::span<const double> x, double fs_in, double fs_out = 200.0,
                                    const ResamplerSpec& spec = {}) {
  return resample_poly(x, rate_ratio(fs_in, fs_out), spec);
}

} // namespace ecgnet::dsp
