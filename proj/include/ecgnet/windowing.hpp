#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecgnet/error.hpp"
#include "ecgnet/rng.hpp"
#include "ecgnet/tensor.hpp"

namespace ecgnet {

class SignalTooShortError : public DataError {
public:
  using DataError::DataError;
};

namespace detail {
inline void check_window(std::size_t m, std::size_t w) {
  if (w == 0 || w % 2 != 0) throw ConfigError("window size must be even and positive");
  if (m < w)
    throw SignalTooShortError("signal of " + std::to_string(m) + " samples is shorter than a window of " +
                              std::to_string(w));
}
} // namespace detail

/// Largest number of half-overlapping windows of size w in m samples:
/// floor(2(m - w) / w) + 1.
inline std::size_t window_count(std::size_t m, std::size_t w) {
  detail::check_window(m, w);
  return 2 * (m - w) / w + 1;
}

/// Largest admissible start offset when window_count(m, w) windows are kept.
inline std::size_t max_offset(std::size_t m, std::size_t w) {
  const std::size_t n = window_count(m, w);
  return m - (n - 1) * (w / 2) - w;
}

struct WindowPlan {
  std::size_t signal_length = 0;
  std::size_t window_size = 0;
  std::size_t count = 0;
  std::size_t offset = 0;

  std::size_t start(std::size_t i) const { return offset + i * (window_size / 2); }
};

inline WindowPlan plan_windows(std::size_t m, std::size_t w, std::size_t offset = 0) {
  WindowPlan p{m, w, window_count(m, w), offset};
  if (offset > max_offset(m, w))
    throw ConfigError("window offset " + std::to_string(offset) + " exceeds maximum " +
                      std::to_string(max_offset(m, w)));
  return p;
}

/// Windows i = x[offset + i*w/2, offset + i*w/2 + w) as an (N, w, 1) tensor,
/// always using the maximum window count.
template <typename T = double>
Tensor3<T> extract_windows(std::span<const double> x, std::size_t w, std::size_t offset = 0) {
  const WindowPlan plan = plan_windows(x.size(), w, offset);
  Tensor3<T> out(plan.count, w, 1);
  for (std::size_t i = 0; i < plan.count; ++i) {
    auto dst = out.window(i);
    const std::size_t s = plan.start(i);
    for (std::size_t j = 0; j < w; ++j) dst[j] = static_cast<T>(x[s + j]);
  }
  return out;
}

struct Augmented {
  std::vector<double> signal;
  std::size_t offset = 0;
  bool flipped = false;
};

/// Training-time augmentation. Draw order from `rng`: the sign flip (one
/// uniform, only when flip_enabled), then the offset (one bounded integer,
/// only when offset_enabled).
inline Augmented random_augment(std::span<const double> x, std::size_t w, Rng& rng, bool flip_enabled,
                                bool offset_enabled = true) {
  Augmented a{{x.begin(), x.end()}, 0, false};
  if (flip_enabled && rng.bernoulli(0.5)) {
    a.flipped = true;
    for (double& v : a.signal) v = -v;
  }
  if (offset_enabled) a.offset = static_cast<std::size_t>(rng.uniform_int(max_offset(x.size(), w)));
  return a;
}

/// Prepends all-zero windows so the tensor holds `target` windows.
template <typename T>
Tensor3<T> pad_front(const Tensor3<T>& x, std::size_t target) {
  if (target < x.windows()) throw ShapeError("cannot pad to fewer windows than present");
  Tensor3<T> out(target, x.width(), x.channels());
  const std::size_t skip = (target - x.windows()) * x.width() * x.channels();
  std::copy(x.data().begin(), x.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(skip));
  return out;
}

} // namespace ecgnet
