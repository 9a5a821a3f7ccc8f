#pragma once

#include <cmath>
#include <cstdint>

#include "ecgnet/error.hpp"
#include "ecgnet/nn/params.hpp"

namespace ecgnet::nn {

template <typename T>
struct AdamState {
  ModelParams<T> first_moment;
  ModelParams<T> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const ModelParams<T>& params, double learning_rate) {
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    AdamState s;
    s.first_moment = params.zeros_like();
    s.second_moment = params.zeros_like();
    s.learning_rate = learning_rate;
    return s;
  }
};

/// One bias-corrected Adam update. Throws before touching anything if a
/// gradient is non-finite.
template <typename T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, AdamState<T>& state) {
  if (!params.congruent(grads) || !params.congruent(state.first_moment) || !params.congruent(state.second_moment))
    throw ShapeError("Adam: parameter, gradient and moment shapes differ");
  if (!grads.all_finite()) throw NumericError("Adam: non-finite gradient");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(state.beta1), b2 = static_cast<T>(state.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(state.beta1, t));
  const T c2 = static_cast<T>(1.0 - std::pow(state.beta2, t));
  const T lr = static_cast<T>(state.learning_rate), eps = static_cast<T>(state.epsilon);

  auto& p = params.arrays();
  const auto& g = grads.arrays();
  auto& m = state.first_moment.arrays();
  auto& v = state.second_moment.arrays();
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (std::size_t i = 0; i < p[a].data.size(); ++i) {
      const T gi = g[a].data[i];
      T& mi = m[a].data[i];
      T& vi = v[a].data[i];
      mi = b1 * mi + (T{1} - b1) * gi;
      vi = b2 * vi + (T{1} - b2) * gi * gi;
      const T mhat = mi / c1;
      const T vhat = vi / c2;
      p[a].data[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

} // namespace ecgnet::nn
