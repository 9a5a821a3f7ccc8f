#pragma once

// Finite-difference checks of every layer type and of a small composed
// model, on random tensors. Each returns the worst relative error found.

#include <vector>

#include "ecgnet/nn/layers.hpp"
#include "ecgnet/nn/model.hpp"
#include "support/gradcheck.hpp"

namespace ecgnet::testing {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// W=64 with three conv layers: the standard stack truncated for speed.
inline nn::ArchitectureConfig toy_config(std::size_t classes) {
  nn::ArchitectureConfig c;
  c.window_size = 64;
  c.conv_layers = 3;
  c.first_channels = 2;
  c.lstm_units = 4;
  c.num_classes = classes;
  c.head = classes == 2 ? nn::HeadKind::logistic : nn::HeadKind::softmax;
  c.allow_nonstandard = true;
  c.validate();
  return c;
}

// Scalar losses below are random projections of the layer output, so every
// output element carries a distinct upstream gradient.

inline GradCheck conv_block_check(std::uint64_t seed) {
  using namespace nn;
  Rng rng(seed);
  Tensor3<double> x(2, 16, 3);
  fill_normal(x.data(), rng);
  NamedArray<double> kernel{"k", {5, 3, 4}, std::vector<double>(60)};
  NamedArray<double> bias{"b", {4}, std::vector<double>(4)};
  fill_normal(kernel.data, rng, 0.5);
  fill_normal(bias.data, rng, 0.1);
  std::vector<double> proj(2 * 8 * 4);
  fill_normal(proj, rng);

  auto loss = [&] { return dot(conv_block_forward(x, kernel, bias).data(), proj); };

  ConvCache<double> cache;
  conv_block_forward(x, kernel, bias, &cache);
  Tensor3<double> gout(2, 8, 4);
  gout.data() = proj;
  NamedArray<double> gk{"gk", kernel.shape, std::vector<double>(60, 0.0)};
  NamedArray<double> gb{"gb", bias.shape, std::vector<double>(4, 0.0)};
  const Tensor3<double> gx = conv_block_backward(gout, cache, kernel, gk, gb);

  GradCheck r;
  check_vector(kernel.data, gk.data, loss, "conv.kernel", r);
  check_vector(bias.data, gb.data, loss, "conv.bias", r);
  check_vector(x.data(), gx.data(), loss, "conv.input", r);
  return r;
}

inline GradCheck global_pool_check(std::uint64_t seed) {
  using namespace nn;
  Rng rng(seed);
  Tensor3<double> x(3, 8, 5);
  fill_normal(x.data(), rng);
  std::vector<double> proj(15);
  fill_normal(proj, rng);
  auto loss = [&] { return dot(global_avg_pool(x).data(), proj); };
  Matrix<double> g(3, 5);
  g.data() = proj;
  const auto gx = global_avg_pool_backward(g, 8);
  GradCheck r;
  check_vector(x.data(), gx.data(), loss, "pool.input", r);
  return r;
}

inline GradCheck lstm_check(std::uint64_t seed, bool masked) {
  using namespace nn;
  Rng rng(seed);
  const std::size_t steps = 4, f = 3, h = 5;
  Matrix<double> seq(steps, f);
  fill_normal(seq.data(), rng);
  NamedArray<double> wx{"wx", {f, 4 * h}, std::vector<double>(f * 4 * h)};
  NamedArray<double> wh{"wh", {h, 4 * h}, std::vector<double>(h * 4 * h)};
  NamedArray<double> b{"b", {4 * h}, std::vector<double>(4 * h)};
  fill_normal(wx.data, rng, 0.5);
  fill_normal(wh.data, rng, 0.5);
  fill_normal(b.data, rng, 0.3);
  LstmMasks<double> masks{{2.0, 0.0, 2.0}, {0.0, 2.0, 2.0, 2.0, 0.0}};
  const LstmMasks<double>* m = masked ? &masks : nullptr;
  std::vector<double> proj(h);
  fill_normal(proj, rng);

  auto loss = [&] { return dot(lstm_forward(seq, wx, wh, b, m), proj); };
  LstmCache<double> cache;
  lstm_forward(seq, wx, wh, b, m, &cache);
  NamedArray<double> gwx{"", wx.shape, std::vector<double>(wx.data.size())};
  NamedArray<double> gwh{"", wh.shape, std::vector<double>(wh.data.size())};
  NamedArray<double> gb{"", b.shape, std::vector<double>(b.data.size())};
  const auto gseq = lstm_backward<double>(proj, cache, wx, wh, gwx, gwh, gb);

  GradCheck r;
  check_vector(wx.data, gwx.data, loss, "lstm.input_kernel", r);
  check_vector(wh.data, gwh.data, loss, "lstm.recurrent_kernel", r);
  check_vector(b.data, gb.data, loss, "lstm.bias", r);
  check_vector(seq.data(), gseq.data(), loss, "lstm.sequence", r);
  return r;
}

/// Head plus cross-entropy, as the model uses them.
inline GradCheck head_check(std::uint64_t seed, nn::HeadKind kind) {
  using namespace nn;
  Rng rng(seed);
  const std::size_t h = 6, k = kind == HeadKind::logistic ? 1 : 4;
  std::vector<double> hidden(h);
  fill_normal(hidden, rng);
  NamedArray<double> w{"w", {h, k}, std::vector<double>(h * k)};
  NamedArray<double> b{"b", {k}, std::vector<double>(k)};
  fill_normal(w.data, rng);
  fill_normal(b.data, rng);
  const std::size_t label = 1;
  auto loss = [&] { return cross_entropy<double>(head_forward<double>(hidden, w, b, kind), label); };
  const auto probs = head_forward<double>(hidden, w, b, kind);
  NamedArray<double> gw{"", w.shape, std::vector<double>(w.data.size())};
  NamedArray<double> gb{"", b.shape, std::vector<double>(b.data.size())};
  const auto gh = head_backward<double>(hidden, probs, label, w, kind, gw, gb);
  GradCheck r;
  check_vector(w.data, gw.data, loss, "head.kernel", r);
  check_vector(b.data, gb.data, loss, "head.bias", r);
  check_vector(hidden, gh, loss, "head.hidden", r);
  return r;
}

/// Every parameter of the toy model; biases are randomised so no gradient
/// is trivially zero. With `dropout`, a fixed pair of masks is sampled.
inline GradCheck composed_check(std::size_t classes, std::uint64_t seed, bool dropout, std::size_t label) {
  const auto config = toy_config(classes);
  auto params = nn::build_model<double>(config, seed);
  Rng rng(seed + 1);
  for (auto& a : params.arrays())
    if (a.name.ends_with("bias")) fill_normal(a.data, rng, 0.1);
  Tensor3<double> x(2, 64, 1);
  fill_normal(x.data(), rng);
  if (!dropout) return check_model(params, x, label, nullptr);
  const auto masks = nn::sample_dropout_masks<double>(config, rng);
  return check_model(params, x, label, &masks);
}

} // namespace ecgnet::testing
