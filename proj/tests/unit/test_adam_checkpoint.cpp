#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ecgnet/nn/adam.hpp"
#include "ecgnet/nn/checkpoint.hpp"
#include "support/gradcheck.hpp"

using namespace ecgnet;
using namespace ecgnet::nn;

namespace {

ArchitectureConfig tiny() {
  ArchitectureConfig c;
  c.window_size = 16;
  c.conv_layers = 2;
  c.first_channels = 2;
  c.lstm_units = 3;
  c.num_classes = 4;
  c.allow_nonstandard = true;
  return c;
}

// Scalar Adam written straight from the update rule.
struct ScalarAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double w, double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
    return w - lr * mh / (std::sqrt(vh) + 1e-8);
  }
};

} // namespace

TEST(Adam, MatchesScalarOracleOnQuadratic) {
  // loss = sum w^2, gradient 2w, three steps
  auto params = build_model<double>(tiny(), 3);
  const auto start = params;
  auto state = AdamState<double>::init(params, 1e-3);
  std::vector<ScalarAdam> oracle(params.total_count());
  std::vector<double> expect;
  for (const auto& a : start.arrays()) expect.insert(expect.end(), a.data.begin(), a.data.end());

  for (int s = 0; s < 3; ++s) {
    auto grads = params.zeros_like();
    for (std::size_t a = 0; a < grads.arrays().size(); ++a)
      for (std::size_t i = 0; i < grads.arrays()[a].data.size(); ++i)
        grads.arrays()[a].data[i] = 2.0 * params.arrays()[a].data[i];
    adam_step(params, grads, state);
    for (std::size_t i = 0; i < expect.size(); ++i) expect[i] = oracle[i].step(expect[i], 2.0 * expect[i], 1e-3);
  }
  EXPECT_EQ(state.step, 3u);
  std::size_t k = 0;
  for (const auto& a : params.arrays())
    for (double w : a.data) EXPECT_NEAR(w, expect[k++], 1e-12);
}

TEST(Adam, FirstStepMovesByLearningRateAgainstGradientSign) {
  auto params = build_model<double>(tiny(), 4);
  const auto before = params;
  auto grads = params.zeros_like();
  Rng rng(4);
  for (auto& a : grads.arrays()) ecgnet::testing::fill_normal(a.data, rng);
  auto state = AdamState<double>::init(params, 5e-4);
  adam_step(params, grads, state);
  for (std::size_t a = 0; a < params.arrays().size(); ++a)
    for (std::size_t i = 0; i < params.arrays()[a].data.size(); ++i) {
      const double g = grads.arrays()[a].data[i];
      const double delta = params.arrays()[a].data[i] - before.arrays()[a].data[i];
      const double expected = -5e-4 * g / (std::abs(g) + 1e-8);
      EXPECT_NEAR(delta, expected, 1e-15);
    }
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  auto params = build_model<double>(tiny(), 5);
  const auto before = params;
  auto state = AdamState<double>::init(params, 5e-4);
  adam_step(params, params.zeros_like(), state);
  EXPECT_TRUE(params == before);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, NonFiniteGradientRejectedWithoutSideEffects) {
  auto params = build_model<double>(tiny(), 6);
  const auto before = params;
  auto state = AdamState<double>::init(params, 5e-4);
  auto grads = params.zeros_like();
  grads.arrays()[2].data[0] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(adam_step(params, grads, state), NumericError);
  EXPECT_TRUE(params == before);
  EXPECT_EQ(state.step, 0u);
  EXPECT_THROW(AdamState<double>::init(params, 0.0), ConfigError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  for (auto [w, l] : {std::pair<std::size_t, std::size_t>{512, 7}, {1024, 8}}) {
    const auto params = build_model<double>(ArchitectureConfig::standard(w, l, 4), 17);
    std::stringstream ss;
    write_checkpoint(ss, params, {{"epoch", 12}});
    const auto back = read_checkpoint<double>(ss);
    EXPECT_TRUE(back.params == params);
    EXPECT_EQ(back.params.config().name(), params.config().name());
    EXPECT_EQ(back.meta.at("epoch"), 12);

    Tensor3<double> x(3, w, 1);
    Rng rng(1);
    ecgnet::testing::fill_normal(x.data(), rng);
    EXPECT_EQ(model_forward(x, params), model_forward(x, back.params));
  }
}

TEST(Checkpoint, FileRoundTripAndMissingFile) {
  const auto dir = std::filesystem::temp_directory_path() / "ecgnet_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto params = build_model<double>(ArchitectureConfig::standard(1024, 7, 2), 2);
  save_checkpoint(dir / "m.ckpt", params);
  EXPECT_TRUE(load_checkpoint(dir / "m.ckpt").params == params);
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt"), MissingFileError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, CorruptInputsAreFormatErrors) {
  const auto params = build_model<double>(tiny(), 2);
  std::stringstream good;
  write_checkpoint(good, params);
  const std::string bytes = good.str();

  auto read = [](const std::string& s) {
    std::stringstream in(s);
    return read_checkpoint<double>(in);
  };
  EXPECT_THROW(read("not a checkpoint\n"), FormatError);
  EXPECT_THROW(read(bytes.substr(0, bytes.size() - 3)), FormatError);
  EXPECT_THROW(read(bytes + "x"), FormatError);
  std::string renamed = bytes;
  renamed.replace(renamed.find("conv2.bias"), 10, "conv9.bias");
  EXPECT_THROW(read(renamed), FormatError);
}
