#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "ecgnet/windowing.hpp"
#include "support/oracles.hpp"

using namespace ecgnet;

using ecgnet::testing::window_placement_brute_force;

TEST(WindowCount, PublishedExamples) {
  EXPECT_EQ(window_count(6000, 512), 22u);
  EXPECT_EQ(window_count(6000, 1024), 10u);
  EXPECT_EQ(window_count(512, 512), 1u);
  EXPECT_EQ(max_offset(6000, 512), 112u);
  EXPECT_EQ(max_offset(6000, 1024), 368u);
  EXPECT_EQ(max_offset(512, 512), 0u);
}

TEST(WindowCount, MatchesBruteForcePlacement) {
  for (std::size_t w : {512u, 1024u})
    for (std::size_t m = w; m <= 4 * w; ++m) {
      const auto [n, off] = window_placement_brute_force(m, w);
      ASSERT_EQ(window_count(m, w), n) << "M=" << m << " W=" << w;
      ASSERT_EQ(max_offset(m, w), off) << "M=" << m << " W=" << w;
    }
}

TEST(WindowCount, Errors) {
  EXPECT_THROW(window_count(511, 512), SignalTooShortError);
  EXPECT_THROW(window_count(100, 0), ConfigError);
  EXPECT_THROW(window_count(100, 31), ConfigError);
  EXPECT_THROW(plan_windows(6000, 512, 113), ConfigError);
  EXPECT_NO_THROW(plan_windows(6000, 512, 112));
}

TEST(ExtractWindows, RampStartsAtHalfWindowStride) {
  std::vector<double> x(1024);
  std::iota(x.begin(), x.end(), 0.0);
  const auto t = extract_windows(x, 512);
  ASSERT_EQ(t.windows(), 3u);
  EXPECT_EQ(t(0, 0, 0), 0.0);
  EXPECT_EQ(t(1, 0, 0), 256.0);
  EXPECT_EQ(t(2, 0, 0), 512.0);
  EXPECT_EQ(t(2, 511, 0), 1023.0);
  EXPECT_THROW(extract_windows(x, 512, 1), ConfigError);
}

TEST(ExtractWindows, CoverageMatchesIndexOracle) {
  for (std::size_t w : {512u, 1024u})
    for (std::size_t m : {w, w + 1, w + w / 2, std::size_t{6000}, 4 * w}) {
      std::vector<double> x(m);
      std::iota(x.begin(), x.end(), 0.0);
      for (std::size_t off : {std::size_t{0}, max_offset(m, w) / 2, max_offset(m, w)}) {
        const auto t = extract_windows(x, w, off);
        const std::size_t n = t.windows();
        std::set<std::size_t> covered;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < w; ++j) {
            const double v = t(i, j, 0);
            ASSERT_LT(v, static_cast<double>(m));
            covered.insert(static_cast<std::size_t>(v));
          }
        EXPECT_EQ(covered.size(), (n - 1) * w / 2 + w);
        EXPECT_EQ(*covered.begin(), off);
        EXPECT_EQ(*covered.rbegin(), off + (n - 1) * w / 2 + w - 1);
        // consecutive windows share exactly w/2 samples
        for (std::size_t i = 0; i + 1 < n; ++i) EXPECT_EQ(t(i, w / 2, 0), t(i + 1, 0, 0));
      }
    }
}

TEST(Augment, FlipDisabledKeepsSignal) {
  Rng rng(1);
  std::vector<double> x(6000);
  std::iota(x.begin(), x.end(), -3000.0);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_augment(x, 512, rng, false);
    EXPECT_FALSE(a.flipped);
    EXPECT_EQ(a.signal, x);
    EXPECT_LE(a.offset, 112u);
  }
  const auto a = random_augment(x, 512, rng, false, false);
  EXPECT_EQ(a.offset, 0u);
}

TEST(Augment, FlipFrequencyAndOffsetUniformity) {
  Rng rng(2024);
  const std::vector<double> x(6000, 1.0);
  const int draws = 10000;
  int flips = 0;
  std::vector<int> hist(113, 0);
  for (int i = 0; i < draws; ++i) {
    const auto a = random_augment(x, 512, rng, true);
    flips += a.flipped;
    EXPECT_EQ(a.signal[0], a.flipped ? -1.0 : 1.0);
    ASSERT_LE(a.offset, 112u);
    ++hist[a.offset];
  }
  const double rate = static_cast<double>(flips) / draws;
  EXPECT_GE(rate, 0.48);
  EXPECT_LE(rate, 0.52);
  const double p = 1.0 / 113.0;
  const double sigma = std::sqrt(draws * p * (1 - p));
  for (std::size_t k = 0; k < hist.size(); ++k)
    EXPECT_LE(std::abs(hist[k] - draws * p), 3 * sigma + 1) << "offset " << k;
}

TEST(Augment, DrawOrderIsFlipThenOffset) {
  const std::vector<double> x(6000, 1.0);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const auto got = random_augment(x, 512, a, true);
    const bool flip = b.bernoulli(0.5);
    const auto off = b.uniform_int(112);
    EXPECT_EQ(got.flipped, flip);
    EXPECT_EQ(got.offset, off);
  }
}

TEST(PadFront, PrependsZeroWindows) {
  std::vector<double> x(1024, 2.0);
  const auto t = extract_windows(x, 512);
  const auto p = pad_front(t, 5);
  ASSERT_EQ(p.windows(), 5u);
  for (std::size_t i = 0; i < 2; ++i)
    for (double v : p.window(i)) EXPECT_EQ(v, 0.0);
  for (std::size_t i = 2; i < 5; ++i)
    for (double v : p.window(i)) EXPECT_EQ(v, 2.0);
  EXPECT_THROW(pad_front(t, 2), ShapeError);
}
