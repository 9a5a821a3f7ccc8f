#pragma once

// Architecture facts written out independently of ModelParams: a closed-form
// parameter count and the published per-layer output sizes.

#include <cstddef>
#include <vector>

namespace ecgnet::testing {

// Conv stack, LSTM and head parameters for the standard widths.
inline std::size_t counting_oracle(std::size_t layers, std::size_t classes, bool logistic) {
  std::size_t total = 0, in = 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::size_t out = 8u << l;
    total += 5 * in * out + out;
    in = out;
  }
  const std::size_t f = in, h = 128;
  total += 4 * ((f + h) * h + h);
  const std::size_t k = logistic ? 1 : classes;
  total += h * k + k;
  return total;
}

// Output sizes per layer, transcribed row by row from the published table.
struct TableColumn {
  std::size_t window, layers;
  std::vector<std::vector<std::size_t>> conv_rows; // (W, C) per conv layer, N omitted
  std::size_t pooled;
};

inline const std::vector<TableColumn> kTable = {
    {512, 7, {{256, 8}, {128, 16}, {64, 32}, {32, 64}, {16, 128}, {8, 256}, {4, 512}}, 512},
    {1024, 7, {{512, 8}, {256, 16}, {128, 32}, {64, 64}, {32, 128}, {16, 256}, {8, 512}}, 512},
    {1024, 8, {{512, 8}, {256, 16}, {128, 32}, {64, 64}, {32, 128}, {16, 256}, {8, 512}, {4, 1024}}, 1024},
};

} // namespace ecgnet::testing
