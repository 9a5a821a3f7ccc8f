#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecgnet/error.hpp"

namespace ecgnet {

/// Rank-3 row-major array laid out as (windows, samples, channels).
template <typename T>
class Tensor3 {
public:
  Tensor3() = default;
  Tensor3(std::size_t n, std::size_t w, std::size_t c, T fill = T{0})
      : n_(n), w_(w), c_(c), data_(n * w * c, fill) {}

  std::size_t windows() const { return n_; }
  std::size_t width() const { return w_; }
  std::size_t channels() const { return c_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t n, std::size_t x, std::size_t c) { return data_[(n * w_ + x) * c_ + c]; }
  const T& operator()(std::size_t n, std::size_t x, std::size_t c) const {
    return data_[(n * w_ + x) * c_ + c];
  }

  // One window as a contiguous (width x channels) block.
  std::span<T> window(std::size_t n) { return {data_.data() + n * w_ * c_, w_ * c_}; }
  std::span<const T> window(std::size_t n) const { return {data_.data() + n * w_ * c_, w_ * c_}; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Tensor3& o) const { return n_ == o.n_ && w_ == o.w_ && c_ == o.c_; }

  std::string shape_string() const {
    return std::to_string(n_) + "x" + std::to_string(w_) + "x" + std::to_string(c_);
  }

private:
  std::size_t n_ = 0, w_ = 0, c_ = 0;
  std::vector<T> data_;
};

/// Row-major 2-D array.
template <typename T>
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{0}) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

template <typename Range>
bool all_finite(const Range& r) {
  for (const auto& v : r)
    if (!std::isfinite(v)) return false;
  return true;
}

} // namespace ecgnet
