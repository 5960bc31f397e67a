/*
Copyright 2026 The holoq Authors. All rights reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace holoq {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Invalid configuration or arguments. The CLI maps this to exit code 1.
class config_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Shape/grid mismatch between operands.
class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric stage produced non-finite values. The CLI maps this to exit code 2.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sampling geometry of a wavefield: pixel counts, physical pitch, wavelength.
struct GridSpec {
  int height = 0;        // rows (M)
  int width = 0;         // cols (N)
  double pitch = 0.0;    // meters per pixel
  double wavelength = 0.0;  // meters

  std::size_t pixels() const { return std::size_t(height) * std::size_t(width); }

  bool operator==(const GridSpec& o) const {
    return height == o.height && width == o.width && pitch == o.pitch &&
           wavelength == o.wavelength;
  }

  void validate() const {
    if (height < 2 || width < 2)
      throw config_error("GridSpec: height and width must be >= 2");
    if (!(pitch > 0.0) || !std::isfinite(pitch))
      throw config_error("GridSpec: pitch must be positive");
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
      throw config_error("GridSpec: wavelength must be positive");
  }
};

/// Dense row-major 2D array.
template <typename T>
class Array2 {
 public:
  Array2() = default;
  Array2(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw config_error("Array2: negative extent");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int r, int c) { return data_[std::size_t(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[std::size_t(r) * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool same_shape(const Array2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool operator==(const Array2& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

using RealMap = Array2<double>;
using IndexMap = Array2<int>;

/// Sampled complex wavefield on a physical grid.
struct ComplexField {
  GridSpec grid;
  Array2<cplx> values;

  ComplexField() = default;
  explicit ComplexField(const GridSpec& g, cplx fill = cplx{})
      : grid(g), values(g.height, g.width, fill) {
    g.validate();
  }

  cplx& operator()(int r, int c) { return values(r, c); }
  const cplx& operator()(int r, int c) const { return values(r, c); }
  std::size_t size() const { return values.size(); }

  void require_finite(const std::string& where) const {
    for (const cplx& v : values)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw numeric_error("non-finite field values in " + where);
  }
};

/// T frames of real phase maps sharing one grid.
using PhaseStack = std::vector<RealMap>;
/// T frames of complex fields sharing one grid.
using FieldStack = std::vector<ComplexField>;

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (!(a == b)) throw dimension_error(std::string(where) + ": grid mismatch");
}

/// Sums in ascending order, so the result does not depend on the caller's
/// ordering of equal-magnitude contributions (exact permutation invariance).
inline double ordered_sum(std::span<double> vals) {
  std::sort(vals.begin(), vals.end());
  double acc = 0.0;
  for (double v : vals) acc += v;
  return acc;
}

/// Time-multiplexed amplitude sqrt(mean_t |u_t|^2) per pixel. Equals |u_1| for T = 1.
inline RealMap intensity_average(const FieldStack& frames) {
  if (frames.empty()) throw config_error("intensity_average: empty frame stack");
  const GridSpec& g = frames.front().grid;
  for (const auto& f : frames) require_same_grid(g, f.grid, "intensity_average");
  RealMap out(g.height, g.width, 0.0);
  const double inv_t = 1.0 / double(frames.size());
  std::vector<double> buf(frames.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t t = 0; t < frames.size(); ++t) buf[t] = std::norm(frames[t].values[i]);
    out[i] = std::sqrt(ordered_sum(buf) * inv_t);
  }
  return out;
}

/// Wraps an angle to [0, 2*pi).
inline double wrap_two_pi(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;  // fmod can land exactly on 2*pi after the add
  return w;
}

}  // namespace holoq
