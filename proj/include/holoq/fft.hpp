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

#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "holoq/field.hpp"

// Centered 2D FFTs with symmetric 1/sqrt(MN) normalization on both directions,
// so Parseval holds with constant 1 and fft2/ifft2 are exact inverses.
// Arbitrary grid sizes are supported (radix-2 for powers of two, Bluestein
// otherwise); no padding is ever visible in the output.

namespace holoq {

namespace detail {

inline bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// 1D FFT plan for a fixed length. Immutable after construction.
class Fft1D {
 public:
  explicit Fft1D(int n) : n_(n) {
    if (is_pow2(n_)) {
      init_radix2(n_, tw_, rev_);
    } else {
      // Bluestein: length-n DFT as a circular convolution of length m.
      m_ = next_pow2(2 * n_ - 1);
      init_radix2(m_, mtw_, mrev_);
      chirp_.resize(n_);
      for (int j = 0; j < n_; ++j) {
        // j^2 mod 2n keeps the chirp angle small and exact.
        const long long j2 = (1ll * j * j) % (2ll * n_);
        const double ang = -kPi * double(j2) / double(n_);
        chirp_[j] = cplx(std::cos(ang), std::sin(ang));
      }
      bfft_.assign(m_, cplx{});
      bfft_[0] = std::conj(chirp_[0]);
      for (int j = 1; j < n_; ++j) {
        bfft_[j] = std::conj(chirp_[j]);
        bfft_[m_ - j] = std::conj(chirp_[j]);
      }
      radix2(bfft_.data(), m_, false, mtw_, mrev_);
    }
  }

  int length() const { return n_; }

  /// In-place unnormalized transform; inverse uses the +i kernel sign.
  void transform(cplx* x, bool inverse) const {
    if (m_ == 0) {
      radix2(x, n_, inverse, tw_, rev_);
      return;
    }
    if (inverse) {
      for (int j = 0; j < n_; ++j) x[j] = std::conj(x[j]);
      bluestein(x);
      for (int j = 0; j < n_; ++j) x[j] = std::conj(x[j]);
    } else {
      bluestein(x);
    }
  }

 private:
  static void init_radix2(int n, std::vector<cplx>& tw, std::vector<int>& rev) {
    tw.resize(n / 2);
    for (int k = 0; k < n / 2; ++k) {
      const double ang = -kTwoPi * double(k) / double(n);
      tw[k] = cplx(std::cos(ang), std::sin(ang));
    }
    rev.resize(n);
    rev[0] = 0;
    for (int i = 1; i < n; ++i) rev[i] = (rev[i >> 1] >> 1) | ((i & 1) ? n >> 1 : 0);
  }

  static void radix2(cplx* x, int n, bool inverse, const std::vector<cplx>& tw,
                     const std::vector<int>& rev) {
    for (int i = 0; i < n; ++i)
      if (i < rev[i]) std::swap(x[i], x[rev[i]]);
    for (int len = 2; len <= n; len <<= 1) {
      const int half = len >> 1;
      const int step = n / len;
      for (int base = 0; base < n; base += len) {
        for (int k = 0; k < half; ++k) {
          cplx w = tw[std::size_t(k) * step];
          if (inverse) w = std::conj(w);
          const cplx odd = x[base + k + half] * w;
          const cplx even = x[base + k];
          x[base + k] = even + odd;
          x[base + k + half] = even - odd;
        }
      }
    }
  }

  void bluestein(cplx* x) const {
    std::vector<cplx> a(m_, cplx{});
    for (int j = 0; j < n_; ++j) a[j] = x[j] * chirp_[j];
    radix2(a.data(), m_, false, mtw_, mrev_);
    for (int j = 0; j < m_; ++j) a[j] *= bfft_[j];
    radix2(a.data(), m_, true, mtw_, mrev_);
    const double inv_m = 1.0 / double(m_);
    for (int j = 0; j < n_; ++j) x[j] = a[j] * inv_m * chirp_[j];
  }

  int n_ = 0;
  int m_ = 0;  // 0 when the direct radix-2 path applies
  std::vector<cplx> tw_;
  std::vector<int> rev_;
  std::vector<cplx> mtw_;
  std::vector<int> mrev_;
  std::vector<cplx> chirp_;
  std::vector<cplx> bfft_;
};

inline std::shared_ptr<const Fft1D> fft_plan(int n) {
  static std::mutex mu;
  static std::unordered_map<int, std::shared_ptr<const Fft1D>> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  auto plan = std::make_shared<const Fft1D>(n);
  plans.emplace(n, plan);
  return plan;
}

/// Unnormalized 2D transform, rows then columns, in place.
inline void fft2_raw(Array2<cplx>& a, bool inverse) {
  const int rows = a.rows(), cols = a.cols();
  const auto row_plan = fft_plan(cols);
  for (int r = 0; r < rows; ++r) row_plan->transform(a.data() + std::size_t(r) * cols, inverse);
  const auto col_plan = fft_plan(rows);
  std::vector<cplx> tmp(rows);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) tmp[r] = a(r, c);
    col_plan->transform(tmp.data(), inverse);
    for (int r = 0; r < rows; ++r) a(r, c) = tmp[r];
  }
}

/// Circular shift by (sr, sc): out[(r+sr) mod M][(c+sc) mod N] = in[r][c].
inline Array2<cplx> circshift(const Array2<cplx>& in, int sr, int sc) {
  Array2<cplx> out(in.rows(), in.cols());
  const int rows = in.rows(), cols = in.cols();
  for (int r = 0; r < rows; ++r) {
    const int rr = (r + sr) % rows;
    for (int c = 0; c < cols; ++c) out(rr, (c + sc) % cols) = in(r, c);
  }
  return out;
}

inline Array2<cplx> fftshift2(const Array2<cplx>& a) {
  return circshift(a, a.rows() / 2, a.cols() / 2);
}
inline Array2<cplx> ifftshift2(const Array2<cplx>& a) {
  return circshift(a, a.rows() - a.rows() / 2, a.cols() - a.cols() / 2);
}

inline void check_fft_input(const ComplexField& f, const char* where) {
  f.grid.validate();
  f.require_finite(where);
}

}  // namespace detail

/// 2D DFT with the zero-frequency bin at (height/2, width/2) and 1/sqrt(MN)
/// normalization. ifft2_centered(fft2_centered(u)) == u to ~1e-15.
inline ComplexField fft2_centered(const ComplexField& field) {
  detail::check_fft_input(field, "fft2_centered");
  ComplexField out(field.grid);
  out.values = detail::ifftshift2(field.values);
  detail::fft2_raw(out.values, false);
  out.values = detail::fftshift2(out.values);
  const double scale = 1.0 / std::sqrt(double(field.grid.pixels()));
  for (cplx& v : out.values) v *= scale;
  return out;
}

/// Inverse of fft2_centered (same layout and normalization).
inline ComplexField ifft2_centered(const ComplexField& field) {
  detail::check_fft_input(field, "ifft2_centered");
  ComplexField out(field.grid);
  out.values = detail::ifftshift2(field.values);
  detail::fft2_raw(out.values, true);
  out.values = detail::fftshift2(out.values);
  const double scale = 1.0 / std::sqrt(double(field.grid.pixels()));
  for (cplx& v : out.values) v *= scale;
  return out;
}

/// Per-bin spatial frequencies in cycles/meter matching the centered layout:
/// f = (index - n/2) / (n * pitch).
inline std::pair<RealMap, RealMap> frequency_grid(const GridSpec& grid) {
  grid.validate();
  RealMap fx(grid.height, grid.width), fy(grid.height, grid.width);
  for (int r = 0; r < grid.height; ++r) {
    const double fr = double(r - grid.height / 2) / (double(grid.height) * grid.pitch);
    for (int c = 0; c < grid.width; ++c) {
      fx(r, c) = double(c - grid.width / 2) / (double(grid.width) * grid.pitch);
      fy(r, c) = fr;
    }
  }
  return {std::move(fx), std::move(fy)};
}

}  // namespace holoq
