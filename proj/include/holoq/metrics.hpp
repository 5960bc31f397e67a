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

#include "holoq/field.hpp"

// Image quality metrics on [0, 1]-normalized images: PSNR (capped at 100 dB)
// and SSIM with the standard 11x11 Gaussian window.

namespace holoq {

inline double mse(const RealMap& a, const RealMap& b) {
  if (!a.same_shape(b)) throw dimension_error("mse: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / double(a.size());
}

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(peak^2 / MSE), capped at 100 dB for (near-)identical images.
inline double psnr_peak(const RealMap& a, const RealMap& b, double peak) {
  const double m = mse(a, b);
  if (m <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / m));
}

/// PSNR for [0, 1] images (peak = 1).
inline double psnr(const RealMap& a, const RealMap& b) { return psnr_peak(a, b, 1.0); }

/// Mean SSIM over all positions where the 11x11 window fits, Gaussian weights
/// sigma = 1.5, C1 = (0.01)^2, C2 = (0.03)^2, dynamic range 1.
inline double ssim(const RealMap& a, const RealMap& b) {
  if (!a.same_shape(b)) throw dimension_error("ssim: shape mismatch");
  constexpr int kWin = 11;
  constexpr int kHalf = kWin / 2;
  if (a.rows() < kWin || a.cols() < kWin)
    throw config_error("ssim: image smaller than the 11x11 window");
  static const auto weights = [] {
    std::array<double, kWin * kWin> w{};
    const double sigma = 1.5;
    double sum = 0.0;
    for (int r = 0; r < kWin; ++r)
      for (int c = 0; c < kWin; ++c) {
        const double dr = r - kHalf, dc = c - kHalf;
        w[std::size_t(r) * kWin + c] = std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
        sum += w[std::size_t(r) * kWin + c];
      }
    for (double& v : w) v /= sum;
    return w;
  }();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  double total = 0.0;
  std::size_t count = 0;
  for (int r0 = 0; r0 + kWin <= a.rows(); ++r0) {
    for (int c0 = 0; c0 + kWin <= a.cols(); ++c0) {
      double mu_a = 0.0, mu_b = 0.0;
      for (int r = 0; r < kWin; ++r)
        for (int c = 0; c < kWin; ++c) {
          const double w = weights[std::size_t(r) * kWin + c];
          mu_a += w * a(r0 + r, c0 + c);
          mu_b += w * b(r0 + r, c0 + c);
        }
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int r = 0; r < kWin; ++r)
        for (int c = 0; c < kWin; ++c) {
          const double w = weights[std::size_t(r) * kWin + c];
          const double da = a(r0 + r, c0 + c) - mu_a;
          const double db = b(r0 + r, c0 + c) - mu_b;
          var_a += w * da * da;
          var_b += w * db * db;
          cov += w * da * db;
        }
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / double(count);
}

/// Least-squares scale <a, target> / <a, a>; 1 when the field is empty/zero.
inline double least_squares_scale(const RealMap& amp, const RealMap& target) {
  if (!amp.same_shape(target)) throw dimension_error("least_squares_scale: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    num += amp[i] * target[i];
    den += amp[i] * amp[i];
  }
  return den > 1e-300 ? num / den : 1.0;
}

}  // namespace holoq
