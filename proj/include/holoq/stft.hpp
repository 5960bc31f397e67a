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

#include <string>
#include <vector>

#include "holoq/fft.hpp"
#include "holoq/field.hpp"

// Patch-wise windowed Fourier analysis: the differentiable hologram-to-light
// field transform. With the rectangular window and hop == window the tiling is
// orthogonal, so the transform is exactly invertible and energy-preserving.

namespace holoq {

struct StftSpec {
  int window_size = 8;  // W; the angular view grid is W x W bins
  int hop = 8;          // 1 <= hop <= W
  enum class Window { rectangular, hann } window = Window::rectangular;

  void validate() const {
    if (window_size < 2) throw config_error("StftSpec: window_size must be >= 2");
    if (hop < 1 || hop > window_size) throw config_error("StftSpec: hop must be in [1, window]");
  }

  void validate_for(const GridSpec& grid) const {
    validate();
    if (window_size > grid.height || window_size > grid.width)
      throw config_error("StftSpec: window larger than grid");
  }

  /// Periodic window weight for in-patch offset i.
  double weight(int i) const {
    if (window == Window::rectangular) return 1.0;
    return 0.5 * (1.0 - std::cos(kTwoPi * double(i) / double(window_size)));
  }
};

/// Patch grid x W x W angular bins of complex STFT coefficients.
struct StftArray {
  int patches_y = 0, patches_x = 0, window = 0;
  std::vector<cplx> data;  // [(py * patches_x + px) * W * W + a * W + b]

  cplx& at(int py, int px, int a, int b) {
    return data[(std::size_t(py) * patches_x + px) * window * window + std::size_t(a) * window + b];
  }
  const cplx& at(int py, int px, int a, int b) const {
    return data[(std::size_t(py) * patches_x + px) * window * window + std::size_t(a) * window + b];
  }
  std::size_t patch_count() const { return std::size_t(patches_y) * patches_x; }
};

namespace detail {

/// Centered, 1/W-normalized 2D FFT of a W x W patch, in place.
inline void patch_fft_centered(Array2<cplx>& patch, bool inverse) {
  patch.same_shape(patch);
  Array2<cplx> tmp = ifftshift2(patch);
  fft2_raw(tmp, inverse);
  patch = fftshift2(tmp);
  const double scale = 1.0 / std::sqrt(double(patch.size()));
  for (cplx& v : patch) v *= scale;
}

inline int patch_positions(int extent, const StftSpec& spec) {
  // Positions 0, hop, 2*hop, ... covering a zero-padded extent.
  const int w = spec.window_size;
  if (extent <= w) return 1;
  return (extent - w + spec.hop - 1) / spec.hop + 1;
}

}  // namespace detail

/// Windowed patch-wise centered Fourier transform at hop offsets. The field is
/// implicitly zero-padded so every patch position is fully covered.
inline StftArray stft(const ComplexField& field, const StftSpec& spec) {
  spec.validate_for(field.grid);
  const int w = spec.window_size;
  StftArray out;
  out.window = w;
  out.patches_y = detail::patch_positions(field.grid.height, spec);
  out.patches_x = detail::patch_positions(field.grid.width, spec);
  out.data.assign(out.patch_count() * std::size_t(w) * w, cplx{});
  Array2<cplx> patch(w, w);
  for (int py = 0; py < out.patches_y; ++py) {
    for (int px = 0; px < out.patches_x; ++px) {
      const int r0 = py * spec.hop, c0 = px * spec.hop;
      for (int a = 0; a < w; ++a) {
        for (int b = 0; b < w; ++b) {
          const int r = r0 + a, c = c0 + b;
          cplx v{};
          if (r < field.grid.height && c < field.grid.width)
            v = field(r, c) * (spec.weight(a) * spec.weight(b));
          patch(a, b) = v;
        }
      }
      detail::patch_fft_centered(patch, false);
      for (int a = 0; a < w; ++a)
        for (int b = 0; b < w; ++b) out.at(py, px, a, b) = patch(a, b);
    }
  }
  return out;
}

/// Adjoint of stft (equal to the inverse for the orthogonal rectangular
/// hop == W tiling): patch-wise inverse transforms scattered back.
inline ComplexField stft_adjoint(const StftArray& coeffs, const GridSpec& grid,
                                 const StftSpec& spec) {
  spec.validate_for(grid);
  const int w = spec.window_size;
  ComplexField out(grid);
  Array2<cplx> patch(w, w);
  for (int py = 0; py < coeffs.patches_y; ++py) {
    for (int px = 0; px < coeffs.patches_x; ++px) {
      for (int a = 0; a < w; ++a)
        for (int b = 0; b < w; ++b) patch(a, b) = coeffs.at(py, px, a, b);
      detail::patch_fft_centered(patch, true);
      const int r0 = py * spec.hop, c0 = px * spec.hop;
      for (int a = 0; a < w; ++a) {
        const int r = r0 + a;
        if (r >= grid.height) break;
        for (int b = 0; b < w; ++b) {
          const int c = c0 + b;
          if (c >= grid.width) break;
          out(r, c) += patch(a, b) * (spec.weight(a) * spec.weight(b));
        }
      }
    }
  }
  return out;
}

}  // namespace holoq
