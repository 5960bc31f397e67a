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

// Test-only straight-line oracles. Everything here is written directly from
// the mathematical definitions (O(N^2) DFTs, full enumerations) and must stay
// independent of the library implementation paths it validates.

#include <cmath>
#include <complex>
#include <vector>

#include "holoq/field.hpp"
#include "holoq/propagation.hpp"
#include "holoq/quantize.hpp"
#include "holoq/rng.hpp"

namespace oracle {

using holoq::cplx;
using holoq::ComplexField;
using holoq::GridSpec;
using holoq::IndexMap;
using holoq::RealMap;
using holoq::kPi;
using holoq::kTwoPi;

inline ComplexField random_field(const GridSpec& g, std::uint64_t seed) {
  holoq::rng::Stream stream(seed);
  ComplexField f(g);
  for (std::size_t i = 0; i < f.size(); ++i)
    f.values[i] = cplx(stream.uniform(2 * i, -1.0, 1.0), stream.uniform(2 * i + 1, -1.0, 1.0));
  return f;
}

inline RealMap random_map(int rows, int cols, std::uint64_t seed, double lo, double hi) {
  holoq::rng::Stream stream(seed);
  RealMap m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = stream.uniform(i, lo, hi);
  return m;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-300, std::abs(b));
}

/// Centered DFT with 1/sqrt(MN) normalization, O(M^2 N^2).
inline ComplexField naive_dft_centered(const ComplexField& in, bool inverse) {
  const int rows = in.grid.height, cols = in.grid.width;
  const double sign = inverse ? 1.0 : -1.0;
  ComplexField out(in.grid);
  for (int kr = 0; kr < rows; ++kr)
    for (int kc = 0; kc < cols; ++kc) {
      cplx acc{};
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double ang = sign * kTwoPi *
                             (double((kr - rows / 2) * (r - rows / 2)) / rows +
                              double((kc - cols / 2) * (c - cols / 2)) / cols);
          acc += in(r, c) * cplx(std::cos(ang), std::sin(ang));
        }
      out(kr, kc) = acc / std::sqrt(double(rows) * cols);
    }
  return out;
}

/// Nearest level by full enumeration, ties to the lower index.
inline int nearest_level(double phi, const holoq::QuantScheme& scheme) {
  int best = 0;
  double best_d = std::abs(holoq::angular_delta(phi, scheme.levels[0]));
  for (std::size_t l = 1; l < scheme.levels.size(); ++l) {
    const double d = std::abs(holoq::angular_delta(phi, scheme.levels[l]));
    if (d < best_d) {
      best = int(l);
      best_d = d;
    }
  }
  return best;
}

/// Calibrated forward model written out longhand: source terms, naive DFT,
/// scalar kernel formula, naive inverse DFT.
inline ComplexField forward_model(const RealMap& phase, const holoq::CalibratedModel& m,
                                  double z) {
  ComplexField u(m.grid);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = m.phi_src[i] + phase[i];
    u.values[i] = m.a_src[i] * cplx(std::cos(p), std::sin(p));
  }
  ComplexField spec = naive_dft_centered(u, false);
  const double k = kTwoPi / m.grid.wavelength;
  for (int r = 0; r < m.grid.height; ++r)
    for (int c = 0; c < m.grid.width; ++c) {
      const double fx = double(c - m.grid.width / 2) / (double(m.grid.width) * m.grid.pitch);
      const double fy = double(r - m.grid.height / 2) / (double(m.grid.height) * m.grid.pitch);
      const double lfx = m.grid.wavelength * fx, lfy = m.grid.wavelength * fy;
      const double arg = 1.0 - lfx * lfx - lfy * lfy;
      cplx h{};
      if (arg > 0.0) {
        const double ph = k * z * std::sqrt(arg) + m.phi_fourier(r, c);
        h = m.a_fourier(r, c) * cplx(std::cos(ph), std::sin(ph));
      }
      spec(r, c) *= h;
    }
  return naive_dft_centered(spec, true);
}

/// Quantizes each frame by enumeration and returns the time-multiplexed
/// amplitude at distance z, evaluated longhand.
inline RealMap multiframe_amplitude(const holoq::PhaseStack& phases,
                                    const holoq::CalibratedModel& m,
                                    const holoq::QuantScheme& scheme, double z,
                                    bool hard_quantize) {
  RealMap acc(m.grid.height, m.grid.width, 0.0);
  for (const auto& phi : phases) {
    RealMap q(phi.rows(), phi.cols());
    for (std::size_t i = 0; i < q.size(); ++i)
      q[i] = hard_quantize ? scheme.levels[std::size_t(nearest_level(phi[i], scheme))] : phi[i];
    const ComplexField u = forward_model(q, m, z);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::norm(u.values[i]);
  }
  RealMap amp(m.grid.height, m.grid.width);
  for (std::size_t i = 0; i < amp.size(); ++i)
    amp[i] = std::sqrt(acc[i] / double(phases.size()));
  return amp;
}

inline double masked_mse(const RealMap& amp, const RealMap& target, const RealMap* mask,
                         double s) {
  double acc = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double m = mask ? (*mask)[i] : 1.0;
    const double r = m * (s * amp[i] - target[i]);
    acc += r * r;
  }
  return acc / double(amp.size());
}

/// Windowed patch DFT amplitudes (rectangular window, arbitrary hop),
/// written out longhand. Layout matches holoq::StftArray.
inline std::vector<double> stft_amplitudes(const holoq::PhaseStack& phases,
                                           const holoq::CalibratedModel& m,
                                           const holoq::QuantScheme& scheme, double z, int w,
                                           int hop, bool hard_quantize, int* patches_y_out,
                                           int* patches_x_out) {
  const int rows = m.grid.height, cols = m.grid.width;
  const int py = rows <= w ? 1 : (rows - w + hop - 1) / hop + 1;
  const int px = cols <= w ? 1 : (cols - w + hop - 1) / hop + 1;
  *patches_y_out = py;
  *patches_x_out = px;
  std::vector<double> acc(std::size_t(py) * px * w * w, 0.0);
  for (const auto& phi : phases) {
    RealMap q(phi.rows(), phi.cols());
    for (std::size_t i = 0; i < q.size(); ++i)
      q[i] = hard_quantize ? scheme.levels[std::size_t(nearest_level(phi[i], scheme))] : phi[i];
    const ComplexField u = forward_model(q, m, z);
    for (int p = 0; p < py; ++p)
      for (int pc = 0; pc < px; ++pc)
        for (int a = 0; a < w; ++a)
          for (int b = 0; b < w; ++b) {
            cplx coeff{};
            for (int r = 0; r < w; ++r)
              for (int c = 0; c < w; ++c) {
                const int rr = p * hop + r, cc = pc * hop + c;
                if (rr >= rows || cc >= cols) continue;
                const double ang = -kTwoPi * (double((a - w / 2) * (r - w / 2)) / w +
                                              double((b - w / 2) * (c - w / 2)) / w);
                coeff += u(rr, cc) * cplx(std::cos(ang), std::sin(ang));
              }
            coeff /= double(w);
            acc[((std::size_t(p) * px + pc) * w + a) * w + b] += std::norm(coeff);
          }
  }
  for (double& v : acc) v = std::sqrt(v / double(phases.size()));
  return acc;
}

}  // namespace oracle
