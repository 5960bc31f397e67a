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
#include <cstdint>
#include <string>
#include <vector>

#include "holoq/field.hpp"
#include "holoq/rng.hpp"

// Discrete phase-level schemes for low-precision SLMs plus the gradient
// strategies used to optimize through the non-differentiable quantizer:
// pass-through (unit Jacobian), annealed sigmoid interpolant, and the
// Gumbel-Softmax categorical relaxation.

namespace holoq {

/// Signed angular difference phi - level wrapped to (-pi, pi].
inline double angular_delta(double phi, double level) {
  double d = std::fmod(phi - level, kTwoPi);
  if (d > kPi)
    d -= kTwoPi;
  else if (d <= -kPi)
    d += kTwoPi;
  return d;
}

/// The feasible set of discrete phase levels an SLM can realize.
struct QuantScheme {
  std::vector<double> levels;  // radians in [0, 2*pi), strictly ascending
  int bit_depth = 0;           // 0 when the scheme is not a uniform 2^bits set
  bool wrap = true;            // phase treated on the circle

  int level_count() const { return int(levels.size()); }

  static QuantScheme uniform(int bits) {
    if (bits < 1 || bits > 24) throw config_error("QuantScheme: bits must be in [1,24]");
    QuantScheme s;
    const int count = 1 << bits;
    s.levels.resize(count);
    for (int j = 0; j < count; ++j) s.levels[j] = kTwoPi * double(j) / double(count);
    s.bit_depth = bits;
    return s;
  }

  static QuantScheme from_levels(std::vector<double> lv, bool wrap = true) {
    QuantScheme s;
    s.levels = std::move(lv);
    s.wrap = wrap;
    s.validate();
    return s;
  }

  void validate() const {
    if (levels.size() < 2) throw config_error("QuantScheme: need at least 2 levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!std::isfinite(levels[i]) || levels[i] < 0.0 || levels[i] >= kTwoPi)
        throw config_error("QuantScheme: levels must lie in [0, 2*pi)");
      if (i > 0 && !(levels[i] > levels[i - 1]))
        throw config_error("QuantScheme: levels must be strictly ascending");
    }
  }

  /// Index of the level minimizing the wrapped angular distance |delta(phi, Q_l)|,
  /// ties broken toward the lower index.
  int nearest_index(double phi) const {
    const int count = int(levels.size());
    if (!wrap) {
      auto it = std::lower_bound(levels.begin(), levels.end(), phi);
      int hi = int(it - levels.begin());
      int lo = hi - 1;
      int best = -1;
      double best_d = 0.0;
      for (int cand : {lo - 1, lo, hi, hi + 1}) {
        if (cand < 0 || cand >= count) continue;
        const double d = std::abs(phi - levels[cand]);
        if (best < 0 || d < best_d) {
          best = cand;
          best_d = d;
        }
      }
      return best;
    }
    const double x = wrap_two_pi(phi);
    auto it = std::upper_bound(levels.begin(), levels.end(), x);
    const int hi = it == levels.end() ? 0 : int(it - levels.begin());
    const int lo = (hi + count - 1) % count;
    // Scan a slightly widened neighbor set so the result matches a full
    // enumeration bit-for-bit even when x sits an ulp from a boundary.
    int cands[4] = {(lo + count - 1) % count, lo, hi, (hi + 1) % count};
    std::sort(std::begin(cands), std::end(cands));
    int best = -1;
    double best_d = 0.0;
    for (int cand : cands) {
      if (best == cand) continue;
      const double d = std::abs(angular_delta(phi, levels[cand]));
      if (best < 0 || d < best_d) {
        best = cand;
        best_d = d;
      }
    }
    return best;
  }
};

/// Surrogate strategy used in the backward pass (and, for the relaxed-forward
/// variant, in the forward model during optimization).
enum class SurrogateKind {
  naive,                   // no quantizer during optimization; quantize at export
  unit_jacobian,           // dq/dphi = 1 (the workable projected-GD variant)
  sigmoid,                 // annealed sigmoid interpolant between adjacent levels
  gumbel_softmax,          // hard forward, Gumbel-Softmax gradients
  gumbel_softmax_forward,  // relaxed forward during optimization
};

inline const char* to_string(SurrogateKind k) {
  switch (k) {
    case SurrogateKind::naive: return "naive";
    case SurrogateKind::unit_jacobian: return "unit_jacobian";
    case SurrogateKind::sigmoid: return "sigmoid";
    case SurrogateKind::gumbel_softmax: return "gumbel_softmax";
    case SurrogateKind::gumbel_softmax_forward: return "gumbel_softmax_forward";
  }
  return "?";
}

inline SurrogateKind surrogate_kind_from_string(const std::string& s) {
  if (s == "naive" || s == "none") return SurrogateKind::naive;
  if (s == "unit_jacobian") return SurrogateKind::unit_jacobian;
  if (s == "sigmoid") return SurrogateKind::sigmoid;
  if (s == "gumbel_softmax") return SurrogateKind::gumbel_softmax;
  if (s == "gumbel_softmax_forward") return SurrogateKind::gumbel_softmax_forward;
  throw config_error("unknown surrogate kind: " + s);
}

struct SurrogateSpec {
  SurrogateKind kind = SurrogateKind::gumbel_softmax;
  double slope = 10.0;        // w for Gumbel-Softmax scores; s for the sigmoid proxy
  double temperature = 4.0;   // softmax temperature tau
  double score_scale = 300.0; // multiplier on the score function
  bool noise_enabled = true;
  // For the hard-forward gumbel_softmax kind: display the level sampled by
  // argmax(score + g) (straight-through sampling) instead of the nearest
  // level. The backward pass reuses the same noise either way.
  bool hard_sample = false;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(temperature > 0.0)) throw config_error("SurrogateSpec: temperature must be > 0");
    if (!(slope > 0.0)) throw config_error("SurrogateSpec: slope must be > 0");
    if (!(score_scale > 0.0)) throw config_error("SurrogateSpec: score_scale must be > 0");
  }
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Locates the wrapped bracket [l_lo, l_hi) containing phi and returns the
/// offset u of phi above level l_lo and the gap between the two levels.
struct Bracket {
  int lo = 0, hi = 0;
  double gap = 0.0;
  double offset = 0.0;
};

inline Bracket wrapped_bracket(double phi, const QuantScheme& scheme) {
  const auto& lv = scheme.levels;
  const int count = int(lv.size());
  const double x = wrap_two_pi(phi);
  auto it = std::upper_bound(lv.begin(), lv.end(), x);
  Bracket b;
  if (it == lv.begin()) {
    // below the first level: bracket wraps around from the top
    b.lo = count - 1;
    b.hi = 0;
    b.gap = lv[0] + kTwoPi - lv[count - 1];
    b.offset = x + kTwoPi - lv[count - 1];
  } else {
    b.lo = int(it - lv.begin()) - 1;
    b.hi = (b.lo + 1) % count;
    b.gap = (b.hi == 0 ? lv[0] + kTwoPi : lv[b.hi]) - lv[b.lo];
    b.offset = x - lv[b.lo];
  }
  return b;
}

}  // namespace detail

/// Hard quantizer: nearest level index per pixel.
inline IndexMap quantize_indices(const RealMap& phase, const QuantScheme& scheme) {
  IndexMap out(phase.rows(), phase.cols());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    if (!std::isfinite(phase[i])) throw numeric_error("quantize: non-finite phase");
    out[i] = scheme.nearest_index(phase[i]);
  }
  return out;
}

/// Hard quantizer: nearest level value per pixel (Pi_Q projection).
inline RealMap quantize(const RealMap& phase, const QuantScheme& scheme) {
  RealMap out(phase.rows(), phase.cols());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    if (!std::isfinite(phase[i])) throw numeric_error("quantize: non-finite phase");
    out[i] = scheme.levels[scheme.nearest_index(phase[i])];
  }
  return out;
}

/// Per-level scores scale * sigmoid(w*delta) * (1 - sigmoid(w*delta)).
/// Peaks at scale/4 for the nearest level and decays with angular distance.
inline std::vector<double> score_levels(double phi, const QuantScheme& scheme, double w,
                                        double scale) {
  if (!(w > 0.0)) throw config_error("score_levels: w must be > 0");
  std::vector<double> out(scheme.levels.size());
  for (std::size_t l = 0; l < scheme.levels.size(); ++l) {
    const double s = detail::sigmoid(w * angular_delta(phi, scheme.levels[l]));
    out[l] = scale * s * (1.0 - s);
  }
  return out;
}

/// Result of the Gumbel-Softmax relaxation over a phase map.
struct GumbelSoftmaxResult {
  RealMap qhat;                 // relaxed phase sum_l Q_l * G_l
  std::vector<double> weights;  // pixel-major [pixel * L + l], each row sums to 1
};

namespace detail {

/// One pixel of the Gumbel-Softmax relaxation:
///   qhat = sum_l G_l * Q~_l,   G = softmax((score + g)/tau),
/// where Q~_l = phi - delta(phi, Q_l) is the representative of level l on the
/// branch nearest phi. Levels are phases, so the weighted average is taken
/// circularly; otherwise pixels between the top level and 2*pi would average
/// against Q_0 = 0 and see an inverted derivative. Fills `weights` (size L)
/// and optionally d(qhat)/d(phi) with the noise held fixed. `scratch` is
/// caller-provided storage of size 2L (sigmas, then deltas).
inline double gs_pixel(double phi, const QuantScheme& scheme, const SurrogateSpec& spec,
                       std::uint64_t iteration, std::uint64_t pixel, double* weights,
                       double* scratch, double* dq_dphi) {
  const auto& lv = scheme.levels;
  const int count = int(lv.size());
  double* sigma_buf = scratch;
  double* delta_buf = scratch + count;
  const double w = spec.slope;
  const double inv_tau = 1.0 / spec.temperature;
  double max_arg = -1e300;
  for (int l = 0; l < count; ++l) {
    const double d = angular_delta(phi, lv[l]);
    const double s = sigmoid(w * d);
    sigma_buf[l] = s;
    delta_buf[l] = d;
    double arg = spec.score_scale * s * (1.0 - s);
    if (spec.noise_enabled)
      arg += rng::gumbel(rng::gumbel_key(spec.rng_seed, iteration, pixel, std::uint64_t(l)));
    arg *= inv_tau;
    weights[l] = arg;
    if (arg > max_arg) max_arg = arg;
  }
  double sum = 0.0;
  for (int l = 0; l < count; ++l) {
    weights[l] = std::exp(weights[l] - max_arg);
    sum += weights[l];
  }
  const double inv_sum = 1.0 / sum;
  double mean_delta = 0.0;
  for (int l = 0; l < count; ++l) {
    weights[l] *= inv_sum;
    mean_delta += delta_buf[l] * weights[l];
  }
  const double qhat = phi - mean_delta;
  if (dq_dphi) {
    // qhat = phi - sum_l G_l delta_l with d(delta_l)/dphi = 1, so
    // d(qhat)/dphi = -cov_G(delta, score')/tau,
    // score'_l = scale * w * sigma (1 - sigma)(1 - 2 sigma).
    double mean_sp = 0.0;
    for (int l = 0; l < count; ++l) {
      const double s = sigma_buf[l];
      sigma_buf[l] = spec.score_scale * w * s * (1.0 - s) * (1.0 - 2.0 * s);
      mean_sp += weights[l] * sigma_buf[l];
    }
    double acc = 0.0;
    for (int l = 0; l < count; ++l)
      acc += delta_buf[l] * weights[l] * (sigma_buf[l] - mean_sp);
    *dq_dphi = -acc * inv_tau;
  }
  return qhat;
}

}  // namespace detail

/// Relaxed quantizer qhat(phi) = sum_l Q~_l * softmax((score_l + g_l)/tau)_l,
/// with each level at its branch representative nearest phi (so the weighted
/// average respects the circularity the score's angular delta already has).
/// Noise keys are (rng_seed, iteration, pixel, level), so the same sample is
/// regenerated in the backward pass of the same iteration.
inline GumbelSoftmaxResult gumbel_softmax_relax(const RealMap& phase, const QuantScheme& scheme,
                                                const SurrogateSpec& spec,
                                                std::uint64_t iteration = 0) {
  if (spec.kind != SurrogateKind::gumbel_softmax &&
      spec.kind != SurrogateKind::gumbel_softmax_forward)
    throw config_error("gumbel_softmax_relax: spec.kind must be a gumbel_softmax variant");
  spec.validate();
  const int count = scheme.level_count();
  GumbelSoftmaxResult res;
  res.qhat = RealMap(phase.rows(), phase.cols());
  res.weights.resize(phase.size() * std::size_t(count));
  std::vector<double> scratch(2 * std::size_t(count));
  for (std::size_t i = 0; i < phase.size(); ++i) {
    res.qhat[i] = detail::gs_pixel(phase[i], scheme, spec, iteration, i,
                                   res.weights.data() + i * std::size_t(count), scratch.data(),
                                   nullptr);
  }
  return res;
}

/// Straight-through Gumbel sample: each pixel displays the level maximizing
/// score_l + g_l with the same noise stream the backward pass regenerates.
/// Ties cannot occur for continuous noise; noise off reduces to the argmax
/// score, i.e. the nearest level.
inline RealMap gumbel_hard_sample(const RealMap& phase, const QuantScheme& scheme,
                                  const SurrogateSpec& spec, std::uint64_t iteration = 0) {
  spec.validate();
  const auto& lv = scheme.levels;
  const int count = int(lv.size());
  RealMap out(phase.rows(), phase.cols());
  for (std::size_t i = 0; i < phase.size(); ++i) {
    int best = 0;
    double best_arg = -1e300;
    for (int l = 0; l < count; ++l) {
      const double s = detail::sigmoid(spec.slope * angular_delta(phase[i], lv[l]));
      double arg = spec.score_scale * s * (1.0 - s);
      if (spec.noise_enabled)
        arg += rng::gumbel(rng::gumbel_key(spec.rng_seed, iteration, i, std::uint64_t(l)));
      if (arg > best_arg) {
        best_arg = arg;
        best = l;
      }
    }
    out[i] = lv[std::size_t(best)];
  }
  return out;
}

/// Sigmoid interpolant between the two wrapped-nearest levels:
/// q_sig = Q_lo + gap * sigmoid(slope * (offset - gap/2) / gap).
/// Approaches the hard quantizer as slope grows.
inline RealMap sigmoid_relax(const RealMap& phase, const QuantScheme& scheme,
                             const SurrogateSpec& spec) {
  spec.validate();
  RealMap out(phase.rows(), phase.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto b = detail::wrapped_bracket(phase[i], scheme);
    const double x = spec.slope * (b.offset - 0.5 * b.gap) / b.gap;
    out[i] = scheme.levels[b.lo] + b.gap * detail::sigmoid(x);
  }
  return out;
}

/// Derivative of the surrogate quantizer at each pixel (no upstream factor).
inline RealMap surrogate_jacobian_diag(const RealMap& phase, const QuantScheme& scheme,
                                       const SurrogateSpec& spec, std::uint64_t iteration = 0) {
  RealMap out(phase.rows(), phase.cols());
  switch (spec.kind) {
    case SurrogateKind::naive:
      throw config_error("surrogate_gradient: spec.kind must not be naive");
    case SurrogateKind::unit_jacobian:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0;
      break;
    case SurrogateKind::sigmoid: {
      spec.validate();
      // q_sig = Q_lo + gap * sigmoid(s * (offset - gap/2) / gap), so
      // dq/dphi = s * sigma * (1 - sigma).
      for (std::size_t i = 0; i < out.size(); ++i) {
        const auto b = detail::wrapped_bracket(phase[i], scheme);
        const double x = spec.slope * (b.offset - 0.5 * b.gap) / b.gap;
        const double s = detail::sigmoid(x);
        out[i] = spec.slope * s * (1.0 - s);
      }
      break;
    }
    case SurrogateKind::gumbel_softmax:
    case SurrogateKind::gumbel_softmax_forward: {
      spec.validate();
      const int count = scheme.level_count();
      std::vector<double> weights(count), scratch(2 * std::size_t(count));
      for (std::size_t i = 0; i < out.size(); ++i) {
        double d = 0.0;
        detail::gs_pixel(phase[i], scheme, spec, iteration, i, weights.data(), scratch.data(), &d);
        out[i] = d;
      }
      break;
    }
  }
  return out;
}

/// upstream .* d(qhat)/d(phi) for the configured surrogate.
inline RealMap surrogate_gradient(const RealMap& upstream, const RealMap& phase,
                                  const QuantScheme& scheme, const SurrogateSpec& spec,
                                  std::uint64_t iteration = 0) {
  if (!upstream.same_shape(phase))
    throw dimension_error("surrogate_gradient: upstream/phase shape mismatch");
  if (spec.kind == SurrogateKind::unit_jacobian) return upstream;
  RealMap jac = surrogate_jacobian_diag(phase, scheme, spec, iteration);
  RealMap out(upstream.rows(), upstream.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = upstream[i] * jac[i];
  return out;
}

}  // namespace holoq
