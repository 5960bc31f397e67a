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

#include "holoq/optimizer.hpp"
#include "holoq/synthetic.hpp"

// Simulated camera-in-the-loop: a hidden "physical" display model distinct
// from the optimization model. The optimizer only ever sees capture() output;
// gradients always come from the simulated (nominal) model.

namespace holoq {

/// The hidden truth display. Phases are always hard-quantized before display:
/// indices are chosen against the nominal addressing scheme and realized as
/// the truth model's lut phases.
struct PhysicalDisplay {
  CalibratedModel truth;
  QuantScheme addressing;     // nominal feasible set used to pick level indices
  double noise_sigma = 1e-3;  // additive capture noise std (intensity units)
  std::uint64_t noise_seed = 0;
};

/// The canonical mismatched display: a_src multiplied by a low-frequency
/// ripple (3 random-phase sinusoids, total amplitude 0.15), phi_src a smooth
/// random field with 0.5 rad std, phi_F a quadratic radial ramp reaching 1 rad
/// at the edge of the frequency band. Optionally the realized lut is jittered
/// so it no longer matches the nominal levels.
inline PhysicalDisplay canonical_display(const GridSpec& grid, std::vector<double> distances,
                                         int bits, std::uint64_t seed,
                                         bool perturb_lut = false) {
  PhysicalDisplay disp;
  disp.addressing = QuantScheme::uniform(bits);
  disp.truth = CalibratedModel::nominal(grid, std::move(distances), bits);
  disp.noise_seed = rng::combine(seed, 0x6361707475726531ull);

  rng::Stream stream(seed);
  // a_src ripple: sum of 3 sinusoids with random low frequencies and phases.
  rng::Stream ripple = stream.fork(1);
  for (int k = 0; k < 3; ++k) {
    const double fy = ripple.uniform(4 * k + 0, 0.5, 3.0);
    const double fx = ripple.uniform(4 * k + 1, 0.5, 3.0);
    const double phase = ripple.uniform(4 * k + 2, 0.0, kTwoPi);
    for (int r = 0; r < grid.height; ++r)
      for (int c = 0; c < grid.width; ++c)
        disp.truth.a_src(r, c) +=
            0.05 * std::cos(kTwoPi * (fy * r / double(grid.height) + fx * c / double(grid.width)) +
                            phase);
  }
  for (double& v : disp.truth.a_src) v = std::max(0.0, v);
  // phi_src: smooth random field, sigma = 0.5 rad.
  disp.truth.phi_src = smooth_random_field(grid.height, grid.width, 0.5,
                                           std::max(2.0, grid.height / 8.0), stream.key(2));
  // phi_F: quadratic radial ramp, 1 rad at the edge of the band.
  {
    auto [fx, fy] = frequency_grid(grid);
    const double f_edge = std::abs(fx(0, 0));
    for (std::size_t i = 0; i < disp.truth.phi_fourier.size(); ++i) {
      const double r2 = (fx[i] * fx[i] + fy[i] * fy[i]) / (f_edge * f_edge);
      disp.truth.phi_fourier[i] = r2;
    }
  }
  if (perturb_lut) {
    // Bounded jitter (< gap/2) keeps the realized lut strictly increasing;
    // level 0 stays at zero phase.
    rng::Stream lut_stream = stream.fork(3);
    const double gap = kTwoPi / double(disp.truth.lut.size());
    for (std::size_t l = 1; l < disp.truth.lut.size(); ++l)
      disp.truth.lut[l] += 0.3 * gap * (rng::unit_open(lut_stream.key(l)) - 0.5);
  }
  return disp;
}

/// Time-averaged captured intensity for a stack of (to-be-quantized) phase
/// frames at distance z. Deterministic given (noise_seed, capture_id).
inline RealMap capture(const PhysicalDisplay& display, const PhaseStack& phases, double z,
                       std::uint64_t capture_id = 0, TransferCache* cache = nullptr) {
  if (phases.empty()) throw config_error("capture: empty frame stack");
  const GridSpec& grid = display.truth.grid;
  RealMap intensity(grid.height, grid.width, 0.0);
  for (const auto& phi : phases) {
    const IndexMap idx = quantize_indices(phi, display.addressing);
    const RealMap realized = apply_lut(idx, display.truth.lut);
    const ComplexField u = model_forward(realized, display.truth, z, cache);
    for (std::size_t i = 0; i < intensity.size(); ++i) intensity[i] += std::norm(u.values[i]);
  }
  for (double& v : intensity) v /= double(phases.size());
  if (display.noise_sigma > 0.0) {
    rng::Stream noise = rng::Stream(display.noise_seed).fork(capture_id);
    for (std::size_t i = 0; i < intensity.size(); ++i)
      intensity[i] = std::max(0.0, intensity[i] + display.noise_sigma * noise.gaussian(i));
  }
  return intensity;
}

/// Captured intensity for an index pattern (single frame), as used when
/// generating calibration datasets.
inline RealMap capture_indices(const PhysicalDisplay& display, const IndexMap& pattern, double z,
                               std::uint64_t capture_id = 0, TransferCache* cache = nullptr) {
  const RealMap realized = apply_lut(pattern, display.truth.lut);
  const ComplexField u = model_forward(realized, display.truth, z, cache);
  RealMap intensity(pattern.rows(), pattern.cols());
  for (std::size_t i = 0; i < intensity.size(); ++i) intensity[i] = std::norm(u.values[i]);
  if (display.noise_sigma > 0.0) {
    rng::Stream noise = rng::Stream(display.noise_seed).fork(capture_id);
    for (std::size_t i = 0; i < intensity.size(); ++i)
      intensity[i] = std::max(0.0, intensity[i] + display.noise_sigma * noise.gaussian(i));
  }
  return intensity;
}

enum class CitlVariant {
  naive,      // dL/df from the capture, backward through the continuous model
  surrogate,  // backward through the model at q(phi), then the surrogate dq/dphi
};

struct CitlStepResult {
  PhaseStack phases;
  double loss = 0.0;
  double s = 1.0;
};

namespace detail {

inline CitlStepResult citl_step(const PhaseStack& phases, const PhysicalDisplay& display,
                                const CalibratedModel& nominal, const QuantScheme& scheme,
                                const SurrogateSpec& surrogate, const RealMap& target, double z,
                                double lr, std::uint64_t iteration, CitlVariant variant,
                                TransferCache* cache) {
  SurrogateSpec spec = surrogate;
  if (variant == CitlVariant::naive) spec.kind = SurrogateKind::naive;
  PipelineOptions opt;
  opt.cache = cache;
  const std::vector<double> planes = {z};
  const auto fwd = pipeline_forward(phases, nominal, scheme, spec, planes, iteration, opt);

  // Residual from the physical capture; least-squares scale against it.
  const RealMap captured = capture(display, phases, z, iteration, cache);
  RealMap amp_cap(captured.rows(), captured.cols());
  for (std::size_t i = 0; i < amp_cap.size(); ++i) amp_cap[i] = std::sqrt(captured[i]);
  CitlStepResult res;
  res.s = least_squares_scale(amp_cap, target);

  const double inv_p = 1.0 / double(amp_cap.size());
  RealMap dL_dA(amp_cap.rows(), amp_cap.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < amp_cap.size(); ++i) {
    const double r = res.s * amp_cap[i] - target[i];
    loss += r * r * inv_p;
    dL_dA[i] = 2.0 * res.s * r * inv_p;
  }
  res.loss = loss;

  // Chain the captured residual through the simulated model's adjoint.
  const auto field_grads = amp_grads_to_field_grads(fwd, {dL_dA});
  PhaseStack grads =
      pipeline_backward(fwd, field_grads, phases, nominal, scheme, spec, iteration, opt);
  res.phases = phases;
  for (std::size_t t = 0; t < res.phases.size(); ++t)
    for (std::size_t i = 0; i < res.phases[t].size(); ++i)
      res.phases[t][i] -= lr * grads[t][i];
  return res;
}

}  // namespace detail

/// One camera-in-the-loop update with no quantizer in the simulated chain.
inline CitlStepResult citl_step_naive(const PhaseStack& phases, const PhysicalDisplay& display,
                                      const CalibratedModel& nominal, const QuantScheme& scheme,
                                      const RealMap& target, double z, double lr,
                                      std::uint64_t iteration = 0,
                                      TransferCache* cache = nullptr) {
  return detail::citl_step(phases, display, nominal, scheme, SurrogateSpec{}, target, z, lr,
                           iteration, CitlVariant::naive, cache);
}

/// One camera-in-the-loop update evaluated at q(phi) with a surrogate backward.
inline CitlStepResult citl_step_surrogate(const PhaseStack& phases,
                                          const PhysicalDisplay& display,
                                          const CalibratedModel& nominal,
                                          const QuantScheme& scheme,
                                          const SurrogateSpec& surrogate, const RealMap& target,
                                          double z, double lr, std::uint64_t iteration = 0,
                                          TransferCache* cache = nullptr) {
  return detail::citl_step(phases, display, nominal, scheme, surrogate, target, z, lr,
                           iteration, CitlVariant::surrogate, cache);
}

struct CitlRun {
  PhaseStack phases;
  std::vector<IndexMap> exported;
  std::vector<double> loss_history;
  double s = 1.0;
};

/// Full camera-in-the-loop optimization of a 2D target.
inline CitlRun citl_optimize(const RealMap& target, const PhysicalDisplay& display,
                             const CalibratedModel& nominal, const QuantScheme& scheme,
                             const OptimConfig& cfg, double z, CitlVariant variant,
                             TransferCache* cache = nullptr) {
  cfg.validate();
  CitlRun run;
  run.phases = random_phase_init(nominal.grid, cfg.frames, cfg.seed);
  OptimRun loop_state;
  const double lr = cfg.effective_lr();
  run_optimize_loop(cfg, loop_state, [&](std::uint64_t k) {
    auto step = detail::citl_step(run.phases, display, nominal, scheme, cfg.surrogate, target,
                                  z, lr, k, variant, cache);
    run.phases = std::move(step.phases);
    run.s = step.s;
    return step.loss;
  });
  run.loss_history = std::move(loop_state.loss_history);
  run.exported.reserve(run.phases.size());
  for (const auto& p : run.phases) run.exported.push_back(quantize_indices(p, display.addressing));
  return run;
}

}  // namespace holoq
