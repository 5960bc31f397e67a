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
#include <span>
#include <vector>

#include "holoq/propagation.hpp"
#include "holoq/quantize.hpp"

// Reverse-mode differentiation through the fixed pipeline
//   phase -> (quantizer / relaxation) -> a_src e^{i(phi_src + .)} -> FFT
//         -> transfer multiply -> inverse FFT -> |.| average over frames.
// Every stage is linear or has a closed-form adjoint, so gradients are exact
// up to the surrogate used for the quantizer.

namespace holoq {

/// Regularizer for d|u|/du at amplitude zeros.
inline constexpr double kAmpEps = 1e-12;

struct PipelineOptions {
  bool check_finite = false;  // per-stage non-finite diagnostics
  TransferCache* cache = nullptr;
  // Replace the hard quantizer by the surrogate's differentiable proxy in the
  // forward pass (identity / sigmoid interpolant / Gumbel-Softmax). With this
  // set, the analytic gradient is the exact derivative of the computed loss,
  // which is what finite-difference validation requires.
  bool proxy_forward = false;
};

/// Saved intermediates for one frame of the forward pass.
struct FrameTrace {
  RealMap fwd_phase;                  // phase entering exp(i .): quantized, relaxed, or raw
  ComplexField u_slm;                 // a_src .* exp(i(phi_src + fwd_phase))
  ComplexField spectrum;              // fft2_centered(u_slm)
  std::vector<ComplexField> outputs;  // per plane: ifft2(spectrum .* H_j)
};

struct ForwardResult {
  std::vector<FrameTrace> frames;                          // T traces
  std::vector<RealMap> amplitude;                          // per plane sqrt(mean_t |u|^2)
  std::vector<std::shared_ptr<const TransferFunction>> tf; // per plane
};

namespace detail {

inline void stage_check(const ComplexField& f, bool enabled, const char* stage) {
  if (enabled) f.require_finite(stage);
}

inline RealMap apply_forward_quantizer(const RealMap& phase, const QuantScheme& scheme,
                                       const SurrogateSpec& spec, std::uint64_t iteration,
                                       bool proxy_forward) {
  switch (spec.kind) {
    case SurrogateKind::naive:
      return phase;
    case SurrogateKind::gumbel_softmax_forward:
      return gumbel_softmax_relax(phase, scheme, spec, iteration).qhat;
    case SurrogateKind::unit_jacobian:
      return proxy_forward ? phase : quantize(phase, scheme);
    case SurrogateKind::sigmoid:
      return proxy_forward ? sigmoid_relax(phase, scheme, spec) : quantize(phase, scheme);
    case SurrogateKind::gumbel_softmax:
      if (proxy_forward) return gumbel_softmax_relax(phase, scheme, spec, iteration).qhat;
      return spec.hard_sample ? gumbel_hard_sample(phase, scheme, spec, iteration)
                              : quantize(phase, scheme);
  }
  throw config_error("unknown surrogate kind");
}

}  // namespace detail

/// Forward pass for all frames and planes. `phases` are the continuous
/// optimization variables; the configured quantizer/relaxation is applied here.
inline ForwardResult pipeline_forward(const PhaseStack& phases, const CalibratedModel& model,
                                      const QuantScheme& scheme, const SurrogateSpec& spec,
                                      std::span<const double> planes, std::uint64_t iteration,
                                      const PipelineOptions& opt = {}) {
  if (phases.empty()) throw config_error("pipeline_forward: no frames");
  if (planes.empty()) throw config_error("pipeline_forward: no planes");
  ForwardResult res;
  res.tf.reserve(planes.size());
  for (double z : planes) {
    if (!std::isfinite(z)) throw config_error("pipeline_forward: non-finite plane distance");
    if (opt.cache)
      res.tf.push_back(opt.cache->get(model, z));
    else
      res.tf.push_back(std::make_shared<const TransferFunction>(
          build_transfer(model.grid, z, &model.a_fourier, &model.phi_fourier)));
  }
  res.frames.resize(phases.size());
  for (std::size_t t = 0; t < phases.size(); ++t) {
    FrameTrace& tr = res.frames[t];
    tr.fwd_phase =
        detail::apply_forward_quantizer(phases[t], scheme, spec, iteration, opt.proxy_forward);
    tr.u_slm = slm_field(tr.fwd_phase, model);
    detail::stage_check(tr.u_slm, opt.check_finite, "source-term multiply");
    tr.spectrum = fft2_centered(tr.u_slm);
    detail::stage_check(tr.spectrum, opt.check_finite, "forward FFT");
    tr.outputs.reserve(planes.size());
    for (std::size_t j = 0; j < planes.size(); ++j) {
      ComplexField v(model.grid);
      for (std::size_t i = 0; i < v.size(); ++i) v.values[i] = tr.spectrum.values[i] * res.tf[j]->h[i];
      detail::stage_check(v, opt.check_finite, "transfer multiply");
      tr.outputs.push_back(ifft2_centered(v));
      detail::stage_check(tr.outputs.back(), opt.check_finite, "inverse FFT");
    }
  }
  const std::size_t frame_count = phases.size();
  res.amplitude.reserve(planes.size());
  std::vector<double> buf(frame_count);
  for (std::size_t j = 0; j < planes.size(); ++j) {
    RealMap amp(model.grid.height, model.grid.width, 0.0);
    for (std::size_t i = 0; i < amp.size(); ++i) {
      for (std::size_t t = 0; t < frame_count; ++t)
        buf[t] = std::norm(res.frames[t].outputs[j].values[i]);
      amp[i] = std::sqrt(ordered_sum(buf) / double(frame_count));
    }
    res.amplitude.push_back(std::move(amp));
  }
  return res;
}

/// Accumulated gradients with respect to the calibrated-model parameters.
struct ParamGrads {
  RealMap a_src, phi_src, a_fourier, phi_fourier;

  explicit ParamGrads(const GridSpec& g)
      : a_src(g.height, g.width, 0.0),
        phi_src(g.height, g.width, 0.0),
        a_fourier(g.height, g.width, 0.0),
        phi_fourier(g.height, g.width, 0.0) {}
};

/// Converts per-plane amplitude gradients dL/dA into per-frame complex field
/// gradients: G_t = dL/dA .* u_t / (T * (A + eps)).
inline std::vector<std::vector<ComplexField>> amp_grads_to_field_grads(
    const ForwardResult& fwd, const std::vector<RealMap>& dL_dA) {
  const std::size_t plane_count = fwd.amplitude.size();
  const std::size_t frame_count = fwd.frames.size();
  std::vector<std::vector<ComplexField>> grads(plane_count);
  for (std::size_t j = 0; j < plane_count; ++j) {
    grads[j].reserve(frame_count);
    const RealMap& amp = fwd.amplitude[j];
    for (std::size_t t = 0; t < frame_count; ++t) {
      const ComplexField& u = fwd.frames[t].outputs[j];
      ComplexField g(u.grid);
      for (std::size_t i = 0; i < g.size(); ++i)
        g.values[i] = dL_dA[j][i] * u.values[i] / (double(frame_count) * (amp[i] + kAmpEps));
      grads[j].push_back(std::move(g));
    }
  }
  return grads;
}

/// Reverse pass from per-plane per-frame complex gradients at the output
/// fields. Returns dL/dphase per frame (through the configured surrogate) and
/// optionally accumulates model-parameter gradients.
inline PhaseStack pipeline_backward(const ForwardResult& fwd,
                                    const std::vector<std::vector<ComplexField>>& field_grads,
                                    const PhaseStack& phases, const CalibratedModel& model,
                                    const QuantScheme& scheme, const SurrogateSpec& spec,
                                    std::uint64_t iteration, const PipelineOptions& opt = {},
                                    ParamGrads* pgrads = nullptr) {
  const std::size_t plane_count = fwd.amplitude.size();
  const std::size_t frame_count = fwd.frames.size();
  if (field_grads.size() != plane_count)
    throw dimension_error("pipeline_backward: plane count mismatch");
  const GridSpec& grid = model.grid;
  // exp(i phi_F) is shared by all planes; precompute for the a_F gradient.
  Array2<cplx> e_phi_f;
  if (pgrads) {
    e_phi_f = Array2<cplx>(grid.height, grid.width);
    for (std::size_t i = 0; i < e_phi_f.size(); ++i)
      e_phi_f[i] = cplx(std::cos(model.phi_fourier[i]), std::sin(model.phi_fourier[i]));
  }
  PhaseStack phase_grads(frame_count);
  for (std::size_t t = 0; t < frame_count; ++t) {
    const FrameTrace& tr = fwd.frames[t];
    ComplexField g_spec(grid);
    for (std::size_t j = 0; j < plane_count; ++j) {
      if (field_grads[j].size() != frame_count)
        throw dimension_error("pipeline_backward: frame count mismatch");
      // adjoint of ifft2 is fft2 (unitary transform)
      ComplexField g_v = fft2_centered(field_grads[j][t]);
      detail::stage_check(g_v, opt.check_finite, "adjoint of inverse FFT");
      const auto& h = fwd.tf[j]->h;
      for (std::size_t i = 0; i < g_spec.size(); ++i)
        g_spec.values[i] += g_v.values[i] * std::conj(h[i]);
      if (pgrads) {
        const auto& hb = fwd.tf[j]->h_base;
        for (std::size_t i = 0; i < g_spec.size(); ++i) {
          const cplx v = tr.spectrum.values[i] * h[i];
          pgrads->phi_fourier[i] += std::imag(g_v.values[i] * std::conj(v));
          pgrads->a_fourier[i] +=
              std::real(g_v.values[i] * std::conj(tr.spectrum.values[i] * hb[i] * e_phi_f[i]));
        }
      }
    }
    detail::stage_check(g_spec, opt.check_finite, "adjoint of transfer multiply");
    ComplexField g_uslm = ifft2_centered(g_spec);
    detail::stage_check(g_uslm, opt.check_finite, "adjoint of forward FFT");
    RealMap g_phase(grid.height, grid.width);
    for (std::size_t i = 0; i < g_phase.size(); ++i)
      g_phase[i] = std::imag(g_uslm.values[i] * std::conj(tr.u_slm.values[i]));
    if (pgrads) {
      for (std::size_t i = 0; i < g_phase.size(); ++i) {
        pgrads->phi_src[i] += g_phase[i];
        const double p = model.phi_src[i] + tr.fwd_phase[i];
        pgrads->a_src[i] += std::real(g_uslm.values[i] * cplx(std::cos(p), -std::sin(p)));
      }
    }
    if (spec.kind == SurrogateKind::naive || spec.kind == SurrogateKind::unit_jacobian) {
      phase_grads[t] = std::move(g_phase);
    } else {
      phase_grads[t] = surrogate_gradient(g_phase, phases[t], scheme, spec, iteration);
    }
  }
  return phase_grads;
}

}  // namespace holoq
