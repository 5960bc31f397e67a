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

#include <filesystem>
#include <string>
#include <vector>

#include "holoq/engine.hpp"
#include "holoq/image_io.hpp"
#include "holoq/serialize.hpp"
#include "holoq/stft.hpp"

// Target content (2D amplitude, RGBD, focal stack, light field) and the
// runtime losses supervising time-multiplexed quantized holograms. All losses
// are mean-squared errors over the compared entries, so magnitudes are
// resolution-independent.

namespace holoq {

enum class TargetKind { amp2d, rgbd, focal_stack, light_field };

inline const char* to_string(TargetKind k) {
  switch (k) {
    case TargetKind::amp2d: return "amp2d";
    case TargetKind::rgbd: return "rgbd";
    case TargetKind::focal_stack: return "focal_stack";
    case TargetKind::light_field: return "light_field";
  }
  return "?";
}

namespace detail {

inline void require_nonneg(const RealMap& m, const char* what) {
  for (double v : m) {
    if (!std::isfinite(v) || v < 0.0)
      throw config_error(std::string(what) + ": amplitudes must be finite and >= 0");
  }
}

}  // namespace detail

/// Tagged union of the supported supervision content.
struct TargetContent {
  TargetKind kind = TargetKind::amp2d;
  RealMap amplitude;                   // amp2d and rgbd
  RealMap depth;                       // rgbd, same units as the plane distances
  std::vector<RealMap> stack;          // focal_stack amplitudes
  std::vector<double> stack_distances; // focal_stack plane distances, ascending
  std::vector<RealMap> views;          // light_field amplitudes, row-major view grid
  int views_y = 0, views_x = 0;

  static TargetContent make_amp2d(RealMap amp) {
    detail::require_nonneg(amp, "amp2d target");
    TargetContent t;
    t.kind = TargetKind::amp2d;
    t.amplitude = std::move(amp);
    return t;
  }

  static TargetContent make_rgbd(RealMap amp, RealMap depth) {
    detail::require_nonneg(amp, "rgbd target");
    if (!amp.same_shape(depth)) throw dimension_error("rgbd: amplitude/depth shape mismatch");
    TargetContent t;
    t.kind = TargetKind::rgbd;
    t.amplitude = std::move(amp);
    t.depth = std::move(depth);
    return t;
  }

  static TargetContent make_focal_stack(std::vector<RealMap> planes, std::vector<double> z) {
    if (planes.empty() || planes.size() != z.size())
      throw config_error("focal_stack: need matching plane images and distances");
    for (std::size_t j = 1; j < z.size(); ++j)
      if (!(z[j] > z[j - 1])) throw config_error("focal_stack: distances must be ascending");
    for (const auto& p : planes) detail::require_nonneg(p, "focal_stack target");
    TargetContent t;
    t.kind = TargetKind::focal_stack;
    t.stack = std::move(planes);
    t.stack_distances = std::move(z);
    return t;
  }

  static TargetContent make_light_field(std::vector<RealMap> views, int views_y, int views_x) {
    if (views_y < 1 || views_x < 1 || views.size() != std::size_t(views_y) * views_x)
      throw config_error("light_field: view grid mismatch");
    for (const auto& v : views) detail::require_nonneg(v, "light_field target");
    TargetContent t;
    t.kind = TargetKind::light_field;
    t.views = std::move(views);
    t.views_y = views_y;
    t.views_x = views_x;
    return t;
  }
};

/// Binary depth masks m^(j), one per plane; exactly one mask is 1 per pixel.
struct MaskSet {
  std::vector<RealMap> masks;
  std::vector<double> distances;

  std::size_t plane_count() const { return masks.size(); }

  void validate() const {
    if (masks.empty() || masks.size() != distances.size())
      throw config_error("MaskSet: masks/distances mismatch");
    for (std::size_t i = 0; i < masks.front().size(); ++i) {
      double sum = 0.0;
      for (const auto& m : masks) {
        if (m[i] != 0.0 && m[i] != 1.0) throw config_error("MaskSet: masks must be binary");
        sum += m[i];
      }
      if (sum != 1.0) throw config_error("MaskSet: masks must partition the image");
    }
  }
};

/// Closest-distance decomposition of a depth map into binary plane masks.
/// Ties go to the smaller plane index.
inline MaskSet depth_to_masks(const RealMap& depth, const std::vector<double>& distances) {
  if (distances.empty()) throw config_error("depth_to_masks: need at least one distance");
  MaskSet set;
  set.distances = distances;
  set.masks.assign(distances.size(), RealMap(depth.rows(), depth.cols(), 0.0));
  for (std::size_t i = 0; i < depth.size(); ++i) {
    int best = 0;
    double best_d = std::abs(distances[0] - depth[i]);
    for (std::size_t j = 1; j < distances.size(); ++j) {
      const double d = std::abs(distances[j] - depth[i]);
      if (d < best_d) {
        best = int(j);
        best_d = d;
      }
    }
    set.masks[std::size_t(best)][i] = 1.0;
  }
  return set;
}

/// A fully specified supervision instance: what to compare against, at which
/// planes, and with what STFT layout if views are involved.
struct SupervisionProblem {
  TargetContent target;
  std::vector<double> planes;  // propagation distances; size J (1 for amp2d/light_field)
  MaskSet masks;               // rgbd only
  StftSpec stft_spec;          // light_field and the variance regularizer
  double stft_reg_weight = 0.0;

  static SupervisionProblem amp2d(TargetContent t, double z) {
    SupervisionProblem p;
    p.target = std::move(t);
    p.planes = {z};
    return p;
  }

  static SupervisionProblem rgbd(TargetContent t, const std::vector<double>& distances,
                                 double reg_weight = 0.0, StftSpec stft = {}) {
    SupervisionProblem p;
    p.target = std::move(t);
    p.masks = depth_to_masks(p.target.depth, distances);
    p.planes = distances;
    p.stft_reg_weight = reg_weight;
    p.stft_spec = stft;
    return p;
  }

  static SupervisionProblem focal_stack(TargetContent t) {
    SupervisionProblem p;
    p.planes = t.stack_distances;
    p.target = std::move(t);
    return p;
  }

  static SupervisionProblem light_field(TargetContent t, double z, StftSpec stft) {
    SupervisionProblem p;
    p.target = std::move(t);
    p.planes = {z};
    p.stft_spec = stft;
    return p;
  }
};

/// Loss value plus everything the optimizer needs: per-plane per-frame complex
/// gradients at the output fields, d(loss)/ds, and the accumulators whose
/// ratio gives the closed-form least-squares scale.
struct SupervisionEval {
  double loss = 0.0;
  std::vector<std::vector<ComplexField>> field_grads;  // [plane][frame], empty unless requested
  double dloss_ds = 0.0;
  double cf_num = 0.0;  // s* = cf_num / cf_den
  double cf_den = 0.0;
};

namespace detail {

/// Accumulates one masked amplitude-vs-target comparison with weight w.
/// Returns the per-plane dL/dA when grads are requested.
inline double amp_l2_term(const RealMap& amp, const RealMap& target, const RealMap* mask,
                          double s, double w, SupervisionEval& ev, RealMap* dL_dA) {
  if (!amp.same_shape(target)) throw dimension_error("loss: target shape mismatch");
  const double inv_p = 1.0 / double(amp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double m = mask ? (*mask)[i] : 1.0;
    if (m == 0.0) continue;
    const double r = s * amp[i] - target[i];
    acc += m * r * r;
    ev.dloss_ds += w * 2.0 * m * amp[i] * r * inv_p;
    ev.cf_num += w * m * amp[i] * target[i] * inv_p;
    ev.cf_den += w * m * amp[i] * amp[i] * inv_p;
    if (dL_dA) (*dL_dA)[i] += w * 2.0 * s * m * r * inv_p;
  }
  return w * acc * inv_p;
}

/// Combined multiframe STFT amplitude sqrt(mean_t |STFT(u_t)|^2).
struct LfAmplitude {
  std::vector<StftArray> per_frame;
  std::vector<double> amp;  // same layout as one StftArray
  int patches_y = 0, patches_x = 0, window = 0;
};

inline LfAmplitude lf_amplitude(const ForwardResult& fwd, std::size_t plane,
                                const StftSpec& spec) {
  LfAmplitude out;
  const std::size_t frame_count = fwd.frames.size();
  out.per_frame.reserve(frame_count);
  for (std::size_t t = 0; t < frame_count; ++t)
    out.per_frame.push_back(stft(fwd.frames[t].outputs[plane], spec));
  const StftArray& first = out.per_frame.front();
  out.patches_y = first.patches_y;
  out.patches_x = first.patches_x;
  out.window = first.window;
  out.amp.assign(first.data.size(), 0.0);
  std::vector<double> buf(frame_count);
  for (std::size_t i = 0; i < out.amp.size(); ++i) {
    for (std::size_t t = 0; t < frame_count; ++t) buf[t] = std::norm(out.per_frame[t].data[i]);
    out.amp[i] = std::sqrt(ordered_sum(buf) / double(frame_count));
  }
  return out;
}

/// Scatters dL/dA_lf back to per-frame field gradients through the STFT.
inline void lf_amp_grads_to_fields(const LfAmplitude& lf, const std::vector<double>& dL_dAlf,
                                   const ForwardResult& fwd, const GridSpec& grid,
                                   const StftSpec& spec,
                                   std::vector<ComplexField>& frame_grads) {
  const std::size_t frame_count = fwd.frames.size();
  for (std::size_t t = 0; t < frame_count; ++t) {
    StftArray g = lf.per_frame[t];
    for (std::size_t i = 0; i < g.data.size(); ++i)
      g.data[i] = dL_dAlf[i] * lf.per_frame[t].data[i] /
                  (double(frame_count) * (lf.amp[i] + kAmpEps));
    ComplexField gf = stft_adjoint(g, grid, spec);
    for (std::size_t i = 0; i < gf.size(); ++i) frame_grads[t].values[i] += gf.values[i];
  }
}

/// Mean of a mask over each patch footprint (out-of-grid pixels count as zero).
inline std::vector<double> patch_mask_weights(const RealMap& mask, const GridSpec& grid,
                                              const StftSpec& spec, int patches_y,
                                              int patches_x) {
  std::vector<double> w(std::size_t(patches_y) * patches_x, 0.0);
  const int win = spec.window_size;
  for (int py = 0; py < patches_y; ++py) {
    for (int px = 0; px < patches_x; ++px) {
      double acc = 0.0;
      for (int a = 0; a < win; ++a) {
        const int r = py * spec.hop + a;
        if (r >= grid.height) break;
        for (int b = 0; b < win; ++b) {
          const int c = px * spec.hop + b;
          if (c >= grid.width) break;
          acc += mask(r, c);
        }
      }
      w[std::size_t(py) * patches_x + px] = acc / double(win * win);
    }
  }
  return w;
}

/// Adds lambda * mean over planes/patches of the angular variance of the
/// masked, scaled, time-averaged STFT amplitude. The mask enters as a
/// per-patch weight (its footprint mean).
inline void add_stft_variance_reg(const MaskSet& masks, const StftSpec& spec, double lambda,
                                  const ForwardResult& fwd, double s, bool want_grads,
                                  SupervisionEval& ev) {
  const std::size_t plane_count = fwd.amplitude.size();
  const std::size_t frame_count = fwd.frames.size();
  const GridSpec& grid = fwd.frames.front().u_slm.grid;
  if (masks.plane_count() != plane_count)
    throw config_error("stft regularizer requires masks for every plane");
  if (want_grads && ev.field_grads.empty()) {
    ev.field_grads.assign(plane_count, {});
    for (auto& per_plane : ev.field_grads)
      for (std::size_t t = 0; t < frame_count; ++t) per_plane.emplace_back(grid);
  }
  for (std::size_t j = 0; j < plane_count; ++j) {
    const auto lf = lf_amplitude(fwd, j, spec);
    const auto weights = patch_mask_weights(masks.masks[j], grid, spec, lf.patches_y,
                                            lf.patches_x);
    const int bins = lf.window * lf.window;
    const std::size_t patch_count = weights.size();
    const double norm = lambda / (double(plane_count) * double(patch_count));
    std::vector<double> dL_dAlf(want_grads ? lf.amp.size() : 0, 0.0);
    for (std::size_t p = 0; p < patch_count; ++p) {
      const double wp = weights[p];
      const double* amp = lf.amp.data() + p * std::size_t(bins);
      // The masked amplitude is s * wp * amp, so var = s^2 * var(wp * amp).
      double mean0 = 0.0, mean_sq0 = 0.0;
      for (int b = 0; b < bins; ++b) {
        const double x0 = wp * amp[b];
        mean0 += x0;
        mean_sq0 += x0 * x0;
      }
      mean0 /= double(bins);
      mean_sq0 /= double(bins);
      const double var0 = mean_sq0 - mean0 * mean0;
      ev.loss += norm * s * s * var0;
      ev.dloss_ds += norm * 2.0 * s * var0;
      ev.cf_den += norm * var0;
      if (want_grads) {
        for (int b = 0; b < bins; ++b) {
          const double x0 = wp * amp[b];
          dL_dAlf[p * std::size_t(bins) + std::size_t(b)] =
              norm * 2.0 * s * s * wp * (x0 - mean0) / double(bins);
        }
      }
    }
    if (want_grads)
      lf_amp_grads_to_fields(lf, dL_dAlf, fwd, grid, spec, ev.field_grads[j]);
  }
}

}  // namespace detail

/// Evaluates the configured supervision on a finished forward pass.
inline SupervisionEval evaluate_supervision(const SupervisionProblem& prob,
                                            const ForwardResult& fwd, double s,
                                            bool want_grads) {
  SupervisionEval ev;
  const std::size_t plane_count = fwd.amplitude.size();
  const std::size_t frame_count = fwd.frames.size();
  const GridSpec& grid = fwd.frames.front().u_slm.grid;
  std::vector<RealMap> dL_dA;
  auto ensure_amp_grads = [&]() {
    if (want_grads && dL_dA.empty())
      dL_dA.assign(plane_count, RealMap(grid.height, grid.width, 0.0));
  };
  auto ensure_field_grads = [&]() {
    if (want_grads && ev.field_grads.empty()) {
      ev.field_grads.assign(plane_count, {});
      for (auto& per_plane : ev.field_grads)
        for (std::size_t t = 0; t < frame_count; ++t) per_plane.emplace_back(grid);
    }
  };

  switch (prob.target.kind) {
    case TargetKind::amp2d: {
      if (plane_count != 1) throw config_error("amp2d supervision expects one plane");
      ensure_amp_grads();
      ev.loss += detail::amp_l2_term(fwd.amplitude[0], prob.target.amplitude, nullptr, s, 1.0,
                                     ev, want_grads ? &dL_dA[0] : nullptr);
      break;
    }
    case TargetKind::rgbd: {
      if (prob.masks.plane_count() != plane_count)
        throw config_error("rgbd supervision: mask/plane count mismatch");
      ensure_amp_grads();
      const double w = 1.0 / double(plane_count);
      for (std::size_t j = 0; j < plane_count; ++j)
        ev.loss += detail::amp_l2_term(fwd.amplitude[j], prob.target.amplitude,
                                       &prob.masks.masks[j], s, w, ev,
                                       want_grads ? &dL_dA[j] : nullptr);
      break;
    }
    case TargetKind::focal_stack: {
      if (prob.target.stack.size() != plane_count)
        throw config_error("focal-stack supervision: plane count mismatch");
      ensure_amp_grads();
      const double w = 1.0 / double(plane_count);
      for (std::size_t j = 0; j < plane_count; ++j)
        ev.loss += detail::amp_l2_term(fwd.amplitude[j], prob.target.stack[j], nullptr, s, w, ev,
                                       want_grads ? &dL_dA[j] : nullptr);
      break;
    }
    case TargetKind::light_field: {
      if (plane_count != 1) throw config_error("light-field supervision expects one plane");
      const auto lf = detail::lf_amplitude(fwd, 0, prob.stft_spec);
      const int win = lf.window;
      if (prob.target.views_y * prob.target.views_x != win * win)
        throw config_error("light-field supervision: view count != stft angular bins");
      for (const auto& v : prob.target.views)
        if (v.rows() != lf.patches_y || v.cols() != lf.patches_x)
          throw config_error("light-field supervision: view image must match the patch grid");
      const double inv_n = 1.0 / double(lf.amp.size());
      std::vector<double> dL_dAlf(want_grads ? lf.amp.size() : 0, 0.0);
      std::size_t idx = 0;
      for (int py = 0; py < lf.patches_y; ++py) {
        for (int px = 0; px < lf.patches_x; ++px) {
          for (int a = 0; a < win; ++a) {
            for (int b = 0; b < win; ++b, ++idx) {
              const double t = prob.target.views[std::size_t(a) * win + b](py, px);
              const double r = s * lf.amp[idx] - t;
              ev.loss += r * r * inv_n;
              ev.dloss_ds += 2.0 * lf.amp[idx] * r * inv_n;
              ev.cf_num += lf.amp[idx] * t * inv_n;
              ev.cf_den += lf.amp[idx] * lf.amp[idx] * inv_n;
              if (want_grads) dL_dAlf[idx] = 2.0 * s * r * inv_n;
            }
          }
        }
      }
      if (want_grads) {
        ensure_field_grads();
        detail::lf_amp_grads_to_fields(lf, dL_dAlf, fwd, grid, prob.stft_spec,
                                       ev.field_grads[0]);
      }
      break;
    }
  }

  // Optional STFT angular-variance regularizer over the masked planes.
  if (prob.stft_reg_weight > 0.0)
    detail::add_stft_variance_reg(prob.masks, prob.stft_spec, prob.stft_reg_weight, fwd, s,
                                  want_grads, ev);

  if (want_grads && !dL_dA.empty()) {
    auto amp_grads = amp_grads_to_field_grads(fwd, dL_dA);
    if (ev.field_grads.empty()) {
      ev.field_grads = std::move(amp_grads);
    } else {
      for (std::size_t j = 0; j < plane_count; ++j)
        for (std::size_t t = 0; t < frame_count; ++t)
          for (std::size_t i = 0; i < amp_grads[j][t].size(); ++i)
            ev.field_grads[j][t].values[i] += amp_grads[j][t].values[i];
    }
  }
  return ev;
}

namespace detail {

inline double loss_value(const SupervisionProblem& prob, const PhaseStack& phases,
                         const CalibratedModel& model, const QuantScheme& scheme,
                         const SurrogateSpec& spec, double s, std::uint64_t iteration,
                         TransferCache* cache) {
  if (!(s > 0.0)) throw config_error("loss: scale s must be > 0");
  PipelineOptions opt;
  opt.cache = cache;
  const auto fwd = pipeline_forward(phases, model, scheme, spec, prob.planes, iteration, opt);
  return evaluate_supervision(prob, fwd, s, false).loss;
}

}  // namespace detail

/// l2(s * time-multiplexed amplitude at z, target).
inline double loss_2d(const PhaseStack& phases, const CalibratedModel& model,
                      const QuantScheme& scheme, const SurrogateSpec& spec, double s,
                      const RealMap& target, double z, std::uint64_t iteration = 0,
                      TransferCache* cache = nullptr) {
  detail::require_nonneg(target, "loss_2d target");
  return detail::loss_value(SupervisionProblem::amp2d(TargetContent::make_amp2d(target), z),
                            phases, model, scheme, spec, s, iteration, cache);
}

/// Multiplane masked loss: mean over planes of l2 on m^(j)-selected pixels.
inline double loss_25d(const PhaseStack& phases, const CalibratedModel& model,
                       const QuantScheme& scheme, const SurrogateSpec& spec, double s,
                       const TargetContent& rgbd, const MaskSet& masks,
                       std::uint64_t iteration = 0, TransferCache* cache = nullptr) {
  if (rgbd.kind != TargetKind::rgbd) throw config_error("loss_25d: target must be rgbd");
  SupervisionProblem prob;
  prob.target = rgbd;
  prob.masks = masks;
  prob.planes = masks.distances;
  return detail::loss_value(prob, phases, model, scheme, spec, s, iteration, cache);
}

/// Focal-stack loss: mean over planes of l2 at each slice distance.
inline double loss_3d(const PhaseStack& phases, const CalibratedModel& model,
                      const QuantScheme& scheme, const SurrogateSpec& spec, double s,
                      const TargetContent& focal_stack, std::uint64_t iteration = 0,
                      TransferCache* cache = nullptr) {
  if (focal_stack.kind != TargetKind::focal_stack)
    throw config_error("loss_3d: target must be a focal stack");
  return detail::loss_value(SupervisionProblem::focal_stack(focal_stack), phases, model, scheme,
                            spec, s, iteration, cache);
}

/// Light-field loss through the STFT view transform.
inline double loss_4d(const PhaseStack& phases, const CalibratedModel& model,
                      const QuantScheme& scheme, const SurrogateSpec& spec, double s,
                      const TargetContent& light_field, double z, const StftSpec& stft_spec,
                      std::uint64_t iteration = 0, TransferCache* cache = nullptr) {
  if (light_field.kind != TargetKind::light_field)
    throw config_error("loss_4d: target must be a light field");
  return detail::loss_value(SupervisionProblem::light_field(light_field, z, stft_spec), phases,
                            model, scheme, spec, s, iteration, cache);
}

/// Mean angular variance of the masked, scaled, time-averaged STFT amplitude.
inline double stft_variance_reg(const PhaseStack& phases, const CalibratedModel& model,
                                const QuantScheme& scheme, const SurrogateSpec& spec, double s,
                                const MaskSet& masks, const StftSpec& stft_spec,
                                std::uint64_t iteration = 0, TransferCache* cache = nullptr) {
  if (!(s > 0.0)) throw config_error("stft_variance_reg: scale s must be > 0");
  PipelineOptions opt;
  opt.cache = cache;
  const auto fwd =
      pipeline_forward(phases, model, scheme, spec, masks.distances, iteration, opt);
  SupervisionEval ev;
  detail::add_stft_variance_reg(masks, stft_spec, 1.0, fwd, s, false, ev);
  return ev.loss;
}

/// Loads an amplitude target from PNG: pixel / max, linearized by `gamma`.
inline RealMap load_amplitude_png(const std::string& path, double gamma = 2.2) {
  GrayImage img = read_png_gray(path);
  RealMap amp = std::move(img.pixels);
  for (double& v : amp) v = std::pow(v, gamma);
  return amp;
}

/// Loads a focal stack from a directory with an index manifest
/// { "planes": [ { "file": ..., "z": ... }, ... ] }.
inline TargetContent load_focal_stack_dir(const std::string& dir, double gamma = 2.2) {
  const auto manifest = load_json((std::filesystem::path(dir) / "manifest.json").string());
  std::vector<RealMap> planes;
  std::vector<double> z;
  for (const auto& entry : manifest.at("planes")) {
    planes.push_back(load_amplitude_png(
        (std::filesystem::path(dir) / entry.at("file").get<std::string>()).string(), gamma));
    z.push_back(entry.at("z").get<double>());
  }
  return TargetContent::make_focal_stack(std::move(planes), std::move(z));
}

/// Loads a light field from a directory with an index manifest
/// { "grid": [Vy, Vx], "views": [ { "file": ..., "vy": ..., "vx": ... } ] }.
inline TargetContent load_light_field_dir(const std::string& dir, double gamma = 2.2) {
  const auto manifest = load_json((std::filesystem::path(dir) / "manifest.json").string());
  const int vy = manifest.at("grid").at(0).get<int>();
  const int vx = manifest.at("grid").at(1).get<int>();
  std::vector<RealMap> views(std::size_t(vy) * vx);
  std::vector<bool> seen(views.size(), false);
  for (const auto& entry : manifest.at("views")) {
    const int a = entry.at("vy").get<int>();
    const int b = entry.at("vx").get<int>();
    if (a < 0 || a >= vy || b < 0 || b >= vx)
      throw config_error("light field manifest: view index out of range");
    views[std::size_t(a) * vx + b] = load_amplitude_png(
        (std::filesystem::path(dir) / entry.at("file").get<std::string>()).string(), gamma);
    seen[std::size_t(a) * vx + b] = true;
  }
  for (bool s : seen)
    if (!s) throw config_error("light field manifest: missing view");
  return TargetContent::make_light_field(std::move(views), vy, vx);
}

}  // namespace holoq
