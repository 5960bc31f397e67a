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
#include <numeric>

#include "holoq/citl.hpp"
#include "holoq/metrics.hpp"

// Fits the parametric display model (a_src, phi_src, a_F, phi_F, lut) to
// pattern/capture pairs from a PhysicalDisplay, mirroring the ablation-ladder
// methodology: each parameter group can be toggled independently.

namespace holoq {

enum class Split { train = 0, val = 1, test = 2, held_out = 3 };

struct CaptureEntry {
  IndexMap pattern;   // level indices sent to the SLM
  int plane = 0;      // index into plane_distances
  RealMap intensity;  // captured intensity
  Split split = Split::train;
};

struct CaptureDataset {
  GridSpec grid;
  std::vector<double> plane_distances;
  int held_out_plane = defaults::kHeldOutPlane;
  int addressing_bits = 4;
  std::vector<CaptureEntry> entries;

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.split == s ? 1 : 0;
    return n;
  }
};

/// Synthetic capture dataset: `count` phase patterns, each captured at every
/// plane. Patterns alternate between uniformly random phases and
/// short-run SGD holograms for random procedural targets at random distances,
/// so level statistics span the full feasible set.
inline CaptureDataset generate_dataset(const PhysicalDisplay& display, int count,
                                       std::uint64_t seed, TransferCache* cache = nullptr) {
  if (count < 1) throw config_error("generate_dataset: count must be >= 1");
  CaptureDataset ds;
  ds.grid = display.truth.grid;
  ds.plane_distances = display.truth.distances;
  ds.held_out_plane = defaults::kHeldOutPlane < int(ds.plane_distances.size())
                          ? defaults::kHeldOutPlane
                          : int(ds.plane_distances.size()) - 1;
  ds.addressing_bits = display.addressing.bit_depth;
  const int plane_count = int(ds.plane_distances.size());
  rng::Stream stream(rng::combine(seed, 0x64617461736574ull));

  for (int p = 0; p < count; ++p) {
    rng::Stream ps = stream.fork(std::uint64_t(p));
    IndexMap pattern;
    if (p % 2 == 0) {
      RealMap phi(ds.grid.height, ds.grid.width);
      for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = ps.uniform(i, 0.0, kTwoPi);
      pattern = quantize_indices(phi, display.addressing);
    } else {
      // short SGD run against a random target at a random plane
      OptimConfig cfg;
      cfg.iterations = 40;
      cfg.frames = 1;
      cfg.rule = StepRule::continuous;
      cfg.surrogate.kind = SurrogateKind::naive;
      cfg.algo = OptimAlgo::adam;
      cfg.lr = ps.uniform(1, 0.02, 0.1);
      cfg.early_stop.enabled = false;
      cfg.seed = ps.key(2);
      const int target_idx = int(ps.uniform(3, 0.0, 8.0));
      const int plane = int(ps.uniform(4, 0.0, double(plane_count)));
      const auto target = builtin_target(target_idx, ds.grid.height, ds.grid.width);
      const auto prob = SupervisionProblem::amp2d(TargetContent::make_amp2d(target),
                                                  ds.plane_distances[std::size_t(plane)]);
      CalibratedModel nominal = CalibratedModel::nominal(ds.grid, ds.plane_distances,
                                                         std::max(1, ds.addressing_bits));
      OptimRun run = optimize(prob, nominal, display.addressing, cfg, cache);
      pattern = std::move(run.exported.front());
    }
    // 8:1:1 split by pattern; the held-out plane overrides per entry.
    const double u = rng::unit_open(ps.key(5));
    const Split pattern_split = u < 0.8 ? Split::train : (u < 0.9 ? Split::val : Split::test);
    for (int j = 0; j < plane_count; ++j) {
      CaptureEntry e;
      e.pattern = pattern;
      e.plane = j;
      e.intensity = capture_indices(display, pattern, ds.plane_distances[std::size_t(j)],
                                    std::uint64_t(p) * std::uint64_t(plane_count) + std::uint64_t(j),
                                    cache);
      e.split = j == ds.held_out_plane ? Split::held_out : pattern_split;
      ds.entries.push_back(std::move(e));
    }
  }
  return ds;
}

/// Which parameter groups a fit may modify (the ablation ladder axis).
struct FitGroups {
  bool a_src = false;
  bool phi_src = false;
  bool a_fourier = false;
  bool phi_fourier = false;
  bool lut = false;

  bool any() const { return a_src || phi_src || a_fourier || phi_fourier || lut; }

  std::string label() const {
    std::string s;
    if (a_src) s += "+a_src";
    if (phi_src) s += "+phi_src";
    if (phi_fourier) s += "+phi_F";
    if (a_fourier) s += "+a_F";
    if (lut) s += "+lut";
    return s.empty() ? "none" : s;
  }
};

struct FitResult {
  CalibratedModel model;
  std::vector<double> train_history;  // mean amplitude MSE per epoch
  std::vector<double> val_history;
};

namespace detail {

struct AdamScalarState {
  std::vector<double> m, v;
  void init(std::size_t n) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
  void apply(double* params, const double* grads, std::size_t n, double lr, long step,
             double b1 = 0.9, double b2 = 0.999, double eps = 1e-8) {
    const double bc1 = 1.0 - std::pow(b1, double(step));
    const double bc2 = 1.0 - std::pow(b2, double(step));
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grads[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grads[i] * grads[i];
      params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

/// Amplitude MSE of one entry plus (optionally) parameter gradients.
inline double entry_loss(const CaptureDataset& ds, const CaptureEntry& e,
                         const CalibratedModel& model, ParamGrads* pgrads,
                         std::vector<double>* lut_grads, double weight) {
  const RealMap phase = apply_lut(e.pattern, model.lut);
  const std::vector<double> planes = {ds.plane_distances[std::size_t(e.plane)]};
  SurrogateSpec spec;
  spec.kind = SurrogateKind::naive;
  // Uncached forward: the model parameters change every batch.
  QuantScheme dummy = QuantScheme::uniform(1);
  const PhaseStack stack = {phase};
  const auto fwd = pipeline_forward(stack, model, dummy, spec, planes, 0, {});
  const RealMap& amp = fwd.amplitude[0];
  const double inv_p = 1.0 / double(amp.size());
  RealMap dL_dA(amp.rows(), amp.cols());
  double loss = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double a_cap = std::sqrt(e.intensity[i]);
    const double r = amp[i] - a_cap;
    loss += r * r * inv_p;
    dL_dA[i] = 2.0 * r * inv_p * weight;
  }
  if (pgrads) {
    const auto field_grads = amp_grads_to_field_grads(fwd, {dL_dA});
    const PhaseStack phase_grads =
        pipeline_backward(fwd, field_grads, stack, model, dummy, spec, 0, {}, pgrads);
    if (lut_grads) {
      for (std::size_t i = 0; i < phase.size(); ++i)
        (*lut_grads)[std::size_t(e.pattern[i])] += phase_grads[0][i];
    }
  }
  return loss;
}

inline double split_loss(const CaptureDataset& ds, const CalibratedModel& model, Split split) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& e : ds.entries) {
    if (e.split != split) continue;
    acc += entry_loss(ds, e, model, nullptr, nullptr, 1.0);
    ++n;
  }
  return n ? acc / double(n) : 0.0;
}

}  // namespace detail

/// Gradient fit of the enabled parameter groups on the train split (Adam,
/// batch size 2, deterministic batch order from the seed). Disabled groups are
/// never touched.
inline FitResult fit_model(const CaptureDataset& ds, const CalibratedModel& init,
                           const FitGroups& groups, int epochs, double lr = 4e-4,
                           std::uint64_t seed = 1) {
  if (!groups.any()) throw config_error("fit_model: all parameter groups disabled");
  if (ds.entries.empty()) throw config_error("fit_model: empty dataset");
  FitResult res;
  res.model = init;
  CalibratedModel& model = res.model;

  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < ds.entries.size(); ++i)
    if (ds.entries[i].split == Split::train) train_idx.push_back(i);
  if (train_idx.empty()) throw config_error("fit_model: no training entries");

  const std::size_t px = model.grid.pixels();
  detail::AdamScalarState st_a_src, st_phi_src, st_a_f, st_phi_f, st_lut;
  st_a_src.init(px);
  st_phi_src.init(px);
  st_a_f.init(px);
  st_phi_f.init(px);
  st_lut.init(model.lut.size());
  long step = 0;
  constexpr int kBatch = 2;

  rng::Stream order_stream = rng::Stream(seed).fork(0x6f72646572ull);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    // deterministic shuffle per epoch
    std::vector<std::size_t> order = train_idx;
    rng::Stream es = order_stream.fork(std::uint64_t(epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = std::size_t(es.uniform(i, 0.0, double(i)));
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); b += kBatch) {
      const std::size_t batch_end = std::min(order.size(), b + kBatch);
      ParamGrads pg(model.grid);
      std::vector<double> lut_grads(model.lut.size(), 0.0);
      const double w = 1.0 / double(batch_end - b);
      for (std::size_t i = b; i < batch_end; ++i)
        epoch_loss += detail::entry_loss(ds, ds.entries[order[i]], model, &pg,
                                         groups.lut ? &lut_grads : nullptr, w);
      ++step;
      if (groups.a_src) {
        st_a_src.apply(model.a_src.data(), pg.a_src.data(), px, lr, step);
        for (double& v : model.a_src) v = std::max(0.0, v);
      }
      if (groups.phi_src) st_phi_src.apply(model.phi_src.data(), pg.phi_src.data(), px, lr, step);
      if (groups.a_fourier) {
        st_a_f.apply(model.a_fourier.data(), pg.a_fourier.data(), px, lr, step);
        for (double& v : model.a_fourier) v = std::max(0.0, v);
      }
      if (groups.phi_fourier)
        st_phi_f.apply(model.phi_fourier.data(), pg.phi_fourier.data(), px, lr, step);
      if (groups.lut)
        st_lut.apply(model.lut.data(), lut_grads.data(), model.lut.size(), lr, step);
    }
    res.train_history.push_back(epoch_loss / double(train_idx.size()));
    res.val_history.push_back(detail::split_loss(ds, model, Split::val));
  }
  return res;
}

struct EvalSummary {
  double mean_psnr = 0.0;
  std::size_t entries = 0;
};

/// Mean PSNR between predicted and captured amplitudes over one split. The
/// peak is the per-entry max captured amplitude.
inline EvalSummary eval_model(const CalibratedModel& model, const CaptureDataset& ds,
                              Split split) {
  EvalSummary sum;
  for (const auto& e : ds.entries) {
    if (e.split != split) continue;
    const RealMap phase = apply_lut(e.pattern, model.lut);
    const ComplexField u =
        model_forward(phase, model, ds.plane_distances[std::size_t(e.plane)]);
    RealMap amp(phase.rows(), phase.cols()), a_cap(phase.rows(), phase.cols());
    double peak = 0.0;
    for (std::size_t i = 0; i < amp.size(); ++i) {
      amp[i] = std::abs(u.values[i]);
      a_cap[i] = std::sqrt(e.intensity[i]);
      peak = std::max(peak, a_cap[i]);
    }
    sum.mean_psnr += psnr_peak(amp, a_cap, peak > 0.0 ? peak : 1.0);
    ++sum.entries;
  }
  if (sum.entries == 0) throw config_error("eval_model: empty split");
  sum.mean_psnr /= double(sum.entries);
  return sum;
}

/// Persists a dataset as manifest JSON plus per-entry raw float32 arrays.
inline void save_dataset(const CaptureDataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  json manifest;
  manifest["grid"] = grid_to_json(ds.grid);
  manifest["plane_distances"] = ds.plane_distances;
  manifest["held_out_plane"] = ds.held_out_plane;
  manifest["addressing_bits"] = ds.addressing_bits;
  json entries = json::array();
  for (std::size_t i = 0; i < ds.entries.size(); ++i) {
    const auto& e = ds.entries[i];
    char pat[32], cap[32];
    std::snprintf(pat, sizeof pat, "pattern_%05zu.f32", i);
    std::snprintf(cap, sizeof cap, "capture_%05zu.f32", i);
    RealMap pattern_f(e.pattern.rows(), e.pattern.cols());
    for (std::size_t k = 0; k < pattern_f.size(); ++k) pattern_f[k] = double(e.pattern[k]);
    write_raw_f32((fs::path(dir) / pat).string(), pattern_f);
    write_raw_f32((fs::path(dir) / cap).string(), e.intensity);
    entries.push_back({{"pattern", pat},
                       {"capture", cap},
                       {"plane", e.plane},
                       {"split", int(e.split)}});
  }
  manifest["entries"] = entries;
  save_json((fs::path(dir) / "manifest.json").string(), manifest);
}

inline CaptureDataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const json manifest = load_json((fs::path(dir) / "manifest.json").string());
  CaptureDataset ds;
  ds.grid = grid_from_json(manifest.at("grid"));
  ds.plane_distances = manifest.at("plane_distances").get<std::vector<double>>();
  ds.held_out_plane = manifest.at("held_out_plane").get<int>();
  ds.addressing_bits = manifest.at("addressing_bits").get<int>();
  for (const auto& je : manifest.at("entries")) {
    CaptureEntry e;
    const RealMap pattern_f = read_raw_f32(
        (fs::path(dir) / je.at("pattern").get<std::string>()).string(), ds.grid.height,
        ds.grid.width);
    e.pattern = IndexMap(ds.grid.height, ds.grid.width);
    for (std::size_t k = 0; k < e.pattern.size(); ++k) e.pattern[k] = int(pattern_f[k]);
    e.intensity = read_raw_f32((fs::path(dir) / je.at("capture").get<std::string>()).string(),
                               ds.grid.height, ds.grid.width);
    e.plane = je.at("plane").get<int>();
    e.split = Split(je.at("split").get<int>());
    ds.entries.push_back(std::move(e));
  }
  return ds;
}

}  // namespace holoq
