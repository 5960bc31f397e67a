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

#include <limits>
#include <optional>

#include "holoq/engine.hpp"
#include "holoq/supervision.hpp"

// Iterative phase optimization for time-multiplexed quantized holograms:
// gradient assembly through the pipeline, the three step rules (continuous,
// projected, surrogate), annealing schedules, and the scale factor s.

namespace holoq {

/// How the quantizer enters the iteration.
enum class StepRule {
  continuous,  // ignore the quantizer; quantize once at export
  projected,   // gradient step then projection onto the feasible set each iteration
  surrogate,   // quantized/relaxed forward, surrogate backward
};

inline const char* to_string(StepRule r) {
  switch (r) {
    case StepRule::continuous: return "continuous";
    case StepRule::projected: return "projected";
    case StepRule::surrogate: return "surrogate";
  }
  return "?";
}

enum class ScaleMode { closed_form, joint_gradient };
enum class OptimAlgo { gd, adam };

/// Iteration-dependent parameters: tau decays exponentially, the score scale
/// ramps linearly, the sigmoid slope ramps geometrically.
struct AnnealSchedule {
  double tau_start = 4.0;
  double tau_decay = 0.6931471805599453;  // ln 2
  double score_scale_start = 300.0;
  double score_scale_end = 1000.0;
  double slope_start = 0.0;  // 0 disables slope annealing (fixed spec.slope)
  double slope_end = 0.0;

  double tau(double progress) const { return tau_start * std::exp(-tau_decay * progress); }

  double score_scale(double progress) const {
    return score_scale_start + (score_scale_end - score_scale_start) * progress;
  }

  double sigmoid_slope(double progress, double fallback) const {
    if (slope_start <= 0.0 || slope_end <= 0.0) return fallback;
    return slope_start * std::pow(slope_end / slope_start, progress);
  }
};

struct EarlyStopConfig {
  bool enabled = true;
  int patience = 100;
  double rel_tol = 1e-5;
};

/// Stops when the best loss has not improved by rel_tol over patience steps.
class EarlyStopMonitor {
 public:
  explicit EarlyStopMonitor(const EarlyStopConfig& cfg) : cfg_(cfg) {}

  /// Feed one loss value; returns true when the run should stop.
  bool should_stop(double loss) {
    if (!cfg_.enabled) return false;
    if (loss < best_ - cfg_.rel_tol * std::max(std::abs(best_), 1e-300) || !seen_) {
      best_ = loss;
      since_improvement_ = 0;
      seen_ = true;
      return false;
    }
    ++since_improvement_;
    return since_improvement_ >= cfg_.patience;
  }

 private:
  EarlyStopConfig cfg_;
  double best_ = std::numeric_limits<double>::infinity();
  int since_improvement_ = 0;
  bool seen_ = false;
};

struct OptimConfig {
  int iterations = 2000;
  double lr = 0.0;  // 0 selects the default: 0.01 for T == 1, 0.02 otherwise
  int frames = 1;   // T
  StepRule rule = StepRule::surrogate;
  SurrogateSpec surrogate;
  AnnealSchedule anneal;
  ScaleMode scale_mode = ScaleMode::closed_form;
  OptimAlgo algo = OptimAlgo::gd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  EarlyStopConfig early_stop;
  std::uint64_t seed = 1;
  double s_init = 0.0;  // 0 selects the closed-form scale at iteration 0

  double effective_lr() const { return lr > 0.0 ? lr : (frames == 1 ? 0.01 : 0.02); }

  void validate() const {
    if (iterations < 1) throw config_error("OptimConfig: iterations must be >= 1");
    if (frames < 1) throw config_error("OptimConfig: frames must be >= 1");
    if (lr < 0.0) throw config_error("OptimConfig: lr must be >= 0");
    if (rule == StepRule::surrogate && surrogate.kind != SurrogateKind::naive)
      surrogate.validate();
  }
};

struct OptimRun {
  PhaseStack phases;             // final continuous iterate
  double s = 1.0;
  std::vector<double> loss_history;
  std::vector<IndexMap> exported;  // hard-quantized level indices per frame
  int executed_iterations = 0;
  bool early_stopped = false;

  double final_loss() const { return loss_history.empty() ? 0.0 : loss_history.back(); }
};

struct GradientResult {
  double loss = 0.0;
  PhaseStack phase_grads;
  double dloss_ds = 0.0;
  double cf_num = 0.0;
  double cf_den = 0.0;
};

/// One full forward/backward: dL/dphases and dL/ds for the configured loss
/// and surrogate. Matches finite differences of the proxy-forward loss.
inline GradientResult supervision_gradient(const SupervisionProblem& prob,
                                           const PhaseStack& phases,
                                           const CalibratedModel& model,
                                           const QuantScheme& scheme, const SurrogateSpec& spec,
                                           double s, std::uint64_t iteration = 0,
                                           const PipelineOptions& opt = {},
                                           ParamGrads* pgrads = nullptr) {
  const auto fwd = pipeline_forward(phases, model, scheme, spec, prob.planes, iteration, opt);
  SupervisionEval ev = evaluate_supervision(prob, fwd, s, true);
  GradientResult res;
  res.loss = ev.loss;
  res.dloss_ds = ev.dloss_ds;
  res.cf_num = ev.cf_num;
  res.cf_den = ev.cf_den;
  res.phase_grads =
      pipeline_backward(fwd, ev.field_grads, phases, model, scheme, spec, iteration, opt, pgrads);
  return res;
}

namespace detail {

struct AdamState {
  std::vector<RealMap> m, v;
  long step = 0;

  void init(const PhaseStack& phases) {
    m.assign(phases.size(), RealMap(phases[0].rows(), phases[0].cols(), 0.0));
    v = m;
  }

  void apply(PhaseStack& phases, const PhaseStack& grads, const OptimConfig& cfg) {
    ++step;
    const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
    const double bc1 = 1.0 - std::pow(b1, double(step));
    const double bc2 = 1.0 - std::pow(b2, double(step));
    const double lr = cfg.effective_lr();
    for (std::size_t t = 0; t < phases.size(); ++t) {
      for (std::size_t i = 0; i < phases[t].size(); ++i) {
        const double g = grads[t][i];
        m[t][i] = b1 * m[t][i] + (1.0 - b1) * g;
        v[t][i] = b2 * v[t][i] + (1.0 - b2) * g * g;
        phases[t][i] -= lr * (m[t][i] / bc1) / (std::sqrt(v[t][i] / bc2) + cfg.adam_eps);
      }
    }
  }
};

}  // namespace detail

/// Random phase initialization: uniform(-pi, pi) i.i.d. per pixel per frame.
inline PhaseStack random_phase_init(const GridSpec& grid, int frames, std::uint64_t seed) {
  rng::Stream init_stream = rng::Stream(seed).fork(0x696e6974ull);  // "init"
  PhaseStack phases;
  phases.reserve(std::size_t(frames));
  for (int t = 0; t < frames; ++t) {
    rng::Stream frame_stream = init_stream.fork(std::uint64_t(t));
    RealMap p(grid.height, grid.width);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = frame_stream.uniform(i, -kPi, kPi);
    phases.push_back(std::move(p));
  }
  return phases;
}

/// Core loop: step() computes one iteration's loss and applies updates.
/// Handles history, early stopping, and non-finite diagnostics.
template <class StepFn>
inline void run_optimize_loop(const OptimConfig& cfg, OptimRun& run, StepFn&& step) {
  EarlyStopMonitor monitor(cfg.early_stop);
  for (int k = 0; k < cfg.iterations; ++k) {
    const double loss = step(std::uint64_t(k));
    if (!std::isfinite(loss))
      throw numeric_error("optimize: non-finite loss at iteration " + std::to_string(k));
    run.loss_history.push_back(loss);
    run.executed_iterations = k + 1;
    if (monitor.should_stop(loss)) {
      run.early_stopped = true;
      break;
    }
  }
}

/// Full phase optimization for any supervision kind. Deterministic given the
/// seed: identical configs reproduce loss_history and exports bit-for-bit.
inline OptimRun optimize(const SupervisionProblem& prob, const CalibratedModel& model,
                         const QuantScheme& scheme, const OptimConfig& cfg,
                         TransferCache* cache = nullptr,
                         std::optional<PhaseStack> init = std::nullopt) {
  cfg.validate();
  model.validate();
  scheme.validate();
  PipelineOptions opt;
  opt.cache = cache;

  OptimRun run;
  run.phases = init ? std::move(*init) : random_phase_init(model.grid, cfg.frames, cfg.seed);
  if (int(run.phases.size()) != cfg.frames)
    throw config_error("optimize: initial phases do not match cfg.frames");
  for (const auto& p : run.phases)
    if (p.rows() != model.grid.height || p.cols() != model.grid.width)
      throw config_error("optimize: initial phase shape does not match the model grid");

  detail::AdamState adam;
  if (cfg.algo == OptimAlgo::adam) adam.init(run.phases);

  const double denom = cfg.iterations > 1 ? double(cfg.iterations - 1) : 1.0;
  auto spec_at = [&](int k) {
    SurrogateSpec spec = cfg.surrogate;
    if (cfg.rule == StepRule::continuous || cfg.rule == StepRule::projected)
      spec.kind = SurrogateKind::naive;
    const double progress = double(k) / denom;
    spec.temperature = cfg.anneal.tau(progress);
    spec.score_scale = cfg.anneal.score_scale(progress);
    if (spec.kind == SurrogateKind::sigmoid)
      spec.slope = cfg.anneal.sigmoid_slope(progress, spec.slope);
    spec.rng_seed = cfg.surrogate.rng_seed ? cfg.surrogate.rng_seed : cfg.seed;
    return spec;
  };

  // s0: closed-form least-squares fit of the initial reconstruction.
  if (cfg.s_init > 0.0) {
    run.s = cfg.s_init;
  } else {
    const auto fwd =
        pipeline_forward(run.phases, model, scheme, spec_at(0), prob.planes, 0, opt);
    const SupervisionEval ev = evaluate_supervision(prob, fwd, 1.0, false);
    run.s = ev.cf_den > 1e-300 ? ev.cf_num / ev.cf_den : 1.0;
    if (!(run.s > 0.0)) run.s = 1.0;
  }

  const double lr = cfg.effective_lr();
  run_optimize_loop(cfg, run, [&](std::uint64_t k) {
    const SurrogateSpec spec = spec_at(int(k));
    const auto fwd = pipeline_forward(run.phases, model, scheme, spec, prob.planes, k, opt);
    if (cfg.scale_mode == ScaleMode::closed_form) {
      const SupervisionEval pre = evaluate_supervision(prob, fwd, run.s, false);
      if (pre.cf_den > 1e-300) {
        const double s_star = pre.cf_num / pre.cf_den;
        if (s_star > 0.0) run.s = s_star;
      }
    }
    SupervisionEval ev = evaluate_supervision(prob, fwd, run.s, true);
    PhaseStack grads = pipeline_backward(fwd, ev.field_grads, run.phases, model, scheme, spec,
                                         k, opt, nullptr);
    if (cfg.algo == OptimAlgo::adam) {
      adam.apply(run.phases, grads, cfg);
    } else {
      for (std::size_t t = 0; t < run.phases.size(); ++t)
        for (std::size_t i = 0; i < run.phases[t].size(); ++i)
          run.phases[t][i] -= lr * grads[t][i];
    }
    if (cfg.rule == StepRule::projected)
      for (auto& p : run.phases) p = quantize(p, scheme);
    if (cfg.scale_mode == ScaleMode::joint_gradient) {
      run.s -= lr * ev.dloss_ds;
      if (!(run.s > 1e-12)) run.s = 1e-12;
    }
    return ev.loss;
  });

  run.exported.reserve(run.phases.size());
  for (const auto& p : run.phases) run.exported.push_back(quantize_indices(p, scheme));
  return run;
}

}  // namespace holoq
