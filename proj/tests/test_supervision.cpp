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
#include <gtest/gtest.h>

#include "holoq/supervision.hpp"
#include "holoq/synthetic.hpp"
#include "oracle_helpers.hpp"

using namespace holoq;

namespace {

GridSpec make_grid(int h, int w) { return GridSpec{h, w, 10.8e-6, 520e-9}; }

CalibratedModel small_model(const GridSpec& g, std::vector<double> z) {
  return CalibratedModel::nominal(g, std::move(z), 4);
}

PhaseStack random_stack(const GridSpec& g, int frames, std::uint64_t seed) {
  PhaseStack st;
  for (int t = 0; t < frames; ++t)
    st.push_back(oracle::random_map(g.height, g.width, seed + std::uint64_t(t), -kPi, kPi));
  return st;
}

SurrogateSpec hard_spec() {
  SurrogateSpec s;
  s.kind = SurrogateKind::unit_jacobian;  // hard quantize in the forward pass
  return s;
}

}  // namespace

TEST(DepthToMasks, ConstantDepthSelectsOnePlane) {
  const std::vector<double> z = {0.079, 0.081, 0.0825};
  const RealMap depth(4, 4, 0.081);
  const MaskSet masks = depth_to_masks(depth, z);
  masks.validate();
  for (std::size_t i = 0; i < depth.size(); ++i) {
    EXPECT_EQ(masks.masks[0][i], 0.0);
    EXPECT_EQ(masks.masks[1][i], 1.0);
    EXPECT_EQ(masks.masks[2][i], 0.0);
  }
}

TEST(DepthToMasks, MidpointTieGoesToSmallerIndex) {
  const std::vector<double> z = {1.0, 2.0};
  const RealMap depth(2, 2, 1.5);
  const MaskSet masks = depth_to_masks(depth, z);
  for (std::size_t i = 0; i < depth.size(); ++i) EXPECT_EQ(masks.masks[0][i], 1.0);
}

TEST(DepthToMasks, MatchesBruteForceNearest) {
  const std::vector<double> z = {0.079, 0.081, 0.0825, 0.084, 0.088, 0.091};
  const RealMap depth = oracle::random_map(16, 16, 21, 0.075, 0.095);
  const MaskSet masks = depth_to_masks(depth, z);
  masks.validate();
  for (std::size_t i = 0; i < depth.size(); ++i) {
    int best = 0;
    for (std::size_t j = 1; j < z.size(); ++j)
      if (std::abs(z[j] - depth[i]) < std::abs(z[std::size_t(best)] - depth[i])) best = int(j);
    EXPECT_EQ(masks.masks[std::size_t(best)][i], 1.0);
  }
}

TEST(MaskSet, PartitionViolationsRejected) {
  MaskSet bad;
  bad.distances = {1.0, 2.0};
  bad.masks = {RealMap(2, 2, 1.0), RealMap(2, 2, 1.0)};
  EXPECT_THROW(bad.validate(), config_error);
  bad.masks = {RealMap(2, 2, 0.5), RealMap(2, 2, 0.5)};
  EXPECT_THROW(bad.validate(), config_error);
}

TEST(Stft, ConstantFieldConcentratesInCenterBin) {
  const GridSpec g = make_grid(16, 16);
  ComplexField f(g, cplx(1.0, 0.0));
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  const StftArray out = stft(f, spec);
  EXPECT_EQ(out.patches_y, 2);
  EXPECT_EQ(out.patches_x, 2);
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          const double mag = std::abs(out.at(p, q, a, b));
          if (a == 4 && b == 4)
            EXPECT_NEAR(mag, 8.0, 1e-12);
          else
            EXPECT_NEAR(mag, 0.0, 1e-12);
        }
}

TEST(Stft, OrthogonalTilingRoundTrip) {
  const GridSpec g = make_grid(24, 16);
  const ComplexField f = oracle::random_field(g, 31);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  const ComplexField back = stft_adjoint(stft(f, spec), g, spec);
  double err = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    err = std::max(err, std::abs(back.values[i] - f.values[i]));
  EXPECT_LT(err, 1e-10);
}

TEST(Stft, LinearRampConcentratesInOneBin) {
  const GridSpec g = make_grid(16, 16);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  // ramp on angular bin center k0 = 2 (offset from bin 4): e^{i 2 pi 2 c / 8}
  ComplexField f(g);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) f(r, c) = std::polar(1.0, kTwoPi * 2.0 * c / 8.0);
  const StftArray out = stft(f, spec);
  for (int p = 0; p < out.patches_y; ++p)
    for (int q = 0; q < out.patches_x; ++q) {
      double total = 0.0;
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) total += std::norm(out.at(p, q, a, b));
      EXPECT_NEAR(std::norm(out.at(p, q, 4, 6)), total, 1e-10 * total);
    }
}

TEST(Stft, EnergyPreservedByOrthogonalTiling) {
  const GridSpec g = make_grid(24, 24);
  const ComplexField f = oracle::random_field(g, 32);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  const StftArray out = stft(f, spec);
  double field_e = 0.0, stft_e = 0.0;
  for (const auto& v : f.values) field_e += std::norm(v);
  for (const auto& v : out.data) stft_e += std::norm(v);
  EXPECT_NEAR(stft_e, field_e, 1e-9 * field_e);
}

TEST(Stft, PadsWhenWindowDoesNotDivide) {
  const GridSpec g = make_grid(20, 12);
  const ComplexField f = oracle::random_field(g, 33);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  const StftArray out = stft(f, spec);
  EXPECT_EQ(out.patches_y, 3);
  EXPECT_EQ(out.patches_x, 2);
  // padded analysis must still reconstruct the unpadded field exactly
  const ComplexField back = stft_adjoint(out, g, spec);
  for (std::size_t i = 0; i < f.size(); ++i)
    EXPECT_LT(std::abs(back.values[i] - f.values[i]), 1e-10);
}

TEST(Stft, WindowLargerThanGridRejected) {
  const GridSpec g = make_grid(4, 4);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  EXPECT_THROW(stft(ComplexField(g), spec), config_error);
}

TEST(Loss2d, PerfectReconstructionIsZero) {
  const GridSpec g = make_grid(8, 8);
  const CalibratedModel m = small_model(g, {0.086});
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 1, 77);
  // target = the reconstruction amplitude itself
  const RealMap target =
      oracle::multiframe_amplitude(phases, m, scheme, 0.086, /*hard=*/true);
  const double loss = loss_2d(phases, m, scheme, hard_spec(), 1.0, target, 0.086);
  EXPECT_NEAR(loss, 0.0, 1e-18);
}

TEST(Loss2d, ScaleHomogeneity) {
  const GridSpec g = make_grid(8, 8);
  const CalibratedModel m = small_model(g, {0.086});
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 2, 78);
  const RealMap target = oracle::random_map(8, 8, 79, 0.0, 1.0);
  const double s = 0.8, c = 3.0;
  RealMap scaled_target = target;
  for (double& v : scaled_target) v *= c;
  const double base = loss_2d(phases, m, scheme, hard_spec(), s, target, 0.086);
  const double scaled = loss_2d(phases, m, scheme, hard_spec(), c * s, scaled_target, 0.086);
  EXPECT_NEAR(scaled, c * c * base, 1e-10 * std::max(1.0, c * c * base));
}

TEST(Loss2d, MatchesStraightLineOracle) {
  const GridSpec g = make_grid(8, 8);
  CalibratedModel m = small_model(g, {0.086});
  m.a_src = oracle::random_map(8, 8, 80, 0.5, 1.5);
  m.phi_src = oracle::random_map(8, 8, 81, -0.5, 0.5);
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 3, 82);
  const RealMap target = oracle::random_map(8, 8, 83, 0.0, 1.0);
  const double s = 1.7;
  const double lib = loss_2d(phases, m, scheme, hard_spec(), s, target, 0.086);
  const RealMap amp = oracle::multiframe_amplitude(phases, m, scheme, 0.086, true);
  const double want = oracle::masked_mse(amp, target, nullptr, s);
  EXPECT_LT(oracle::rel_err(lib, want), 1e-10);
}

TEST(Loss25d, SinglePlaneFullMaskReducesToLoss2d) {
  const GridSpec g = make_grid(8, 8);
  const CalibratedModel m = small_model(g, {0.086});
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 2, 90);
  const RealMap amp_target = oracle::random_map(8, 8, 91, 0.0, 1.0);
  TargetContent rgbd = TargetContent::make_rgbd(amp_target, RealMap(8, 8, 0.086));
  const MaskSet masks = depth_to_masks(rgbd.depth, {0.086});
  const double l25 = loss_25d(phases, m, scheme, hard_spec(), 1.2, rgbd, masks);
  const double l2 = loss_2d(phases, m, scheme, hard_spec(), 1.2, amp_target, 0.086);
  EXPECT_NEAR(l25, l2, 1e-14);
}

TEST(Loss25d, ZeroFieldZeroTargetIsZero) {
  const GridSpec g = make_grid(8, 8);
  CalibratedModel m = small_model(g, {0.08, 0.09});
  m.a_src = RealMap(8, 8, 0.0);  // dark display
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 1, 92);
  TargetContent rgbd = TargetContent::make_rgbd(RealMap(8, 8, 0.0), RealMap(8, 8, 0.085));
  const MaskSet masks = depth_to_masks(rgbd.depth, {0.08, 0.09});
  EXPECT_DOUBLE_EQ(loss_25d(phases, m, scheme, hard_spec(), 1.0, rgbd, masks), 0.0);
}

TEST(Loss25d, MatchesStraightLineOracle) {
  const GridSpec g = make_grid(8, 8);
  const std::vector<double> planes = {0.08, 0.085, 0.09};
  CalibratedModel m = small_model(g, planes);
  m.phi_src = oracle::random_map(8, 8, 93, -0.4, 0.4);
  const QuantScheme scheme = QuantScheme::uniform(3);
  const PhaseStack phases = random_stack(g, 2, 94);
  const RealMap amp_target = oracle::random_map(8, 8, 95, 0.0, 1.0);
  const RealMap depth = oracle::random_map(8, 8, 96, 0.078, 0.092);
  TargetContent rgbd = TargetContent::make_rgbd(amp_target, depth);
  const MaskSet masks = depth_to_masks(depth, planes);
  const double s = 0.9;
  const double lib = loss_25d(phases, m, scheme, hard_spec(), s, rgbd, masks);
  double want = 0.0;
  for (std::size_t j = 0; j < planes.size(); ++j) {
    const RealMap amp = oracle::multiframe_amplitude(phases, m, scheme, planes[j], true);
    RealMap masked_target = amp_target;
    for (std::size_t i = 0; i < masked_target.size(); ++i)
      masked_target[i] *= masks.masks[j][i];
    want += oracle::masked_mse(amp, masked_target, &masks.masks[j], s) / double(planes.size());
  }
  EXPECT_LT(oracle::rel_err(lib, want), 1e-10);
}

TEST(Loss25d, MaskPlaneMismatchRejected) {
  const GridSpec g = make_grid(8, 8);
  const CalibratedModel m = small_model(g, {0.08});
  const QuantScheme scheme = QuantScheme::uniform(2);
  const PhaseStack phases = random_stack(g, 1, 97);
  TargetContent rgbd = TargetContent::make_rgbd(RealMap(8, 8, 0.5), RealMap(8, 8, 0.08));
  MaskSet masks = depth_to_masks(rgbd.depth, {0.08, 0.09});
  masks.masks.pop_back();  // break the pairing
  EXPECT_THROW(loss_25d(phases, m, scheme, hard_spec(), 1.0, rgbd, masks), config_error);
}

TEST(Loss3d, SinglePlaneStackEqualsLoss2d) {
  const GridSpec g = make_grid(8, 8);
  const CalibratedModel m = small_model(g, {0.086});
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 2, 100);
  const RealMap target = oracle::random_map(8, 8, 101, 0.0, 1.0);
  const TargetContent fs = TargetContent::make_focal_stack({target}, {0.086});
  EXPECT_NEAR(loss_3d(phases, m, scheme, hard_spec(), 1.1, fs),
              loss_2d(phases, m, scheme, hard_spec(), 1.1, target, 0.086), 1e-14);
}

TEST(Loss3d, PerfectStackIsZero) {
  const GridSpec g = make_grid(8, 8);
  const std::vector<double> planes = {0.08, 0.09};
  const CalibratedModel m = small_model(g, planes);
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 2, 102);
  std::vector<RealMap> stack;
  for (double z : planes)
    stack.push_back(oracle::multiframe_amplitude(phases, m, scheme, z, true));
  const TargetContent fs = TargetContent::make_focal_stack(std::move(stack), planes);
  EXPECT_NEAR(loss_3d(phases, m, scheme, hard_spec(), 1.0, fs), 0.0, 1e-18);
}

TEST(Loss3d, MatchesStraightLineOracle) {
  const GridSpec g = make_grid(8, 8);
  const std::vector<double> planes = {0.08, 0.085, 0.09};
  const CalibratedModel m = small_model(g, planes);
  const QuantScheme scheme = QuantScheme::uniform(3);
  const PhaseStack phases = random_stack(g, 2, 103);
  std::vector<RealMap> stack;
  for (std::uint64_t j = 0; j < planes.size(); ++j)
    stack.push_back(oracle::random_map(8, 8, 104 + j, 0.0, 1.0));
  const TargetContent fs = TargetContent::make_focal_stack(stack, planes);
  const double s = 1.4;
  const double lib = loss_3d(phases, m, scheme, hard_spec(), s, fs);
  double want = 0.0;
  for (std::size_t j = 0; j < planes.size(); ++j) {
    const RealMap amp = oracle::multiframe_amplitude(phases, m, scheme, planes[j], true);
    want += oracle::masked_mse(amp, stack[j], nullptr, s) / double(planes.size());
  }
  EXPECT_LT(oracle::rel_err(lib, want), 1e-10);
}

TEST(Loss3d, DistanceMismatchRejected) {
  const GridSpec g = make_grid(8, 8);
  const CalibratedModel m = small_model(g, {0.08});
  const QuantScheme scheme = QuantScheme::uniform(2);
  const PhaseStack phases = random_stack(g, 1, 105);
  TargetContent fs =
      TargetContent::make_focal_stack({RealMap(8, 8, 0.1), RealMap(8, 8, 0.1)}, {0.08, 0.09});
  fs.stack.pop_back();  // plane image list no longer matches the distances
  EXPECT_THROW(loss_3d(phases, m, scheme, hard_spec(), 1.0, fs), config_error);
}

TEST(Loss4d, SelfTargetIsZeroAndOracleAgrees) {
  const GridSpec g = make_grid(16, 16);
  const CalibratedModel m = small_model(g, {0.086});
  const QuantScheme scheme = QuantScheme::uniform(4);
  const PhaseStack phases = random_stack(g, 2, 110);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  int py = 0, px = 0;
  const auto amps =
      oracle::stft_amplitudes(phases, m, scheme, 0.086, 8, 8, true, &py, &px);
  // build a light field target from the field's own view amplitudes
  std::vector<RealMap> views(64, RealMap(py, px));
  for (int p = 0; p < py; ++p)
    for (int q = 0; q < px; ++q)
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b)
          views[std::size_t(a) * 8 + b](p, q) = amps[((std::size_t(p) * px + q) * 8 + a) * 8 + b];
  const TargetContent lf = TargetContent::make_light_field(views, 8, 8);
  const double loss = loss_4d(phases, m, scheme, hard_spec(), 1.0, lf, 0.086, spec);
  EXPECT_NEAR(loss, 0.0, 1e-16);

  // random target: library vs longhand evaluation
  std::vector<RealMap> rviews;
  for (std::uint64_t v = 0; v < 64; ++v)
    rviews.push_back(oracle::random_map(py, px, 200 + v, 0.0, 1.0));
  const TargetContent rlf = TargetContent::make_light_field(rviews, 8, 8);
  const double s = 1.3;
  const double lib = loss_4d(phases, m, scheme, hard_spec(), s, rlf, 0.086, spec);
  double want = 0.0;
  for (int p = 0; p < py; ++p)
    for (int q = 0; q < px; ++q)
      for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
          const double r = s * amps[((std::size_t(p) * px + q) * 8 + a) * 8 + b] -
                           rviews[std::size_t(a) * 8 + b](p, q);
          want += r * r;
        }
  want /= double(py) * px * 64.0;
  EXPECT_LT(oracle::rel_err(lib, want), 1e-10);
}

TEST(Loss4d, ViewCountMismatchRejected) {
  const GridSpec g = make_grid(16, 16);
  const CalibratedModel m = small_model(g, {0.086});
  const QuantScheme scheme = QuantScheme::uniform(2);
  const PhaseStack phases = random_stack(g, 1, 115);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  const TargetContent lf =
      TargetContent::make_light_field(std::vector<RealMap>(16, RealMap(2, 2, 0.1)), 4, 4);
  EXPECT_THROW(loss_4d(phases, m, scheme, hard_spec(), 1.0, lf, 0.086, spec), config_error);
}

TEST(StftVarianceReg, ImpulseGridHasZeroVariance) {
  // one impulse per patch -> flat angular magnitude -> zero variance
  const GridSpec g = make_grid(16, 16);
  CalibratedModel m = small_model(g, {0.0});
  // identity propagation (z = 0) and a source that is a delta comb
  m.a_src = RealMap(16, 16, 0.0);
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) m.a_src(p * 8 + 3, q * 8 + 5) = 1.0;
  const QuantScheme scheme = QuantScheme::uniform(4);
  PhaseStack phases = {RealMap(16, 16, 0.0)};
  MaskSet masks;
  masks.distances = {0.0};
  masks.masks = {RealMap(16, 16, 1.0)};
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  const double reg =
      stft_variance_reg(phases, m, scheme, hard_spec(), 1.0, masks, spec);
  EXPECT_NEAR(reg, 0.0, 1e-20);
}

TEST(StftVarianceReg, ConcentratedViewBeatsUniformInVariance) {
  const GridSpec g = make_grid(16, 16);
  CalibratedModel flat = small_model(g, {0.0});
  CalibratedModel comb = flat;
  comb.a_src = RealMap(16, 16, 0.0);
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) comb.a_src(p * 8 + 3, q * 8 + 5) = 8.0;  // unit patch energy
  const QuantScheme scheme = QuantScheme::uniform(4);
  PhaseStack phases = {RealMap(16, 16, 0.0)};
  MaskSet masks;
  masks.distances = {0.0};
  masks.masks = {RealMap(16, 16, 1.0)};
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  // constant field concentrates everything in the centre bin (max variance)
  const double concentrated =
      stft_variance_reg(phases, flat, scheme, hard_spec(), 1.0, masks, spec);
  const double uniform = stft_variance_reg(phases, comb, scheme, hard_spec(), 1.0, masks, spec);
  EXPECT_GT(concentrated, uniform + 1e-6);
}

TEST(StftVarianceReg, MatchesBruteForceVariance) {
  const GridSpec g = make_grid(16, 16);
  CalibratedModel m = small_model(g, {0.086});
  m.a_src = oracle::random_map(16, 16, 120, 0.5, 1.5);
  const QuantScheme scheme = QuantScheme::uniform(3);
  const PhaseStack phases = random_stack(g, 2, 121);
  const RealMap depth = oracle::random_map(16, 16, 122, 0.08, 0.09);
  const std::vector<double> planes = {0.082, 0.088};
  const MaskSet masks = depth_to_masks(depth, planes);
  StftSpec spec;
  spec.window_size = 8;
  spec.hop = 8;
  const double s = 1.2;
  const double lib = stft_variance_reg(phases, m, scheme, hard_spec(), s, masks, spec);
  double want = 0.0;
  for (std::size_t j = 0; j < planes.size(); ++j) {
    int py = 0, px = 0;
    const auto amps =
        oracle::stft_amplitudes(phases, m, scheme, planes[j], 8, 8, true, &py, &px);
    for (int p = 0; p < py; ++p)
      for (int q = 0; q < px; ++q) {
        double wsum = 0.0;
        for (int a = 0; a < 8; ++a)
          for (int b = 0; b < 8; ++b) wsum += masks.masks[j](p * 8 + a, q * 8 + b);
        const double wp = wsum / 64.0;
        double mean = 0.0, mean_sq = 0.0;
        for (int a = 0; a < 8; ++a)
          for (int b = 0; b < 8; ++b) {
            const double x = wp * s * amps[((std::size_t(p) * px + q) * 8 + a) * 8 + b];
            mean += x / 64.0;
            mean_sq += x * x / 64.0;
          }
        want += (mean_sq - mean * mean) / (double(py) * px * planes.size());
      }
  }
  EXPECT_LT(oracle::rel_err(lib, want), 1e-9);
}

TEST(Losses, FramePermutationInvariance) {
  const GridSpec g = make_grid(8, 8);
  const CalibratedModel m = small_model(g, {0.086});
  const QuantScheme scheme = QuantScheme::uniform(4);
  PhaseStack phases = random_stack(g, 4, 130);
  const RealMap target = oracle::random_map(8, 8, 131, 0.0, 1.0);
  const double a = loss_2d(phases, m, scheme, hard_spec(), 1.0, target, 0.086);
  std::swap(phases[0], phases[2]);
  std::swap(phases[1], phases[3]);
  const double b = loss_2d(phases, m, scheme, hard_spec(), 1.0, target, 0.086);
  EXPECT_EQ(a, b);
}

TEST(Losses, NegativeTargetRejected) {
  RealMap bad(4, 4, -0.1);
  EXPECT_THROW(TargetContent::make_amp2d(bad), config_error);
}

TEST(TargetLoaders, FocalStackAndLightFieldManifests) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "holoq_targets_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  // focal stack with two planes
  const RealMap img = builtin_target(0, 16, 16);
  write_png_unit16((dir / "p0.png").string(), img);
  write_png_unit16((dir / "p1.png").string(), builtin_target(1, 16, 16));
  save_json((dir / "manifest.json").string(),
            json{{"planes", json::array({{{"file", "p0.png"}, {"z", 0.08}},
                                         {{"file", "p1.png"}, {"z", 0.09}}})}});
  const TargetContent fs_target = load_focal_stack_dir(dir.string(), 1.0);
  EXPECT_EQ(fs_target.stack.size(), 2u);
  EXPECT_EQ(fs_target.stack_distances[1], 0.09);
  // 16-bit png round trip is exact to 1/65535
  for (std::size_t i = 0; i < img.size(); ++i)
    EXPECT_NEAR(fs_target.stack[0][i], img[i], 1.0 / 65535.0);
  fs::remove_all(dir);
}
