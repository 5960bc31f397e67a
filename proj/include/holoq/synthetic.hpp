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

#include <vector>

#include "holoq/field.hpp"
#include "holoq/rng.hpp"
#include "holoq/supervision.hpp"

// Procedurally generated target content. The built-in 2D set stands in for a
// photographic test set so every experiment is self-contained and
// reproducible from a seed; absolute PSNR values therefore differ from
// published numbers on photographic sets.

namespace holoq {

/// Separable Gaussian blur with reflected borders.
inline RealMap gaussian_blur(const RealMap& in, double sigma) {
  if (sigma <= 0.0) return in;
  const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(std::size_t(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[std::size_t(i + radius)] = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
    sum += kernel[std::size_t(i + radius)];
  }
  for (double& k : kernel) k /= sum;
  auto reflect = [](int i, int n) {
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - i - 1;
    }
    return i;
  };
  RealMap tmp(in.rows(), in.cols()), out(in.rows(), in.cols());
  for (int r = 0; r < in.rows(); ++r)
    for (int c = 0; c < in.cols(); ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[std::size_t(i + radius)] * in(r, reflect(c + i, in.cols()));
      tmp(r, c) = acc;
    }
  for (int r = 0; r < in.rows(); ++r)
    for (int c = 0; c < in.cols(); ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i)
        acc += kernel[std::size_t(i + radius)] * tmp(reflect(r + i, in.rows()), c);
      out(r, c) = acc;
    }
  return out;
}

/// Smooth random field with the requested standard deviation and zero mean.
inline RealMap smooth_random_field(int rows, int cols, double target_std, double blur_sigma,
                                   std::uint64_t seed) {
  rng::Stream stream(seed);
  RealMap noise(rows, cols);
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = stream.gaussian(i);
  RealMap smooth = gaussian_blur(noise, blur_sigma);
  double mean = 0.0;
  for (double v : smooth) mean += v;
  mean /= double(smooth.size());
  double var = 0.0;
  for (double v : smooth) var += (v - mean) * (v - mean);
  var /= double(smooth.size());
  const double scale = var > 0.0 ? target_std / std::sqrt(var) : 0.0;
  for (double& v : smooth) v = (v - mean) * scale;
  return smooth;
}

inline int builtin_target_count() { return 8; }

/// Deterministic procedural test image, values in [0, 1].
inline RealMap builtin_target(int index, int rows, int cols) {
  const int kind = ((index % builtin_target_count()) + builtin_target_count()) %
                   builtin_target_count();
  RealMap img(rows, cols, 0.0);
  const double cy = (rows - 1) / 2.0, cx = (cols - 1) / 2.0;
  auto nx = [&](int c) { return (c - cx) / (cols / 2.0); };
  auto ny = [&](int r) { return (r - cy) / (rows / 2.0); };
  switch (kind) {
    case 0: {  // gaussian blob cluster
      const double bx[4] = {-0.45, 0.35, 0.05, -0.2};
      const double by[4] = {-0.3, -0.4, 0.45, 0.15};
      const double bs[4] = {0.22, 0.3, 0.18, 0.4};
      const double ba[4] = {0.9, 0.7, 1.0, 0.5};
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          double v = 0.05;
          for (int b = 0; b < 4; ++b) {
            const double dx = nx(c) - bx[b], dy = ny(r) - by[b];
            v += ba[b] * std::exp(-(dx * dx + dy * dy) / (2.0 * bs[b] * bs[b]));
          }
          img(r, c) = std::min(1.0, v);
        }
      break;
    }
    case 1: {  // concentric rings
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double rad = std::hypot(nx(c), ny(r));
          img(r, c) = 0.5 + 0.45 * std::cos(14.0 * rad * rad);
        }
      break;
    }
    case 2: {  // checker with diagonal shading
      const int cell = std::max(2, rows / 8);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double check = ((r / cell + c / cell) % 2 == 0) ? 0.85 : 0.2;
          img(r, c) = check * (0.4 + 0.6 * (nx(c) + ny(r) + 2.0) / 4.0);
        }
      break;
    }
    case 3: {  // radial wedge chart
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double theta = std::atan2(ny(r), nx(c));
          const double rad = std::hypot(nx(c), ny(r));
          img(r, c) = rad < 0.9 ? 0.5 + 0.5 * std::cos(9.0 * theta) * (rad > 0.15) : 0.1;
        }
      break;
    }
    case 4: {  // filtered noise texture
      rng::Stream stream(0xbeefcafe + std::uint64_t(kind));
      for (std::size_t i = 0; i < img.size(); ++i) img[i] = stream.uniform(i, 0.0, 1.0);
      img = gaussian_blur(img, std::max(1.0, rows / 32.0));
      double lo = img[0], hi = img[0];
      for (double v : img) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      for (double& v : img) v = (v - lo) / std::max(1e-12, hi - lo);
      break;
    }
    case 5: {  // bright disk on gradient
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double rad = std::hypot(nx(c) - 0.2, ny(r) + 0.1);
          img(r, c) = 0.15 + 0.35 * (nx(c) + 1.0) / 2.0 + (rad < 0.45 ? 0.5 : 0.0);
        }
      break;
    }
    case 6: {  // horizontal frequency sweep
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double f = 1.0 + 10.0 * (c / double(cols));
          img(r, c) = 0.5 + 0.45 * std::sin(f * kPi * c / double(cols)) *
                                std::exp(-2.0 * ny(r) * ny(r));
        }
      break;
    }
    default: {  // random soft rectangles
      rng::Stream stream(0x5eed5 + std::uint64_t(kind));
      img = RealMap(rows, cols, 0.1);
      for (int b = 0; b < 6; ++b) {
        const int r0 = int(stream.uniform(4 * b + 0, 0, rows * 0.8));
        const int c0 = int(stream.uniform(4 * b + 1, 0, cols * 0.8));
        const int h = int(stream.uniform(4 * b + 2, rows * 0.1, rows * 0.4));
        const int w = int(stream.uniform(4 * b + 3, cols * 0.1, cols * 0.4));
        const double val = 0.3 + 0.7 * rng::unit_open(stream.key(100 + b));
        for (int r = r0; r < std::min(rows, r0 + h); ++r)
          for (int c = c0; c < std::min(cols, c0 + w); ++c)
            img(r, c) = std::min(1.0, img(r, c) + val * 0.5);
      }
      img = gaussian_blur(img, 0.8);
      break;
    }
  }
  return img;
}

/// Two-plane synthetic scene: each plane carries its own in-focus content
/// plus a defocused copy of the other plane's content, keeping the energy
/// consistent across the stack.
inline TargetContent builtin_focal_stack(int rows, int cols, double z_near, double z_far) {
  RealMap near_content(rows, cols, 0.0), far_content(rows, cols, 0.0);
  const RealMap blobs = builtin_target(0, rows, cols);
  const RealMap rings = builtin_target(1, rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c < cols / 2)
        near_content(r, c) = blobs(r, c);
      else
        far_content(r, c) = rings(r, c);
    }
  const double blur = std::max(1.0, rows / 24.0);
  RealMap plane_near(rows, cols), plane_far(rows, cols);
  const RealMap far_blurred = gaussian_blur(far_content, blur);
  const RealMap near_blurred = gaussian_blur(near_content, blur);
  for (std::size_t i = 0; i < plane_near.size(); ++i) {
    plane_near[i] = std::min(1.0, near_content[i] + far_blurred[i]);
    plane_far[i] = std::min(1.0, far_content[i] + near_blurred[i]);
  }
  return TargetContent::make_focal_stack({std::move(plane_near), std::move(plane_far)},
                                         {std::min(z_near, z_far), std::max(z_near, z_far)});
}

/// Synthetic light field: a base image seen under per-view circular shifts
/// (parallax) with a soft angular falloff toward extreme views.
inline TargetContent builtin_light_field(int views_y, int views_x, int view_rows,
                                         int view_cols) {
  const RealMap base = builtin_target(5, view_rows, view_cols);
  std::vector<RealMap> views;
  views.reserve(std::size_t(views_y) * views_x);
  const double cy = (views_y - 1) / 2.0, cx = (views_x - 1) / 2.0;
  for (int vy = 0; vy < views_y; ++vy) {
    for (int vx = 0; vx < views_x; ++vx) {
      RealMap v(view_rows, view_cols);
      const int sr = int(std::lround((vy - cy) * 0.7));
      const int sc = int(std::lround((vx - cx) * 0.7));
      const double dy = (vy - cy) / std::max(1.0, cy), dx = (vx - cx) / std::max(1.0, cx);
      const double falloff = std::exp(-0.8 * (dx * dx + dy * dy));
      for (int r = 0; r < view_rows; ++r)
        for (int c = 0; c < view_cols; ++c) {
          const int rr = ((r + sr) % view_rows + view_rows) % view_rows;
          const int cc = ((c + sc) % view_cols + view_cols) % view_cols;
          v(r, c) = falloff * base(rr, cc);
        }
      views.push_back(std::move(v));
    }
  }
  return TargetContent::make_light_field(std::move(views), views_y, views_x);
}

/// RGBD scene over the given plane distances: depth splits the image into a
/// left near region and right far region with a smooth ramp between.
inline TargetContent builtin_rgbd(int rows, int cols, const std::vector<double>& distances) {
  RealMap amp = builtin_target(2, rows, cols);
  RealMap depth(rows, cols);
  const double z_min = distances.front(), z_max = distances.back();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double u = c / double(cols - 1);
      depth(r, c) = z_min + (z_max - z_min) * u;
    }
  return TargetContent::make_rgbd(std::move(amp), std::move(depth));
}

}  // namespace holoq
