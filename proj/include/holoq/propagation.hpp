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

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "holoq/fft.hpp"
#include "holoq/field.hpp"

// Angular-spectrum propagation between parallel planes and the parametric
// calibrated display model: source amplitude/phase, Fourier-plane
// amplitude/phase, and a lookup table mapping level indices to physical phase.

namespace holoq {

namespace defaults {
// Typical RGB laser-module wavelengths and the SLM pitch used throughout.
inline constexpr double kWavelengthR = 638e-9;
inline constexpr double kWavelengthG = 520e-9;
inline constexpr double kWavelengthB = 450e-9;
inline constexpr double kPitch = 10.8e-6;

/// Target-plane distances from the SLM (meters); index 4 (8.6 cm) is the
/// conventional held-out plane.
inline const std::vector<double>& plane_distances() {
  static const std::vector<double> z = {0.079, 0.081, 0.0825, 0.084, 0.086, 0.088, 0.091};
  return z;
}
/// Focus settings of the same planes in diopters, ascending with distance.
inline const std::vector<double>& plane_diopters() {
  static const std::vector<double> d = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  return d;
}
inline constexpr int kHeldOutPlane = 4;
}  // namespace defaults

/// Fourier-domain propagation kernel for one (grid, z, calibration) triple.
struct TransferFunction {
  GridSpec grid;
  double distance = 0.0;
  Array2<cplx> h;       // effective kernel, evanescent bins zeroed
  Array2<cplx> h_base;  // nominal kernel (a_F = 1, phi_F = 0), evanescent bins zeroed
  bool calibrated = false;
};

/// Builds the angular-spectrum kernel
///   H = a_F * exp(i * (2*pi/lambda * z * sqrt(1 - (lambda fx)^2 - (lambda fy)^2) + phi_F))
/// with evanescent bins ((lambda fx)^2 + (lambda fy)^2 >= 1) set to zero.
inline TransferFunction build_transfer(const GridSpec& grid, double z,
                                       const RealMap* a_fourier = nullptr,
                                       const RealMap* phi_fourier = nullptr) {
  grid.validate();
  if (!std::isfinite(z)) throw config_error("build_transfer: z must be finite");
  TransferFunction tf;
  tf.grid = grid;
  tf.distance = z;
  tf.calibrated = a_fourier != nullptr || phi_fourier != nullptr;
  tf.h = Array2<cplx>(grid.height, grid.width);
  tf.h_base = Array2<cplx>(grid.height, grid.width);
  const double k = kTwoPi / grid.wavelength;
  auto [fx, fy] = frequency_grid(grid);
  for (std::size_t i = 0; i < tf.h.size(); ++i) {
    const double lfx = grid.wavelength * fx[i];
    const double lfy = grid.wavelength * fy[i];
    const double arg = 1.0 - lfx * lfx - lfy * lfy;
    if (arg <= 0.0) {
      tf.h[i] = cplx{};
      tf.h_base[i] = cplx{};
      continue;
    }
    const double base_phase = k * z * std::sqrt(arg);
    tf.h_base[i] = cplx(std::cos(base_phase), std::sin(base_phase));
    const double phase = base_phase + (phi_fourier ? (*phi_fourier)[i] : 0.0);
    const double amp = a_fourier ? (*a_fourier)[i] : 1.0;
    tf.h[i] = amp * cplx(std::cos(phase), std::sin(phase));
  }
  return tf;
}

/// P_ASM(u, z) = ifft2_centered(fft2_centered(u) .* H).
inline ComplexField asm_propagate(const ComplexField& u, const TransferFunction& tf) {
  require_same_grid(u.grid, tf.grid, "asm_propagate");
  ComplexField spec = fft2_centered(u);
  for (std::size_t i = 0; i < spec.size(); ++i) spec.values[i] *= tf.h[i];
  return ifft2_centered(spec);
}

/// Parametric calibrated propagation model. Amplitude/phase corrections at the
/// SLM and Fourier planes plus the learned phase lookup table.
struct CalibratedModel {
  GridSpec grid;
  RealMap a_src;        // source amplitude at the SLM plane, >= 0
  RealMap phi_src;      // source phase at the SLM plane (radians)
  RealMap a_fourier;    // Fourier-plane amplitude, >= 0
  RealMap phi_fourier;  // Fourier-plane phase (radians)
  std::vector<double> lut;        // level index -> physical phase, ascending in [0, 2*pi)
  std::vector<double> distances;  // target-plane z values (meters)

  static CalibratedModel nominal(const GridSpec& grid, std::vector<double> distances,
                                 int lut_bits = 4) {
    grid.validate();
    CalibratedModel m;
    m.grid = grid;
    m.a_src = RealMap(grid.height, grid.width, 1.0);
    m.phi_src = RealMap(grid.height, grid.width, 0.0);
    m.a_fourier = RealMap(grid.height, grid.width, 1.0);
    m.phi_fourier = RealMap(grid.height, grid.width, 0.0);
    const int count = 1 << lut_bits;
    m.lut.resize(count);
    for (int j = 0; j < count; ++j) m.lut[j] = kTwoPi * double(j) / double(count);
    m.distances = std::move(distances);
    return m;
  }

  void validate() const {
    grid.validate();
    auto check_map = [&](const RealMap& m, const char* name, bool nonneg) {
      if (m.rows() != grid.height || m.cols() != grid.width)
        throw config_error(std::string("CalibratedModel: ") + name + " shape mismatch");
      for (double v : m) {
        if (!std::isfinite(v)) throw config_error(std::string("CalibratedModel: ") + name + " non-finite");
        if (nonneg && v < 0.0) throw config_error(std::string("CalibratedModel: ") + name + " negative");
      }
    };
    check_map(a_src, "a_src", true);
    check_map(phi_src, "phi_src", false);
    check_map(a_fourier, "a_fourier", true);
    check_map(phi_fourier, "phi_fourier", false);
    if (lut.size() < 2) throw config_error("CalibratedModel: lut needs >= 2 entries");
    for (std::size_t i = 0; i < lut.size(); ++i) {
      if (lut[i] < 0.0 || lut[i] >= kTwoPi)
        throw config_error("CalibratedModel: lut values must lie in [0, 2*pi)");
      if (i > 0 && !(lut[i] > lut[i - 1]))
        throw config_error("CalibratedModel: lut must be strictly increasing");
    }
    if (distances.empty()) throw config_error("CalibratedModel: no target distances");
  }
};

/// Elementwise lookup mapping discrete level indices to physical phase.
inline RealMap apply_lut(const IndexMap& indices, std::span<const double> lut) {
  RealMap out(indices.rows(), indices.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const int idx = indices[i];
    if (idx < 0 || std::size_t(idx) >= lut.size())
      throw config_error("apply_lut: index out of range");
    out[i] = lut[std::size_t(idx)];
  }
  return out;
}

/// Modulated field at the SLM: a_src .* exp(i (phi_src + phase)).
inline ComplexField slm_field(const RealMap& phase, const CalibratedModel& model) {
  if (phase.rows() != model.grid.height || phase.cols() != model.grid.width)
    throw dimension_error("slm_field: phase/grid shape mismatch");
  ComplexField u(model.grid);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double p = model.phi_src[i] + phase[i];
    u.values[i] = model.a_src[i] * cplx(std::cos(p), std::sin(p));
  }
  return u;
}

/// Process-wide cache of transfer functions keyed by the exact parameter bytes
/// (grid, z, Fourier-plane calibration). Safe for concurrent readers; if the
/// CGH_CACHE_DIR environment variable is set, kernels also persist to disk.
class TransferCache {
 public:
  TransferCache() {
    if (const char* dir = std::getenv("CGH_CACHE_DIR")) dir_ = dir;
  }

  static TransferCache& global() {
    static TransferCache cache;
    return cache;
  }

  std::shared_ptr<const TransferFunction> get(const GridSpec& grid, double z,
                                              const RealMap* a_fourier = nullptr,
                                              const RealMap* phi_fourier = nullptr) {
    const std::string key = make_key(grid, z, a_fourier, phi_fourier);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = map_.find(key);
      if (it != map_.end()) return it->second;
    }
    std::shared_ptr<const TransferFunction> tf;
    if (!dir_.empty()) tf = load_disk(key, grid, z);
    if (!tf) {
      tf = std::make_shared<const TransferFunction>(build_transfer(grid, z, a_fourier, phi_fourier));
      if (!dir_.empty()) store_disk(key, *tf);
    }
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = map_.emplace(key, tf);
    return it->second;
  }

  std::shared_ptr<const TransferFunction> get(const CalibratedModel& model, double z) {
    return get(model.grid, z, &model.a_fourier, &model.phi_fourier);
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    map_.clear();
  }

 private:
  static void append_raw(std::string& s, const void* p, std::size_t n) {
    s.append(reinterpret_cast<const char*>(p), n);
  }

  static std::string make_key(const GridSpec& g, double z, const RealMap* af, const RealMap* pf) {
    std::string key;
    key.reserve(64 + (af ? af->size() * 8 : 0) + (pf ? pf->size() * 8 : 0));
    append_raw(key, &g.height, sizeof g.height);
    append_raw(key, &g.width, sizeof g.width);
    append_raw(key, &g.pitch, sizeof g.pitch);
    append_raw(key, &g.wavelength, sizeof g.wavelength);
    append_raw(key, &z, sizeof z);
    const char tags[2] = {char(af != nullptr), char(pf != nullptr)};
    append_raw(key, tags, 2);
    if (af) append_raw(key, af->data(), af->size() * sizeof(double));
    if (pf) append_raw(key, pf->data(), pf->size() * sizeof(double));
    return key;
  }

  static std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return h;
  }

  std::filesystem::path disk_path(const std::string& key) const {
    char name[32];
    std::snprintf(name, sizeof name, "%016llx.tf", (unsigned long long)fnv1a(key));
    return std::filesystem::path(dir_) / name;
  }

  std::shared_ptr<const TransferFunction> load_disk(const std::string& key, const GridSpec& grid,
                                                    double z) const {
    std::FILE* f = std::fopen(disk_path(key).string().c_str(), "rb");
    if (!f) return nullptr;
    auto fail = [&]() {
      std::fclose(f);
      return nullptr;
    };
    std::uint64_t klen = 0;
    if (std::fread(&klen, sizeof klen, 1, f) != 1 || klen != key.size()) return fail();
    std::string stored(klen, '\0');
    if (std::fread(stored.data(), 1, klen, f) != klen || stored != key) return fail();
    auto tf = std::make_shared<TransferFunction>();
    tf->grid = grid;
    tf->distance = z;
    tf->h = Array2<cplx>(grid.height, grid.width);
    tf->h_base = Array2<cplx>(grid.height, grid.width);
    const std::size_t n = tf->h.size();
    if (std::fread(tf->h.data(), sizeof(cplx), n, f) != n) return fail();
    if (std::fread(tf->h_base.data(), sizeof(cplx), n, f) != n) return fail();
    unsigned char cal = 0;
    if (std::fread(&cal, 1, 1, f) != 1) return fail();
    tf->calibrated = cal != 0;
    std::fclose(f);
    return tf;
  }

  void store_disk(const std::string& key, const TransferFunction& tf) const {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto path = disk_path(key);
    const auto tmp = path.string() + ".tmp";
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) return;
    const std::uint64_t klen = key.size();
    bool ok = std::fwrite(&klen, sizeof klen, 1, f) == 1 &&
              std::fwrite(key.data(), 1, key.size(), f) == key.size() &&
              std::fwrite(tf.h.data(), sizeof(cplx), tf.h.size(), f) == tf.h.size() &&
              std::fwrite(tf.h_base.data(), sizeof(cplx), tf.h_base.size(), f) == tf.h_base.size();
    const unsigned char cal = tf.calibrated ? 1 : 0;
    ok = ok && std::fwrite(&cal, 1, 1, f) == 1;
    std::fclose(f);
    if (ok)
      std::filesystem::rename(tmp, path, ec);
    else
      std::filesystem::remove(tmp, ec);
  }

  std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<const TransferFunction>> map_;
  std::string dir_;
};

/// Full calibrated forward model: propagate a_src e^{i(phi_src + phase)} to
/// distance z with the calibrated kernel.
inline ComplexField model_forward(const RealMap& phase, const CalibratedModel& model, double z,
                                  TransferCache* cache = nullptr) {
  if (!std::isfinite(z)) throw config_error("model_forward: z must be finite");
  const ComplexField u = slm_field(phase, model);
  if (cache) return asm_propagate(u, *cache->get(model, z));
  return asm_propagate(u, build_transfer(model.grid, z, &model.a_fourier, &model.phi_fourier));
}

/// model_forward for a level-index pattern routed through the model lut.
inline ComplexField model_forward_indices(const IndexMap& indices, const CalibratedModel& model,
                                          double z, TransferCache* cache = nullptr) {
  return model_forward(apply_lut(indices, model.lut), model, z, cache);
}

}  // namespace holoq
