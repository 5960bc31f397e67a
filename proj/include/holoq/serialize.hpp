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

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "holoq/field.hpp"
#include "holoq/propagation.hpp"
#include "holoq/quantize.hpp"

// JSON (de)serialization of models and schemes. Float arrays travel as
// base64-encoded little-endian 64-bit floats with explicit shape fields.

namespace holoq {

using json = nlohmann::json;

namespace detail {

inline const char* b64_alphabet() {
  return "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
  const char* tab = b64_alphabet();
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(tab[(v >> 18) & 63]);
    out.push_back(tab[(v >> 12) & 63]);
    out.push_back(tab[(v >> 6) & 63]);
    out.push_back(tab[v & 63]);
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out.push_back(tab[(v >> 18) & 63]);
    out.push_back(tab[(v >> 12) & 63]);
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out.push_back(tab[(v >> 18) & 63]);
    out.push_back(tab[(v >> 12) & 63]);
    out.push_back(tab[(v >> 6) & 63]);
    out += "=";
  }
  return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> rev;
  rev.fill(-1);
  const char* tab = b64_alphabet();
  for (int i = 0; i < 64; ++i) rev[std::uint8_t(tab[i])] = i;
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = rev[std::uint8_t(c)];
    if (v < 0) throw config_error("base64: invalid character");
    acc = (acc << 6) | std::uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(std::uint8_t((acc >> bits) & 0xff));
    }
  }
  return out;
}

inline void put_le64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t((v >> (8 * i)) & 0xff));
}

inline std::string encode_f64(std::span<const double> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 8);
  for (double d : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    put_le64(bytes, bits);
  }
  return base64_encode(bytes);
}

inline std::vector<double> decode_f64(const std::string& text, std::size_t expect) {
  const auto bytes = base64_decode(text);
  if (bytes.size() != expect * 8) throw config_error("float array: size mismatch");
  std::vector<double> out(expect);
  for (std::size_t i = 0; i < expect; ++i) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | bytes[i * 8 + std::size_t(b)];
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

}  // namespace detail

inline json real_map_to_json(const RealMap& m) {
  return json{{"shape", {m.rows(), m.cols()}},
              {"data", detail::encode_f64(std::span<const double>(m.data(), m.size()))}};
}

inline RealMap real_map_from_json(const json& j) {
  const int rows = j.at("shape").at(0).get<int>();
  const int cols = j.at("shape").at(1).get<int>();
  RealMap m(rows, cols);
  const auto v = detail::decode_f64(j.at("data").get<std::string>(), m.size());
  std::copy(v.begin(), v.end(), m.begin());
  return m;
}

inline json grid_to_json(const GridSpec& g) {
  return json{{"height", g.height},
              {"width", g.width},
              {"pitch", g.pitch},
              {"wavelength", g.wavelength}};
}

inline GridSpec grid_from_json(const json& j) {
  GridSpec g;
  g.height = j.at("height").get<int>();
  g.width = j.at("width").get<int>();
  g.pitch = j.at("pitch").get<double>();
  g.wavelength = j.at("wavelength").get<double>();
  g.validate();
  return g;
}

inline constexpr int kModelFormatVersion = 1;

inline json model_to_json(const CalibratedModel& m) {
  return json{{"format_version", kModelFormatVersion},
              {"grid", grid_to_json(m.grid)},
              {"a_src", real_map_to_json(m.a_src)},
              {"phi_src", real_map_to_json(m.phi_src)},
              {"a_fourier", real_map_to_json(m.a_fourier)},
              {"phi_fourier", real_map_to_json(m.phi_fourier)},
              {"lut", {{"shape", {int(m.lut.size())}}, {"data", detail::encode_f64(m.lut)}}},
              {"distances", m.distances}};
}

inline CalibratedModel model_from_json(const json& j) {
  if (j.at("format_version").get<int>() != kModelFormatVersion)
    throw config_error("CalibratedModel: unsupported format_version");
  CalibratedModel m;
  m.grid = grid_from_json(j.at("grid"));
  m.a_src = real_map_from_json(j.at("a_src"));
  m.phi_src = real_map_from_json(j.at("phi_src"));
  m.a_fourier = real_map_from_json(j.at("a_fourier"));
  m.phi_fourier = real_map_from_json(j.at("phi_fourier"));
  const auto& lj = j.at("lut");
  m.lut = detail::decode_f64(lj.at("data").get<std::string>(),
                             std::size_t(lj.at("shape").at(0).get<int>()));
  m.distances = j.at("distances").get<std::vector<double>>();
  m.validate();
  return m;
}

inline json scheme_to_json(const QuantScheme& s) {
  json j;
  if (s.bit_depth > 0)
    j["bits"] = s.bit_depth;
  else
    j["levels"] = s.levels;
  j["wrap"] = s.wrap;
  return j;
}

inline QuantScheme scheme_from_json(const json& j) {
  QuantScheme s;
  if (j.contains("bits"))
    s = QuantScheme::uniform(j.at("bits").get<int>());
  else
    s = QuantScheme::from_levels(j.at("levels").get<std::vector<double>>());
  if (j.contains("wrap")) s.wrap = j.at("wrap").get<bool>();
  return s;
}

/// Canonical JSON text: parse-stable 2-space dump with trailing newline.
inline std::string canonical_json(const json& j) { return j.dump(2) + "\n"; }

inline void save_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("cannot open for writing: " + path);
  f << canonical_json(j);
}

inline json load_json(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw config_error("cannot open: " + path);
  return json::parse(f);
}

/// SHA-1 of a byte string, hex-encoded. Used as the content hash in run metadata.
inline std::string sha1_hex(std::string_view data) {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
  std::vector<std::uint8_t> msg(data.begin(), data.end());
  const std::uint64_t bit_len = std::uint64_t(msg.size()) * 8;
  msg.push_back(0x80);
  while (msg.size() % 64 != 56) msg.push_back(0);
  for (int i = 7; i >= 0; --i) msg.push_back(std::uint8_t((bit_len >> (8 * i)) & 0xff));
  auto rol = [](std::uint32_t v, int n) { return (v << n) | (v >> (32 - n)); };
  for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i)
      w[i] = (std::uint32_t(msg[chunk + 4 * i]) << 24) | (std::uint32_t(msg[chunk + 4 * i + 1]) << 16) |
             (std::uint32_t(msg[chunk + 4 * i + 2]) << 8) | std::uint32_t(msg[chunk + 4 * i + 3]);
    for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rol(b, 30);
      b = a;
      a = tmp;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }
  char out[41];
  std::snprintf(out, sizeof out, "%08x%08x%08x%08x%08x", h[0], h[1], h[2], h[3], h[4]);
  return std::string(out, 40);
}

}  // namespace holoq
