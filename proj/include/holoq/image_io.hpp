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
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <png.h>

#include "holoq/field.hpp"

// Grayscale PNG I/O (8/16-bit) and raw little-endian float arrays. PNG writes
// carry no timestamps, so identical pixels produce identical files.

namespace holoq {

namespace detail {

struct FileCloser {
  std::FILE* f = nullptr;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

}  // namespace detail

/// Grayscale image normalized to [0, 1] (value / max for the file's bit depth).
struct GrayImage {
  RealMap pixels;
  int bit_depth = 8;
};

inline GrayImage read_png_gray(const std::string& path) {
  detail::FileCloser fc{std::fopen(path.c_str(), "rb")};
  if (!fc.f) throw config_error("cannot open PNG: " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw config_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw config_error("failed to read PNG: " + path);
  }
  png_init_io(png, fc.f);
  png_read_info(png, info);
  const int width = int(png_get_image_width(png, info));
  const int height = int(png_get_image_height(png, info));
  int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA ||
      color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);  // stored big-endian in the file
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);

  GrayImage img;
  img.bit_depth = depth;
  img.pixels = RealMap(height, width);
  const double maxval = depth == 16 ? 65535.0 : 255.0;
  std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
  for (int r = 0; r < height; ++r) {
    png_read_row(png, row.data(), nullptr);
    if (depth == 16) {
      const std::uint16_t* p = reinterpret_cast<const std::uint16_t*>(row.data());
      for (int c = 0; c < width; ++c) img.pixels(r, c) = double(p[c]) / maxval;
    } else {
      for (int c = 0; c < width; ++c) img.pixels(r, c) = double(row[c]) / maxval;
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

namespace detail {

inline void write_png_impl(const std::string& path, int width, int height, int depth,
                           int color_type, const std::vector<std::uint8_t>& bytes,
                           std::size_t row_bytes) {
  FileCloser fc{std::fopen(path.c_str(), "wb")};
  if (!fc.f) throw config_error("cannot open PNG for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw config_error("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw config_error("failed to write PNG: " + path);
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, width, height, depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  for (int r = 0; r < height; ++r)
    png_write_row(png, const_cast<png_bytep>(bytes.data() + std::size_t(r) * row_bytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace detail

/// Writes a 16-bit grayscale PNG from raw sample values.
inline void write_png_gray16(const std::string& path, const Array2<std::uint16_t>& img) {
  std::vector<std::uint8_t> bytes(img.size() * 2);
  std::memcpy(bytes.data(), img.data(), bytes.size());
  detail::write_png_impl(path, img.cols(), img.rows(), 16, PNG_COLOR_TYPE_GRAY, bytes,
                         std::size_t(img.cols()) * 2);
}

/// Writes [0,1] values as a 16-bit grayscale PNG (clipped and rounded).
inline void write_png_unit16(const std::string& path, const RealMap& img) {
  Array2<std::uint16_t> q(img.rows(), img.cols());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::clamp(img[i], 0.0, 1.0);
    q[i] = std::uint16_t(std::lround(v * 65535.0));
  }
  write_png_gray16(path, q);
}

/// Writes an 8-bit RGB PNG from interleaved rgb bytes (3 per pixel).
inline void write_png_rgb8(const std::string& path, int height, int width,
                           const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != std::size_t(height) * width * 3)
    throw dimension_error("write_png_rgb8: buffer size mismatch");
  detail::write_png_impl(path, width, height, 8, PNG_COLOR_TYPE_RGB, rgb,
                         std::size_t(width) * 3);
}

/// Raw little-endian float32 array I/O (dataset entry format).
inline void write_raw_f32(const std::string& path, const RealMap& m) {
  detail::FileCloser fc{std::fopen(path.c_str(), "wb")};
  if (!fc.f) throw config_error("cannot open for writing: " + path);
  std::vector<float> buf(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) buf[i] = float(m[i]);
  if (std::fwrite(buf.data(), sizeof(float), buf.size(), fc.f) != buf.size())
    throw config_error("short write: " + path);
}

inline RealMap read_raw_f32(const std::string& path, int rows, int cols) {
  detail::FileCloser fc{std::fopen(path.c_str(), "rb")};
  if (!fc.f) throw config_error("cannot open: " + path);
  std::vector<float> buf(std::size_t(rows) * cols);
  if (std::fread(buf.data(), sizeof(float), buf.size(), fc.f) != buf.size())
    throw config_error("short read: " + path);
  RealMap m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = double(buf[i]);
  return m;
}

}  // namespace holoq
