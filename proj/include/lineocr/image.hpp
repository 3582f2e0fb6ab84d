// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace lineocr {

/// 8-bit grayscale raster, row-major. 0 is ink, 255 is background.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 255)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::span<const std::uint8_t> row(int y) const {
    return {pixels.data() + static_cast<std::size_t>(y) * width, static_cast<std::size_t>(width)};
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Single-channel float raster used as scratch space by resampling code.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  FloatImage() = default;
  FloatImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}
  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

std::uint8_t clamp_to_u8(double v);

FloatImage to_float(const GrayImage& img);
GrayImage to_gray(const FloatImage& img);

/// Bilinear sample with border replication; (x, y) are pixel-centre coordinates.
double sample_bilinear_replicate(const GrayImage& img, double x, double y);
/// Bilinear sample where out-of-range neighbours read as `fill`.
double sample_bilinear_fill(const GrayImage& img, double x, double y, double fill);

/// Bilinear resize with pixel-centre alignment. Identity when sizes match.
GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height);

// Binary PGM (P5, maxval 255). Errors raise BitmapFormatError / IoError.
GrayImage read_pgm(const std::filesystem::path& path);
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

}  // namespace lineocr
