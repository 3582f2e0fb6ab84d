// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lineocr/image.hpp"
#include "lineocr/rng.hpp"

namespace lineocr {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
  friend bool operator==(const Range&, const Range&) = default;
};

enum class MorphOp { Dilate, Erode };

struct AugmentConfig {
  double perspective_prob = 0.0;
  double perspective_jitter_frac = 0.02;
  double morph_prob = 0.0;
  std::vector<MorphOp> morph_ops{MorphOp::Dilate, MorphOp::Erode};
  std::vector<int> morph_kernels{2};
  double gaussian_prob = 0.0;
  Range gaussian_sigma{0.5, 1.5};
  double downscale_prob = 0.0;
  int downscale_min_height = 16;
  double noise_prob = 0.0;
  Range noise_sigma{0.0, 12.0};
  double elastic_prob = 0.0;
  Range elastic_alpha{6.0, 12.0};
  Range elastic_sigma{3.0, 5.0};
  double composite_prob = 0.0;
  Range ink_shade{0.0, 96.0};
  std::string texture_dir;
  double invert_prob = 0.0;

  /// Throws InvalidConfig.
  void validate() const;
  std::string to_json() const;
  static AugmentConfig from_json(std::string_view text);

  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

/// type1: nothing; type2: perspective, morphology, blur, downscaling and
/// noise; type3: type2 plus texture compositing and random inversion.
AugmentConfig scenario_preset(std::string_view name);

class TextureBank {
 public:
  TextureBank() = default;
  explicit TextureBank(std::vector<GrayImage> textures, std::vector<std::string> sources = {});
  /// Every *.pgm in `dir`, in file-name order.
  static TextureBank load(const std::filesystem::path& dir);

  bool empty() const { return textures_.empty(); }
  std::size_t size() const { return textures_.size(); }
  const std::vector<std::string>& sources() const { return sources_; }
  /// Uniform random crop of a uniformly chosen texture, tiled when too small.
  GrayImage crop(int width, int height, Rng& rng) const;

 private:
  std::vector<GrayImage> textures_;
  std::vector<std::string> sources_;
};

/// True when no texture source path occurs in both banks.
bool disjoint(const TextureBank& a, const TextureBank& b);

/// alpha * ink + (1 - alpha) * background, rounded and clamped.
std::uint8_t composite_pixel(double alpha, double ink, double background);

/// Treats `fg` as an alpha mask (alpha = 1 - v / 255) of colour `ink` over `texture`.
GrayImage alpha_composite(const GrayImage& fg, const GrayImage& texture, double ink);
GrayImage alpha_composite(const GrayImage& fg, const GrayImage& texture, const Range& ink_shade,
                          Rng& rng);

GrayImage invert(const GrayImage& img);
GrayImage maybe_invert(const GrayImage& img, double invert_prob, Rng& rng);

GrayImage perspective_warp(const GrayImage& img, double jitter_frac, Rng& rng);
/// Dilate thickens dark ink (window minimum); erode thins it (window maximum).
GrayImage morphology(const GrayImage& img, MorphOp op, int kernel);
GrayImage gaussian_blur(const GrayImage& img, double sigma);
GrayImage downscale_upscale(const GrayImage& img, int intermediate_height);
GrayImage add_noise(const GrayImage& img, double sigma, Rng& rng);

struct DisplacementField {
  FloatImage dx;
  FloatImage dy;
};

/// Uniform [-1, 1] noise per pixel, Gaussian-smoothed with `sigma` and scaled by `alpha`.
DisplacementField elastic_field(int width, int height, double alpha, double sigma, Rng& rng);
GrayImage elastic_distort(const GrayImage& img, double alpha, double sigma, Rng& rng);

/// Geometric and photometric distortions in fixed order.
GrayImage distort(const GrayImage& img, const AugmentConfig& cfg, Rng& rng);

/// distort, then texture compositing, then inversion.
GrayImage augment_line(const GrayImage& img, const AugmentConfig& cfg, const TextureBank* bank,
                       Rng& rng);

}  // namespace lineocr
