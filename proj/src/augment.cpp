// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/augment.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "lineocr/error.hpp"

namespace lineocr {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

// ---- config ----------------------------------------------------------------

namespace {

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " must lie in [0, 1]");
  }
}

void check_range(const Range& r, const char* name, double min_lo) {
  if (!(r.lo <= r.hi) || r.lo < min_lo) {
    throw Error(ErrorCode::InvalidConfig, std::string(name) + " is not a valid range");
  }
}

std::string morph_name(MorphOp op) { return op == MorphOp::Dilate ? "dilate" : "erode"; }

}  // namespace

void AugmentConfig::validate() const {
  check_prob(perspective_prob, "perspective_prob");
  check_prob(morph_prob, "morph_prob");
  check_prob(gaussian_prob, "gaussian_prob");
  check_prob(downscale_prob, "downscale_prob");
  check_prob(noise_prob, "noise_prob");
  check_prob(elastic_prob, "elastic_prob");
  check_prob(composite_prob, "composite_prob");
  check_prob(invert_prob, "invert_prob");
  if (!(perspective_jitter_frac >= 0.0 && perspective_jitter_frac <= 0.25)) {
    throw Error(ErrorCode::InvalidConfig, "perspective_jitter_frac must lie in [0, 0.25]");
  }
  if (morph_ops.empty() || morph_kernels.empty()) {
    throw Error(ErrorCode::InvalidConfig, "morphology needs at least one operation and kernel");
  }
  for (int k : morph_kernels) {
    if (k != 2 && k != 3) throw Error(ErrorCode::InvalidConfig, "morphology kernels are 2 or 3");
  }
  check_range(gaussian_sigma, "gaussian_sigma", 1e-6);
  if (downscale_min_height < 8) throw Error(ErrorCode::InvalidConfig, "downscale_min_height must be >= 8");
  check_range(noise_sigma, "noise_sigma", 0.0);
  check_range(elastic_alpha, "elastic_alpha", 0.0);
  check_range(elastic_sigma, "elastic_sigma", 1e-6);
  check_range(ink_shade, "ink_shade", 0.0);
  if (ink_shade.hi > 255.0) throw Error(ErrorCode::InvalidConfig, "ink_shade must stay within [0, 255]");
}

std::string AugmentConfig::to_json() const {
  ordered_json j;
  auto range = [](const Range& r) { return ordered_json::array({r.lo, r.hi}); };
  j["perspective_prob"] = perspective_prob;
  j["perspective_jitter_frac"] = perspective_jitter_frac;
  j["morph_prob"] = morph_prob;
  j["morph_ops"] = ordered_json::array();
  for (MorphOp op : morph_ops) j["morph_ops"].push_back(morph_name(op));
  j["morph_kernels"] = morph_kernels;
  j["gaussian_prob"] = gaussian_prob;
  j["gaussian_sigma"] = range(gaussian_sigma);
  j["downscale_prob"] = downscale_prob;
  j["downscale_min_height"] = downscale_min_height;
  j["noise_prob"] = noise_prob;
  j["noise_sigma"] = range(noise_sigma);
  j["elastic_prob"] = elastic_prob;
  j["elastic_alpha"] = range(elastic_alpha);
  j["elastic_sigma"] = range(elastic_sigma);
  j["composite_prob"] = composite_prob;
  j["ink_shade"] = range(ink_shade);
  j["texture_dir"] = texture_dir;
  j["invert_prob"] = invert_prob;
  return j.dump();
}

AugmentConfig AugmentConfig::from_json(std::string_view text) {
  AugmentConfig c;
  try {
    const auto j = ordered_json::parse(text);
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "augment config must be an object");
    auto range = [](const ordered_json& v) {
      return Range{v.at(0).get<double>(), v.at(1).get<double>()};
    };
    for (const auto& [key, v] : j.items()) {
      if (key == "perspective_prob") c.perspective_prob = v.get<double>();
      else if (key == "perspective_jitter_frac") c.perspective_jitter_frac = v.get<double>();
      else if (key == "morph_prob") c.morph_prob = v.get<double>();
      else if (key == "morph_ops") {
        c.morph_ops.clear();
        for (const auto& s : v) {
          const auto name = s.get<std::string>();
          if (name == "dilate") c.morph_ops.push_back(MorphOp::Dilate);
          else if (name == "erode") c.morph_ops.push_back(MorphOp::Erode);
          else throw Error(ErrorCode::InvalidConfig, "unknown morphology '" + name + "'");
        }
      } else if (key == "morph_kernels") c.morph_kernels = v.get<std::vector<int>>();
      else if (key == "gaussian_prob") c.gaussian_prob = v.get<double>();
      else if (key == "gaussian_sigma") c.gaussian_sigma = range(v);
      else if (key == "downscale_prob") c.downscale_prob = v.get<double>();
      else if (key == "downscale_min_height") c.downscale_min_height = v.get<int>();
      else if (key == "noise_prob") c.noise_prob = v.get<double>();
      else if (key == "noise_sigma") c.noise_sigma = range(v);
      else if (key == "elastic_prob") c.elastic_prob = v.get<double>();
      else if (key == "elastic_alpha") c.elastic_alpha = range(v);
      else if (key == "elastic_sigma") c.elastic_sigma = range(v);
      else if (key == "composite_prob") c.composite_prob = v.get<double>();
      else if (key == "ink_shade") c.ink_shade = range(v);
      else if (key == "texture_dir") c.texture_dir = v.get<std::string>();
      else if (key == "invert_prob") c.invert_prob = v.get<double>();
      else throw Error(ErrorCode::InvalidConfig, "unknown augment key '" + key + "'");
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("augment config: ") + e.what());
  }
  c.validate();
  return c;
}

AugmentConfig scenario_preset(std::string_view name) {
  AugmentConfig c;
  if (name == "type1") return c;
  if (name != "type2" && name != "type3") {
    throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + std::string(name) + "'");
  }
  c.perspective_prob = 0.5;
  c.morph_prob = 0.25;
  c.gaussian_prob = 0.5;
  c.downscale_prob = 0.5;
  c.noise_prob = 0.5;
  if (name == "type3") {
    c.composite_prob = 1.0;
    c.invert_prob = 0.5;
  }
  return c;
}

// ---- textures --------------------------------------------------------------

TextureBank::TextureBank(std::vector<GrayImage> textures, std::vector<std::string> sources)
    : textures_(std::move(textures)), sources_(std::move(sources)) {
  for (std::size_t i = 0; i < textures_.size(); ++i) {
    if (textures_[i].height < 32 || textures_[i].width < 1) {
      throw Error(ErrorCode::InvalidConfig, "textures must be at least 32 px tall", i);
    }
  }
}

TextureBank TextureBank::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, "texture directory " + dir.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GrayImage> images;
  std::vector<std::string> sources;
  for (const auto& f : files) {
    images.push_back(read_pgm(f));
    sources.push_back(fs::weakly_canonical(f).string());
  }
  return TextureBank(std::move(images), std::move(sources));
}

GrayImage TextureBank::crop(int width, int height, Rng& rng) const {
  if (textures_.empty()) throw Error(ErrorCode::InvalidConfig, "texture bank is empty");
  const GrayImage& t =
      textures_[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(textures_.size()) - 1))];
  const int x0 = static_cast<int>(rng.uniform_int(0, t.width > width ? t.width - width : t.width - 1));
  const int y0 = static_cast<int>(rng.uniform_int(0, t.height > height ? t.height - height : t.height - 1));
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(x, y) = t.at((x0 + x) % t.width, (y0 + y) % t.height);
  }
  return out;
}

bool disjoint(const TextureBank& a, const TextureBank& b) {
  const std::set<std::string> sa(a.sources().begin(), a.sources().end());
  for (const auto& s : b.sources()) {
    if (sa.contains(s)) return false;
  }
  return true;
}

// ---- compositing and inversion ---------------------------------------------

std::uint8_t composite_pixel(double alpha, double ink, double background) {
  return clamp_to_u8(alpha * ink + (1.0 - alpha) * background);
}

GrayImage alpha_composite(const GrayImage& fg, const GrayImage& texture, double ink) {
  if (fg.width != texture.width || fg.height != texture.height) {
    throw Error(ErrorCode::DimensionMismatch, "texture crop must match the line image size");
  }
  GrayImage out(fg.width, fg.height);
  for (std::size_t i = 0; i < fg.pixels.size(); ++i) {
    const double alpha = 1.0 - fg.pixels[i] / 255.0;
    out.pixels[i] = composite_pixel(alpha, ink, texture.pixels[i]);
  }
  return out;
}

GrayImage alpha_composite(const GrayImage& fg, const GrayImage& texture, const Range& ink_shade,
                          Rng& rng) {
  return alpha_composite(fg, texture, ink_shade.draw(rng));
}

GrayImage invert(const GrayImage& img) {
  GrayImage out = img;
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
  return out;
}

GrayImage maybe_invert(const GrayImage& img, double invert_prob, Rng& rng) {
  check_prob(invert_prob, "invert_prob");
  return rng.bernoulli(invert_prob) ? invert(img) : img;
}

// ---- distortions -----------------------------------------------------------

GrayImage perspective_warp(const GrayImage& img, double jitter_frac, Rng& rng) {
  const double w = img.width - 1, h = img.height - 1;
  const double src[4][2] = {{0, 0}, {w, 0}, {w, h}, {0, h}};
  double dst[4][2];
  for (int k = 0; k < 4; ++k) {
    dst[k][0] = src[k][0] + rng.uniform(-1.0, 1.0) * jitter_frac * img.width;
    dst[k][1] = src[k][1] + rng.uniform(-1.0, 1.0) * jitter_frac * img.height;
  }
  // Homography taking output (dst) coordinates back to source coordinates.
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int k = 0; k < 4; ++k) {
    const double x = dst[k][0], y = dst[k][1], u = src[k][0], v = src[k][1];
    a.row(2 * k) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * k + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * k) = u;
    b(2 * k + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> hvec = a.fullPivLu().solve(b);
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double d = hvec(6) * x + hvec(7) * y + 1.0;
      const double sx = (hvec(0) * x + hvec(1) * y + hvec(2)) / d;
      const double sy = (hvec(3) * x + hvec(4) * y + hvec(5)) / d;
      out.at(x, y) = clamp_to_u8(sample_bilinear_fill(img, sx, sy, 255.0));
    }
  }
  return out;
}

GrayImage morphology(const GrayImage& img, MorphOp op, int kernel) {
  const int lo = -(kernel - 1) / 2, hi = kernel / 2;
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      int v = op == MorphOp::Dilate ? 255 : 0;
      for (int dy = lo; dy <= hi; ++dy) {
        const int yy = std::clamp(y + dy, 0, img.height - 1);
        for (int dx = lo; dx <= hi; ++dx) {
          const int p = img.at(std::clamp(x + dx, 0, img.width - 1), yy);
          v = op == MorphOp::Dilate ? std::min(v, p) : std::max(v, p);
        }
      }
      out.at(x, y) = static_cast<std::uint8_t>(v);
    }
  }
  return out;
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += (k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma)));
  for (auto& v : k) v /= sum;
  return k;
}

// Separable convolution with border replication.
FloatImage blur_float(const FloatImage& in, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  FloatImage tmp(in.width, in.height), out(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * in.at(std::clamp(x + i, 0, in.width - 1), y);
      tmp.at(x, y) = static_cast<float>(s);
    }
  }
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * tmp.at(x, std::clamp(y + i, 0, in.height - 1));
      out.at(x, y) = static_cast<float>(s);
    }
  }
  return out;
}

}  // namespace

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
  return to_gray(blur_float(to_float(img), sigma));
}

GrayImage downscale_upscale(const GrayImage& img, int intermediate_height) {
  if (intermediate_height >= img.height) return img;
  const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(img.width) * intermediate_height / img.height)));
  return resize_bilinear(resize_bilinear(img, w, intermediate_height), img.width, img.height);
}

GrayImage add_noise(const GrayImage& img, double sigma, Rng& rng) {
  GrayImage out(img.width, img.height);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[i] = clamp_to_u8(img.pixels[i] + sigma * rng.normal());
  }
  return out;
}

DisplacementField elastic_field(int width, int height, double alpha, double sigma, Rng& rng) {
  if (!(alpha >= 0.0) || !(sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "elastic distortion needs alpha >= 0 and sigma > 0");
  }
  FloatImage dx(width, height), dy(width, height);
  for (auto& v : dx.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  for (auto& v : dy.values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  DisplacementField f{blur_float(dx, sigma), blur_float(dy, sigma)};
  for (auto& v : f.dx.values) v = static_cast<float>(v * alpha);
  for (auto& v : f.dy.values) v = static_cast<float>(v * alpha);
  return f;
}

GrayImage elastic_distort(const GrayImage& img, double alpha, double sigma, Rng& rng) {
  const DisplacementField f = elastic_field(img.width, img.height, alpha, sigma, rng);
  if (alpha == 0.0) return img;
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      out.at(x, y) = clamp_to_u8(sample_bilinear_replicate(img, x + f.dx.at(x, y), y + f.dy.at(x, y)));
    }
  }
  return out;
}

GrayImage distort(const GrayImage& img, const AugmentConfig& cfg, Rng& rng) {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot distort an empty image");
  GrayImage out = img;
  if (rng.bernoulli(cfg.perspective_prob)) out = perspective_warp(out, cfg.perspective_jitter_frac, rng);
  if (rng.bernoulli(cfg.morph_prob)) {
    const MorphOp op = cfg.morph_ops[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cfg.morph_ops.size()) - 1))];
    const int k = cfg.morph_kernels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cfg.morph_kernels.size()) - 1))];
    out = morphology(out, op, k);
  }
  if (rng.bernoulli(cfg.gaussian_prob)) out = gaussian_blur(out, cfg.gaussian_sigma.draw(rng));
  if (rng.bernoulli(cfg.downscale_prob)) {
    const int lo = std::min(cfg.downscale_min_height, out.height);
    out = downscale_upscale(out, static_cast<int>(rng.uniform_int(lo, out.height)));
  }
  if (rng.bernoulli(cfg.noise_prob)) out = add_noise(out, cfg.noise_sigma.draw(rng), rng);
  if (rng.bernoulli(cfg.elastic_prob)) {
    const double alpha = cfg.elastic_alpha.draw(rng);
    out = elastic_distort(out, alpha, cfg.elastic_sigma.draw(rng), rng);
  }
  return out;
}

GrayImage augment_line(const GrayImage& img, const AugmentConfig& cfg, const TextureBank* bank,
                       Rng& rng) {
  GrayImage out = distort(img, cfg, rng);
  if (rng.bernoulli(cfg.composite_prob)) {
    if (!bank || bank->empty()) {
      throw Error(ErrorCode::InvalidConfig, "texture compositing enabled without textures");
    }
    const GrayImage crop = bank->crop(out.width, out.height, rng);
    out = alpha_composite(out, crop, cfg.ink_shade, rng);
  }
  return maybe_invert(out, cfg.invert_prob, rng);
}

}  // namespace lineocr
