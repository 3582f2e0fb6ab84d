// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lineocr/augment.hpp"
#include "lineocr/error.hpp"
#include "lineocr/toy_assets.hpp"
#include "lineocr/synthgen.hpp"

using namespace lineocr;

namespace {

GrayImage text_line() {
  const auto atlas = toy::stroke_atlas(toy::FontStyle::Plain);
  return render_line(U"the red hat", atlas).image;
}

GrayImage random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  GrayImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
  return img;
}

AugmentConfig everything_on() {
  AugmentConfig c = scenario_preset("type3");
  c.perspective_prob = c.morph_prob = c.gaussian_prob = c.downscale_prob = 1.0;
  c.noise_prob = c.elastic_prob = 1.0;
  c.morph_kernels = {2, 3};
  return c;
}

}  // namespace

TEST_CASE("compositing identities") {
  CHECK(composite_pixel(1.0, 37, 211) == 37);
  CHECK(composite_pixel(0.0, 37, 211) == 211);
  CHECK(composite_pixel(0.5, 0, 200) == 100);

  const GrayImage tex = random_image(40, 32, 1);
  GrayImage black(40, 32, 0), white(40, 32, 255);
  const GrayImage fg = alpha_composite(black, tex, 20.0);
  for (auto p : fg.pixels) CHECK(p == 20);
  CHECK(alpha_composite(white, tex, 20.0) == tex);
  CHECK_THROWS_AS(alpha_composite(black, random_image(41, 32, 2), 0.0), Error);
  try {
    alpha_composite(black, random_image(41, 32, 2), 0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DimensionMismatch);
  }
}

TEST_CASE("inversion") {
  const GrayImage img = random_image(17, 9, 3);
  CHECK(invert(invert(img)) == img);
  GrayImage zero(1, 1, 0);
  CHECK(invert(zero).pixels[0] == 255);
  Rng rng(4);
  CHECK(maybe_invert(img, 0.0, rng) == img);
  CHECK(maybe_invert(img, 1.0, rng) == invert(img));
  CHECK_THROWS_AS(maybe_invert(img, 1.5, rng), Error);
}

TEST_CASE("elastic identities") {
  const GrayImage img = text_line();
  Rng rng(5);
  CHECK(elastic_distort(img, 0.0, 4.0, rng) == img);
  GrayImage flat(60, 32, 137);
  const GrayImage out = elastic_distort(flat, 10.0, 4.0, rng);
  CHECK(out == flat);
  CHECK_THROWS_AS(elastic_distort(img, 5.0, 0.0, rng), Error);
  CHECK_THROWS_AS(elastic_distort(img, -1.0, 3.0, rng), Error);
}

TEST_CASE("elastic displacement magnitude matches the smoothed-uniform expectation") {
  const double alpha = 10.0, sigma = 4.0;
  // Independent kernel: truncated at 3 sigma, normalized.
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    sum += k.back();
  }
  double sq = 0.0;
  for (double v : k) sq += (v / sum) * (v / sum);
  // Var(U[-1,1]) = 1/3; the 2-D separable kernel has sum of squares sq^2.
  const double sd = std::sqrt(sq * sq / 3.0);
  const double expected = alpha * sd * std::sqrt(2.0 / std::numbers::pi);

  Rng rng(6);
  const int n = 400;
  const auto f = elastic_field(n, n, alpha, sigma, rng);
  double acc = 0.0;
  std::size_t count = 0;
  for (int y = r; y < n - r; ++y) {
    for (int x = r; x < n - r; ++x) {
      acc += std::abs(f.dx.at(x, y)) + std::abs(f.dy.at(x, y));
      count += 2;
    }
  }
  CHECK(count >= 10000);
  const double measured = acc / static_cast<double>(count);
  CHECK(std::abs(measured - expected) / expected < 0.10);
}

TEST_CASE("distort with zero probabilities is the identity") {
  const GrayImage img = text_line();
  Rng rng(7);
  AugmentConfig c;
  CHECK(distort(img, c, rng) == img);
  CHECK(augment_line(img, scenario_preset("type1"), nullptr, rng) == img);
  CHECK_THROWS_AS(distort(GrayImage{}, c, rng), Error);
}

TEST_CASE("every augmentation preserves shape and is deterministic") {
  const GrayImage img = text_line();
  const auto tex = toy::textures("train", 3, 9);
  const TextureBank bank(tex);
  const AugmentConfig c = everything_on();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng a(seed), b(seed);
    const GrayImage x = augment_line(img, c, &bank, a);
    const GrayImage y = augment_line(img, c, &bank, b);
    CHECK(x.width == img.width);
    CHECK(x.height == img.height);
    CHECK(x == y);
  }
  Rng rng(11);
  for (int k : {2, 3}) {
    CHECK(morphology(img, MorphOp::Dilate, k).width == img.width);
    CHECK(morphology(img, MorphOp::Erode, k).height == img.height);
  }
  const GrayImage d = downscale_upscale(img, 16);
  CHECK(d.width == img.width);
  CHECK(d.height == 32);
  CHECK(d != img);
  CHECK(downscale_upscale(img, 32) == img);
  CHECK(perspective_warp(img, 0.0, rng) == img);
  CHECK(gaussian_blur(GrayImage(20, 20, 90), 1.2) == GrayImage(20, 20, 90));
}

TEST_CASE("morphology direction") {
  GrayImage img(9, 9, 255);
  img.at(4, 4) = 0;
  const GrayImage dil = morphology(img, MorphOp::Dilate, 3);
  int dark = 0;
  for (auto p : dil.pixels) dark += p == 0;
  CHECK(dark == 9);
  CHECK(morphology(img, MorphOp::Erode, 3) == GrayImage(9, 9, 255));
}

TEST_CASE("noise stays within 8 bits") {
  GrayImage img(50, 32, 0);
  for (int x = 25; x < 50; ++x) {
    for (int y = 0; y < 32; ++y) img.at(x, y) = 255;
  }
  Rng rng(12);
  const GrayImage out = add_noise(img, 100.0, rng);
  int clipped_low = 0, clipped_high = 0;
  for (int y = 0; y < 32; ++y) {
    clipped_low += out.at(0, y) == 0;
    clipped_high += out.at(49, y) == 255;
  }
  // Clamped rather than wrapped: about half of each side saturates.
  CHECK(clipped_low > 8);
  CHECK(clipped_high > 8);
}

TEST_CASE("scenario presets") {
  const auto t1 = scenario_preset("type1");
  CHECK(t1 == AugmentConfig{});
  const auto t2 = scenario_preset("type2");
  CHECK(t2.composite_prob == 0.0);
  CHECK(t2.invert_prob == 0.0);
  CHECK(t2.perspective_prob > 0.0);
  CHECK(t2.morph_prob > 0.0);
  CHECK(t2.gaussian_prob > 0.0);
  CHECK(t2.noise_prob > 0.0);
  CHECK(t2.downscale_prob > 0.0);
  const auto t3 = scenario_preset("type3");
  CHECK(t3.composite_prob > 0.0);
  CHECK(t3.invert_prob > 0.0);
  try {
    scenario_preset("type4");
    FAIL("expected UnknownScenario");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownScenario);
  }
}

TEST_CASE("augment config validation and json") {
  const auto c = everything_on();
  CHECK(AugmentConfig::from_json(c.to_json()) == c);
  AugmentConfig bad;
  bad.noise_prob = 1.2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = AugmentConfig{};
  bad.gaussian_sigma = {2.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = AugmentConfig{};
  bad.downscale_min_height = 7;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_THROWS_AS(AugmentConfig::from_json(R"({"bogus": 1})"), Error);
  CHECK(AugmentConfig::from_json(R"({"noise_prob": 0.3})").noise_prob == 0.3);
}

TEST_CASE("texture bank") {
  Rng rng(13);
  const TextureBank empty;
  const GrayImage img = text_line();
  CHECK_THROWS_AS(augment_line(img, scenario_preset("type3"), &empty, rng), Error);
  CHECK_THROWS_AS(TextureBank({GrayImage(100, 20)}), Error);

  GrayImage small(10, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 10; ++x) small.at(x, y) = static_cast<std::uint8_t>(x * 10 + y);
  }
  const TextureBank bank({small}, {"a.pgm"});
  const GrayImage crop = bank.crop(35, 32, rng);
  CHECK(crop.width == 35);
  for (int x = 10; x < 35; ++x) CHECK(crop.at(x, 3) == crop.at(x - 10, 3));

  const TextureBank other({small}, {"b.pgm"});
  CHECK(disjoint(bank, other));
  CHECK_FALSE(disjoint(bank, bank));
}
