// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "lineocr/linepipe.hpp"
#include "lineocr/toy_assets.hpp"

using namespace lineocr;

namespace {

TextLineSample rule_line(double degrees, double baseline_left, double x_height, int w, int h) {
  const double slope = std::tan(degrees * std::numbers::pi / 180.0);
  TextLineSample s;
  s.image = GrayImage(w, h);
  // 2 px thick rule sitting on the baseline, 4x4 supersampled.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          const double px = x + (sx + 0.5) / 4.0, py = y + (sy + 0.5) / 4.0;
          const double base = baseline_left + slope * px;
          hits += py <= base && py > base - 2.0;
        }
      }
      s.image.at(x, y) = static_cast<std::uint8_t>(255 - hits * 255 / 16);
    }
  }
  s.transcript = "a";
  s.baseline = {baseline_left, baseline_left + slope * w};
  s.x_height = x_height;
  return s;
}

PreparedLine blank_line(int width, std::size_t id, std::uint8_t fill = 255) {
  return PreparedLine{GrayImage(width, 32, fill), {1}, id};
}

}  // namespace

TEST_CASE("normalization is the identity on a conforming line") {
  const auto atlas = toy::stroke_atlas(toy::FontStyle::Plain);
  auto r = render_line(U"hello there", atlas);
  TextLineSample s{r.image, "hello there", r.baseline, r.x_height, r.bbox};
  const NormalizationPolicy p;
  CHECK(normalize_geometry(s, p) == s.image);
  NormalizationPolicy off;
  off.enabled = false;
  CHECK(prepare_image(s, off) == s.image);
}

TEST_CASE("deskew puts a skewed rule on a constant row") {
  const NormalizationPolicy p;
  const auto s = rule_line(5.0, 22.0, 16.0, 240, 48);
  const GrayImage out = normalize_geometry(s, p);
  CHECK(out.height == 32);
  std::vector<double> centroids;
  for (int x = 10; x < out.width - 10; ++x) {
    double m = 0.0, my = 0.0;
    for (int y = 0; y < out.height; ++y) {
      const double ink = 255 - out.at(x, y);
      m += ink;
      my += ink * (y + 0.5);
    }
    REQUIRE(m > 0.0);
    centroids.push_back(my / m);
  }
  double mean = 0.0;
  for (double c : centroids) mean += c;
  mean /= static_cast<double>(centroids.size());
  for (double c : centroids) CHECK(std::abs(c - mean) <= 0.5);
  // The 2 px rule sits directly on row 24.
  CHECK(std::abs(mean - 23.0) <= 0.5);
}

TEST_CASE("x-height 32 scales by one half") {
  TextLineSample s;
  s.image = GrayImage(400, 64);
  for (int y = 16; y < 48; ++y) {
    for (int x = 100; x < 140; ++x) s.image.at(x, y) = 0;
  }
  s.baseline = {48.0, 48.0};
  s.x_height = 32.0;
  s.transcript = "a";
  const GrayImage out = normalize_geometry(s, NormalizationPolicy{});
  CHECK(out.width == 200);
  CHECK(out.height == 32);
  CHECK(out.at(60, 16) == 0);
  CHECK(out.at(49, 16) == 255);
  CHECK(out.at(70, 16) == 255);
  CHECK(out.at(60, 7) == 255);
  CHECK(out.at(60, 8) == 0);
  CHECK(out.at(60, 23) == 0);
  CHECK(out.at(60, 24) == 255);
}

TEST_CASE("degenerate geometry") {
  auto s = rule_line(0.0, 24.0, 16.0, 40, 32);
  s.x_height = 0.0;
  try {
    normalize_geometry(s, NormalizationPolicy{});
    FAIL("expected DegenerateGeometry");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateGeometry);
  }
  NormalizationPolicy bad;
  bad.target_x_height = 40;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(NormalizationPolicy::from_json(NormalizationPolicy{}.to_json()) == NormalizationPolicy{});
}

TEST_CASE("rescale to height") {
  CHECK(rescale_to_height(GrayImage(200, 64), 32).width == 100);
  CHECK(rescale_to_height(GrayImage(50, 16), 32).width == 100);
  CHECK(rescale_to_height(GrayImage(50, 16), 32).height == 32);
  const auto s = rule_line(0.0, 24.0, 16.0, 77, 32);
  CHECK(rescale_to_height(s.image, 32) == s.image);
  CHECK(rescale_to_height(GrayImage(1, 200), 32).width == 1);
}

TEST_CASE("padding and batch layout") {
  std::vector<PreparedLine> lines{blank_line(100, 0, 0), blank_line(104, 1, 0)};
  const std::vector<std::size_t> idx{0, 1};
  const Batch b = assemble_batch(lines, idx, nullptr, nullptr, 0);
  CHECK(b.max_width() == 104);
  CHECK(b.widths == std::vector<int>{100, 104});
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 104; ++x) {
      const float v0 = b.images.data()[static_cast<std::size_t>(y) * 104 + x];
      const float v1 = b.images.data()[static_cast<std::size_t>(32 + y) * 104 + x];
      CHECK(v0 == (x < 100 ? 1.0f : 0.0f));
      CHECK(v1 == 1.0f);
    }
  }
}

TEST_CASE("augmented batches never put ink into padding") {
  const auto bank = TextureBank(toy::textures("train", 2, 3));
  AugmentConfig aug = scenario_preset("type3");
  aug.invert_prob = 1.0;
  std::vector<PreparedLine> lines{blank_line(40, 0), blank_line(90, 1), blank_line(64, 2)};
  const std::vector<std::size_t> idx{0, 1, 2};
  const Batch b = assemble_batch(lines, idx, &aug, &bank, 5);
  for (int i = 0; i < 3; ++i) {
    for (int y = 0; y < 32; ++y) {
      for (int x = b.widths[static_cast<std::size_t>(i)]; x < 90; ++x) {
        CHECK(b.images.data()[(static_cast<std::size_t>(i) * 32 + y) * 90 + x] == 0.0f);
      }
    }
  }
}

TEST_CASE("feasibility rule") {
  CHECK_NOTHROW(check_feasible(4, {1}, 4));
  CHECK_THROWS_AS(check_feasible(4, {1, 1}, 4), Error);
  CHECK_NOTHROW(check_feasible(9, {1, 1}, 4));
  CHECK_THROWS_AS(check_feasible(8, {1, 1}, 4), Error);
  CHECK_THROWS_AS(check_feasible(100, {}, 4), Error);

  const auto charset = toy::charset();
  std::vector<TextLineSample> samples(3);
  for (auto& s : samples) {
    s.image = GrayImage(4, 32);
    s.baseline = {24, 24};
    s.x_height = 16;
  }
  samples[0].transcript = "a";
  samples[1].transcript = "aa";
  samples[2].transcript = "b";
  const auto set = prepare_samples(samples, charset, NormalizationPolicy{}, 4, 10);
  REQUIRE(set.lines.size() == 1);
  CHECK(set.lines[0].id == 10);
  REQUIRE(set.skipped.size() == 2);
  CHECK(set.skipped[0].id == 11);
  CHECK(set.skipped[0].code == ErrorCode::SampleTooNarrow);
  CHECK(set.skipped[1].code == ErrorCode::UnknownSymbol);
}

TEST_CASE("bucketed batching pads less than random batching") {
  Rng rng(21);
  std::vector<PreparedLine> lines;
  for (std::size_t i = 0; i < 600; ++i) {
    lines.push_back(blank_line(static_cast<int>(rng.uniform_int(40, 400)), i));
  }
  BucketBatcher batcher(lines, 16, 3);
  const auto plan = batcher.epoch_plan(0);
  std::vector<std::size_t> seen;
  for (const auto& b : plan) {
    CHECK(b.size() <= 16);
    seen.insert(seen.end(), b.begin(), b.end());
  }
  std::sort(seen.begin(), seen.end());
  for (std::size_t i = 0; i < seen.size(); ++i) CHECK(seen[i] == i);

  std::vector<std::size_t> order(lines.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuf(4);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[static_cast<std::size_t>(shuf.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
  }
  std::vector<std::vector<std::size_t>> random_plan;
  for (std::size_t i = 0; i < order.size(); i += 16) {
    random_plan.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                             order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + 16)));
  }
  const double bucketed = padding_fraction(lines, plan);
  const double random = padding_fraction(lines, random_plan);
  CHECK(bucketed <= random);
  CHECK(bucketed < 0.1);
}

TEST_CASE("batch stream is a pure function of seed and iteration") {
  std::vector<PreparedLine> lines;
  Rng rng(8);
  for (std::size_t i = 0; i < 50; ++i) lines.push_back(blank_line(static_cast<int>(rng.uniform_int(20, 200)), i, 90));
  AugmentConfig aug = scenario_preset("type2");
  BucketBatcher a(lines, 4, 9, aug), b(lines, 4, 9, aug);
  std::vector<Batch> first;
  for (std::int64_t t = 1; t <= 30; ++t) first.push_back(a.batch(t));
  for (std::int64_t t = 30; t >= 1; --t) {
    const Batch x = b.batch(t);
    const Batch& y = first[static_cast<std::size_t>(t - 1)];
    CHECK(x.sample_ids == y.sample_ids);
    CHECK(x.images.shape() == y.images.shape());
    CHECK(std::equal(x.images.data(), x.images.data() + x.images.size(), y.images.data()));
  }
}
