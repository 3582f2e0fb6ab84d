// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lineocr/charset.hpp"
#include "lineocr/error.hpp"
#include "lineocr/image.hpp"
#include "lineocr/nn/optim.hpp"
#include "lineocr/rng.hpp"
#include "lineocr/utf8.hpp"

using namespace lineocr;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("charset construction") {
  const auto cs = Charset::build_utf8("ab");
  CHECK(cs.num_classes() == 3);
  CHECK(cs.label(U'a') == 1);
  CHECK(cs.label(U'b') == 2);
  CHECK(cs.blank_index() == 0);
  CHECK(code_of([] { Charset::build_utf8(""); }) == ErrorCode::EmptyCharset);
  CHECK(code_of([] { Charset::build_utf8("aba"); }) == ErrorCode::DuplicateSymbol);

  std::u32string big;
  for (char32_t c = U'A'; c <= U'Z'; ++c) big += c;
  for (char32_t c = U'a'; c <= U'z'; ++c) big += c;
  big += U" 0123456789äöüÄÖÜß.,;:!?'\"()[]{}-_/\\&%$€£¥@#*+=<>|~^°§²³¹₀₁₂₃₄₅₆₇₈₉";
  while (big.size() < 132) big += static_cast<char32_t>(0x2190 + big.size());
  CHECK(Charset::build(big).num_classes() == 133);
}

TEST_CASE("charset encode and decode") {
  const auto cs = Charset::build_utf8("ab");
  CHECK(cs.encode_utf8("aba") == LabelSeq{1, 2, 1});
  CHECK(cs.encode_utf8("").empty());
  try {
    cs.encode_utf8("ac");
    FAIL("expected UnknownSymbol");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownSymbol);
    CHECK(e.index() == std::optional<std::size_t>(1));
  }
  CHECK(cs.decode_utf8(LabelSeq{1, 2}) == "ab");
  CHECK(cs.decode_utf8(LabelSeq{}).empty());
  CHECK(code_of([&] { cs.decode_utf8(LabelSeq{0}); }) == ErrorCode::InvalidLabel);
  CHECK(code_of([&] { cs.decode_utf8(LabelSeq{3}); }) == ErrorCode::InvalidLabel);

  const auto uni = Charset::build_utf8("aß €\n");
  Rng rng(1);
  for (int k = 0; k < 200; ++k) {
    std::u32string s;
    for (int i = 0; i < 10; ++i) s += uni.symbols()[static_cast<std::size_t>(rng.uniform_int(0, 4))];
    const auto labels = uni.encode(s);
    for (auto l : labels) CHECK((l >= 1 && l < uni.num_classes()));
    CHECK(uni.decode(labels) == s);
  }
}

TEST_CASE("charset file round trip") {
  const auto dir = fs::temp_directory_path() / "lineocr_charset_test";
  fs::create_directories(dir);
  const auto cs = Charset::build(U"a\\b\n c");
  {
    std::ofstream f(dir / "cs.txt", std::ios::binary);
    f << cs.to_file_text();
  }
  const auto back = Charset::load(dir / "cs.txt");
  CHECK(back.symbols() == cs.symbols());
  CHECK(back.fingerprint() == cs.fingerprint());
  CHECK(Charset::build(U"ab").fingerprint() != Charset::build(U"ba").fingerprint());
  fs::remove_all(dir);
}

TEST_CASE("utf8") {
  const std::string s = "aß€😀";
  CHECK(utf8::decode(s) == U"aß€😀");
  CHECK(utf8::encode(utf8::decode(s)) == s);
  CHECK_THROWS_AS(utf8::decode("\xC3"), Error);
  CHECK_THROWS_AS(utf8::decode("\xC0\x80"), Error);
}

TEST_CASE("rng substreams") {
  Rng a(5, "x", 1), b(5, "x", 1), c(5, "x", 2), d(5, "y", 1);
  const auto va = a.next_u64();
  CHECK(va == b.next_u64());
  CHECK(va != c.next_u64());
  CHECK(va != d.next_u64());
  Rng r(9);
  int lo = 0, hi = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto v = r.uniform_int(3, 5);
    CHECK((v >= 3 && v <= 5));
    lo += v == 3;
    hi += v == 5;
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
  CHECK(lo > 3000);
  CHECK(hi > 3000);
  CHECK_FALSE(r.bernoulli(0.0));
}

TEST_CASE("image basics") {
  GrayImage img(5, 3);
  for (int y = 0; y < 3; ++y) {
    for (int x = 0; x < 5; ++x) img.at(x, y) = static_cast<std::uint8_t>(x * 40 + y);
  }
  CHECK(decode_pgm(encode_pgm(img)) == img);
  CHECK(sample_bilinear_replicate(img, 1.0, 2.0) == img.at(1, 2));
  CHECK(sample_bilinear_replicate(img, 1.5, 0.0) == doctest::Approx(60.0));
  CHECK(sample_bilinear_fill(img, -3.0, 0.0, 255.0) == 255.0);
  CHECK(resize_bilinear(img, 5, 3) == img);
  CHECK(clamp_to_u8(-4.0) == 0);
  CHECK(clamp_to_u8(300.0) == 255);
  CHECK(clamp_to_u8(12.5) == 13);
  CHECK(to_gray(to_float(img)) == img);
  CHECK_THROWS_AS(decode_pgm(std::vector<std::uint8_t>{'P', '2'}), Error);
}

TEST_CASE("adam matches a scalar reference") {
  nn::OptimizerConfig cfg;
  cfg.lr0 = 0.01;
  cfg.decay_every = 3;
  cfg.decay_factor = 0.5;
  cfg.clip_norm = 0.0;
  nn::Param<double> p("w", nn::Tensor<double>({1}, {1.0}));
  std::vector<nn::Param<double>*> ps{&p};
  double w = 1.0, m = 0.0, v = 0.0;
  for (std::int64_t t = 1; t <= 10; ++t) {
    const double g = std::sin(static_cast<double>(t)) + 0.3 * w;
    p.grad[0] = g;
    nn::adam_step<double>(ps, cfg, t);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
    const double lr = 0.01 * std::pow(0.5, std::floor(static_cast<double>(t) / 3.0));
    w -= lr * mhat / (std::sqrt(vhat) + 1e-8);
    CHECK(p.value[0] == doctest::Approx(w).epsilon(1e-12));
    CHECK(nn::learning_rate(cfg, t) == doctest::Approx(lr));
  }
}

TEST_CASE("gradient clipping") {
  nn::Param<double> a("a", nn::Tensor<double>({2}, {0.0, 0.0}));
  nn::Param<double> b("b", nn::Tensor<double>({1}, {0.0}));
  a.grad[0] = 3.0;
  a.grad[1] = 4.0;
  b.grad[0] = 12.0;
  std::vector<nn::Param<double>*> ps{&a, &b};
  CHECK(nn::clip_global_norm<double>(ps, 6.5) == doctest::Approx(13.0));
  CHECK(a.grad[0] == doctest::Approx(1.5));
  CHECK(b.grad[0] == doctest::Approx(6.0));
  CHECK(nn::clip_global_norm<double>(ps, 100.0) == doctest::Approx(6.5));
  CHECK(b.grad[0] == doctest::Approx(6.0));
}
