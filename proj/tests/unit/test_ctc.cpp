// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "gradcheck.hpp"
#include "lineocr/ctc.hpp"
#include "lineocr/nn/layers.hpp"
#include "oracles.hpp"

using namespace lineocr;
using nn::Tensor;

namespace {

Tensor<double> log_of(const Tensor<double>& p) {
  Tensor<double> out(p.shape());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = std::log(p[i]);
  return out;
}

}  // namespace

TEST_CASE("single frame single label") {
  const Tensor<double> lp = log_of(Tensor<double>({1, 1, 2}, {0.4, 0.6}));
  const std::vector<int> lengths{1};
  const std::vector<LabelSeq> labels{{1}};
  const auto r = ctc::ctc_loss(lp, lengths, labels);
  CHECK(r.loss == doctest::Approx(-std::log(0.6)).epsilon(1e-12));
}

TEST_CASE("two uniform frames emit a single label with probability 0.75") {
  const Tensor<double> lp = log_of(Tensor<double>({2, 1, 2}, {0.5, 0.5, 0.5, 0.5}));
  const std::vector<int> lengths{2};
  const std::vector<LabelSeq> labels{{1}};
  CHECK(ctc::ctc_loss(lp, lengths, labels).loss == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
  const Tensor<double> probs({2, 2}, {0.5, 0.5, 0.5, 0.5});
  const LabelSeq a{1};
  CHECK(ctc::brute_force_alignment_prob(probs, a) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("brute force edge cases") {
  const Tensor<double> probs({2, 3}, {0.2, 0.3, 0.5, 0.6, 0.1, 0.3});
  const LabelSeq too_long{1, 2, 1};
  CHECK(ctc::brute_force_alignment_prob(probs, too_long) == 0.0);
  CHECK(ctc::brute_force_alignment_prob(probs, LabelSeq{}) == doctest::Approx(0.2 * 0.6));
  const Tensor<double> big({11, 2}, 0.5);
  CHECK_THROWS_AS(ctc::brute_force_alignment_prob(big, LabelSeq{1}), Error);
}

TEST_CASE("infeasible samples get infinite loss and are reported") {
  const Tensor<double> lp = nn::log_softmax(Tensor<double>({2, 2, 3}));
  const std::vector<int> lengths{2, 2};
  const std::vector<LabelSeq> labels{{1}, {2, 2}};
  const auto r = ctc::ctc_loss(lp, lengths, labels);
  CHECK(std::isinf(r.loss));
  REQUIRE(r.infeasible.size() == 1);
  CHECK(r.infeasible[0] == 1);
  CHECK(std::isfinite(r.per_sample_nll[0]));
}

TEST_CASE("labels out of range are rejected") {
  const Tensor<double> lp = nn::log_softmax(Tensor<double>({2, 1, 3}));
  const std::vector<int> lengths{2};
  CHECK_THROWS_AS(ctc::ctc_loss(lp, lengths, std::vector<LabelSeq>{{3}}), Error);
  CHECK_THROWS_AS(ctc::ctc_loss(lp, lengths, std::vector<LabelSeq>{{0}}), Error);
}

TEST_CASE("greedy decoding rules") {
  CHECK(ctc::collapse(std::vector<Label>{1, 1, 0, 2, 2}) == LabelSeq{1, 2});
  CHECK(ctc::collapse(std::vector<Label>{0, 0, 0}).empty());
  CHECK(ctc::collapse(std::vector<Label>{1, 0, 1}) == LabelSeq{1, 1});
  CHECK(ctc::collapse(std::vector<Label>{1, 1}) == LabelSeq{1});
  // ties go to the lowest index
  const Tensor<float> lp({1, 1, 3}, std::vector<float>{-1.0f, -1.0f, -2.0f});
  const std::vector<int> lengths{1};
  CHECK(ctc::greedy_decode(lp, lengths)[0].empty());
}

TEST_CASE("loss agrees with the path enumeration oracle") {
  const auto r = testkit::ctc_oracle_suite(200, 5);
  CHECK(r.cases == 200);
  CHECK(r.worst_abs_error <= 1e-10);
}

TEST_CASE("appending a certain blank frame never lowers the label probability") {
  Rng rng(9);
  for (int c = 0; c < 100; ++c) {
    const int steps = static_cast<int>(rng.uniform_int(1, 6)), classes = 3;
    Tensor<double> p({steps + 1, classes});
    for (int t = 0; t < steps; ++t) {
      double s = 0;
      for (int k = 0; k < classes; ++k) s += (p.at(t, k) = rng.uniform(0.05, 1.0));
      for (int k = 0; k < classes; ++k) p.at(t, k) /= s;
    }
    Tensor<double> shorter({steps, classes}, std::vector<double>(p.data(), p.data() + steps * classes));
    p.at(steps, 0) = 1.0;
    const LabelSeq label{static_cast<Label>(rng.uniform_int(1, 2))};
    CHECK(ctc::brute_force_alignment_prob(p, label) >=
          ctc::brute_force_alignment_prob(shorter, label) - 1e-15);
  }
}

TEST_CASE("greedy decode matches the run-length oracle") {
  const auto r = testkit::greedy_oracle_suite(2000, 3);
  CHECK(r.mismatches == 0);
}
