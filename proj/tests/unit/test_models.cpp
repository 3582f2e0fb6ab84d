// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "lineocr/ctc.hpp"
#include "lineocr/models.hpp"

using namespace lineocr;
using nn::Tensor;

namespace {

Batch random_batch(int n, int width, int classes, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.images = Tensor<float>({n, 1, 32, width});
  for (auto& v : b.images.values()) v = static_cast<float>(rng.uniform());
  for (int i = 0; i < n; ++i) {
    b.widths.push_back(width - 4 * i);
    LabelSeq l;
    for (int k = 0; k < 3; ++k) l.push_back(static_cast<Label>(rng.uniform_int(1, classes - 1)));
    b.labels.push_back(l);
    b.sample_ids.push_back(static_cast<std::size_t>(i));
  }
  return b;
}

}  // namespace

TEST_CASE("hybrid parameter count follows the closed form") {
  for (int k : {2, 12, 133}) {
    Model hybrid({ModelKind::Hybrid, k}, 1);
    CHECK(hybrid.parameter_count() == 2698368u + 513u * static_cast<std::size_t>(k));
    Model peep({ModelKind::HybridPeephole, k}, 1);
    CHECK(peep.parameter_count() == 2698368u + 1536u + 513u * static_cast<std::size_t>(k));
    Model fcn({ModelKind::Fcn, k}, 1);
    CHECK(fcn.parameter_count() == 7088512u + 513u * static_cast<std::size_t>(k));
  }
}

TEST_CASE("sequence length law") {
  for (int w = 4; w <= 512; ++w) {
    CHECK(ModelSpec{ModelKind::Hybrid, 5}.sequence_length(w) == (w + 3) / 4);
    CHECK(ModelSpec{ModelKind::Fcn, 5}.sequence_length(w) == (w + 3) / 4);
    CHECK(ModelSpec{ModelKind::HybridPeephole, 5}.sequence_length(w) == (w + 1) / 2);
  }
  Model hybrid({ModelKind::Hybrid, 5, 8}, 2);
  Model fcn({ModelKind::Fcn, 5}, 2);
  Model peep({ModelKind::HybridPeephole, 5, 8}, 2);
  for (int w : {4, 5, 6, 7, 9, 33, 63, 130}) {
    CAPTURE(w);
    CHECK(hybrid.trace_shapes(w).back().dims[0] == hybrid.spec().sequence_length(w));
    CHECK(fcn.trace_shapes(w).back().dims[0] == fcn.spec().sequence_length(w));
    CHECK(peep.trace_shapes(w).back().dims[0] == peep.spec().sequence_length(w));
  }
}

TEST_CASE("invalid specs") {
  CHECK_THROWS_AS(ModelSpec({ModelKind::Hybrid, 1}).validate(), Error);
  CHECK_THROWS_AS(ModelSpec({ModelKind::Fcn, 4, 256, 0.5, 48}).validate(), Error);
  CHECK_NOTHROW(ModelSpec({ModelKind::Hybrid, 4, 256, 0.5, 48}).validate());
  CHECK_THROWS_AS(parse_model_kind("cnn"), Error);
  const ModelSpec s{ModelKind::HybridPeephole, 7, 16, 0.25, 32};
  CHECK(ModelSpec::from_json(s.to_json()) == s);
}

TEST_CASE("forward emits normalized, deterministic log-probabilities") {
  Model m({ModelKind::Hybrid, 6, 16}, 3);
  const Batch b = random_batch(2, 40, 6, 4);
  const auto a = m.forward(b.images, b.widths, nn::Mode::Infer);
  CHECK(a.dim(0) == 10);
  for (int t = 0; t < a.dim(0); ++t) {
    for (int n = 0; n < a.dim(1); ++n) {
      double s = 0;
      for (int k = 0; k < a.dim(2); ++k) s += std::exp(a.at(t, n, k));
      CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
    }
  }
  CHECK(m.forward(b.images, b.widths, nn::Mode::Infer) == a);
  Tensor<float> wrong({1, 1, 16, 40});
  const std::vector<int> w{40};
  CHECK_THROWS_AS(m.forward(wrong, w, nn::Mode::Infer), Error);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  Model m({ModelKind::Hybrid, 6, 16}, 3);
  const Batch b = random_batch(2, 40, 6, 5);
  nn::OptimizerConfig cfg;
  cfg.lr0 = 0.0;
  std::vector<Tensor<float>> before;
  for (auto* p : m.params()) before.push_back(p->value);
  train_step(m, b, cfg, 1);
  train_step(m, b, cfg, 2);
  std::size_t i = 0;
  for (auto* p : m.params()) CHECK(p->value == before[i++]);
}

TEST_CASE("first loss is in the sanity band") {
  // Label density of real lines: roughly one character per 1.5 to 2 frames.
  for (ModelKind kind : {ModelKind::Hybrid, ModelKind::Fcn, ModelKind::HybridPeephole}) {
    Model m({kind, 12}, 11);
    const int width = kind == ModelKind::HybridPeephole ? 64 : 96;
    Batch b = random_batch(4, width, 12, 6);
    Rng rng(12);
    for (auto& l : b.labels) {
      l.clear();
      for (int k = 0; k < 16; ++k) l.push_back(static_cast<Label>(rng.uniform_int(1, 11)));
    }
    b.widths.assign(4, width);
    const double loss = evaluate_loss(m, b);
    const double ref = 16.0 * std::log(12.0);
    CAPTURE(to_string(kind));
    CHECK(loss >= 0.5 * ref);
    CHECK(loss <= 2.0 * ref);
  }
}

TEST_CASE("infeasible batches are refused") {
  Model m({ModelKind::Hybrid, 6, 8}, 3);
  Batch b = random_batch(1, 8, 6, 5);
  b.labels[0] = {1, 2, 3};
  b.sample_ids[0] = 42;
  try {
    train_step(m, b, {}, 1);
    FAIL("expected InfeasibleLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InfeasibleLabel);
    CHECK(e.index() == std::optional<std::size_t>(42));
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  Model m({ModelKind::HybridPeephole, 6, 16}, 8);
  const Batch b = random_batch(2, 40, 6, 9);
  train_step(m, b, {}, 1);
  const auto bytes = serialize_checkpoint(m, "abcd", 1);
  Checkpoint ck = deserialize_checkpoint(bytes);
  CHECK(ck.iteration == 1);
  CHECK(ck.charset_fingerprint == "abcd");
  CHECK(serialize_checkpoint(*ck.model, "abcd", 1) == bytes);
  CHECK(ck.model->forward(b.images, b.widths, nn::Mode::Infer) ==
        m.forward(b.images, b.widths, nn::Mode::Infer));

  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  CHECK_THROWS_WITH_AS(deserialize_checkpoint(truncated), doctest::Contains("checksum"), Error);
  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 1;
  try {
    deserialize_checkpoint(flipped);
    FAIL("expected CorruptCheckpoint");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorruptCheckpoint);
  }
  auto version = bytes;
  version[8] = 9;
  try {
    deserialize_checkpoint(version);
    FAIL("expected VersionMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::VersionMismatch);
  }
  const ModelSpec fcn{ModelKind::Fcn, 6};
  try {
    deserialize_checkpoint(bytes, &fcn);
    FAIL("expected SpecInvalid");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpecInvalid);
  }
  const auto path = std::filesystem::temp_directory_path() / "lineocr_ckpt_test.bin";
  save_checkpoint(m, "abcd", 1, path);
  CHECK(serialize_checkpoint(*load_checkpoint(path).model, "abcd", 1) == bytes);
  std::filesystem::remove(path);
}
