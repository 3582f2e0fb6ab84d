// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lineocr/batch.hpp"
#include "lineocr/nn/layers.hpp"
#include "lineocr/nn/lstm.hpp"
#include "lineocr/nn/optim.hpp"

namespace lineocr {

enum class ModelKind { Hybrid, Fcn, HybridPeephole };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::Hybrid;
  int num_classes = 2;
  int hidden_units = 256;
  double dropout_rate = 0.5;
  int input_height = 32;

  /// Throws SpecInvalid.
  void validate() const;
  int width_downsampling() const { return kind == ModelKind::HybridPeephole ? 2 : 4; }
  int height_downsampling() const { return kind == ModelKind::Fcn ? 32 : 4; }
  /// Output frames for an input of `width` columns.
  int sequence_length(int width) const;
  /// Canonical JSON: sorted keys, no whitespace.
  std::string to_json() const;
  static ModelSpec from_json(std::string_view text);

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Initial learning rate used for each architecture.
double default_learning_rate(ModelKind kind);

struct ShapeRow {
  std::string operation;
  std::vector<int> dims;  // H x W x C for feature maps, T x F for sequences, empty for dropout
};

class Model {
 public:
  Model(ModelSpec spec, std::uint64_t seed);
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  /// images: [N, 1, input_height, W]; returns log-probabilities [T', N, K].
  /// `dropout_index` keys the dropout masks in train mode.
  nn::Tensor<float> forward(const nn::Tensor<float>& images, std::span<const int> widths,
                            nn::Mode mode, std::uint64_t dropout_index = 0);
  /// Accumulates parameter gradients from d loss / d log_probs.
  void backward(const nn::Tensor<float>& dlog_probs);

  std::vector<int> output_lengths(std::span<const int> widths) const;

  std::vector<nn::Param<float>*> params();
  std::vector<std::pair<std::string, nn::Tensor<float>*>> buffers();
  std::size_t parameter_count();

  /// Runs a single blank column batch of `width` through the network and
  /// records every layer's output volume.
  std::vector<ShapeRow> trace_shapes(int width);

 private:
  ModelSpec spec_;
  std::uint64_t seed_;
  std::vector<std::unique_ptr<nn::Layer<float>>> features_;
  std::unique_ptr<nn::BiLstm<float>> rnn_;
  std::unique_ptr<nn::Linear<float>> head_;

  nn::Shape feature_shape_;
  std::vector<float> drop_in_mask_;
  std::vector<float> drop_out_mask_;
  nn::Tensor<float> log_probs_;
  bool train_cache_valid_ = false;
};

struct TrainStepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

/// Forward, CTC loss, backward, global-norm clip and an Adam update at
/// `iteration` (>= 1). Throws InfeasibleLabel naming the batch position.
TrainStepResult train_step(Model& model, const Batch& batch, const nn::OptimizerConfig& cfg,
                           std::int64_t iteration);

/// Mean CTC loss without updating anything (dropout off).
double evaluate_loss(Model& model, const Batch& batch);

/// Greedy-decoded label sequences for a batch.
std::vector<LabelSeq> decode_batch(Model& model, const Batch& batch);

struct Checkpoint {
  ModelSpec spec;
  std::string charset_fingerprint;
  std::int64_t iteration = 0;
  std::uint64_t seed = 0;
  std::unique_ptr<Model> model;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(Model& model, std::string_view charset_fingerprint,
                                               std::int64_t iteration);
/// Throws CorruptCheckpoint, VersionMismatch, or SpecInvalid when `expected`
/// is given and differs from the stored spec.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes,
                                  const ModelSpec* expected = nullptr);

void save_checkpoint(Model& model, std::string_view charset_fingerprint, std::int64_t iteration,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelSpec* expected = nullptr);

}  // namespace lineocr
