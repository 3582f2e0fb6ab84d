// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "lineocr/augment.hpp"
#include "lineocr/charset.hpp"
#include "lineocr/linepipe.hpp"
#include "lineocr/models.hpp"

namespace lineocr {

struct TrainRunOptions {
  std::int64_t iterations = 1000;  // total, counting any resumed ones
  int batch_size = 16;
  std::int64_t checkpoint_every = 1000;
  std::int64_t validate_every = 1000;
  std::optional<AugmentConfig> augment;
  const TextureBank* train_textures = nullptr;
  std::string val_scenario = "type1";
  int val_repeats = 1;
  nn::OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir;
  /// Stop early after this iteration (0: run to the end); used to emulate interruptions.
  std::int64_t stop_after = 0;
};

struct TrainSummary {
  std::int64_t start_iteration = 0;
  std::int64_t last_iteration = 0;
  double first_loss = 0.0;
  double final_loss = 0.0;  // mean over the last 100 steps
  double last_val_cer = -1.0;
  double seconds = 0.0;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Runs iterations start+1 .. options.iterations. Writes `train_log.jsonl`,
/// `validation.jsonl`, periodic `checkpoints/ckpt_<iter>.bin`, `latest.bin`
/// and, when the budget is reached, `final.bin`.
TrainSummary train_model(Model& model, std::int64_t start_iteration, const Charset& charset,
                         const PreparedSet& train, const PreparedSet* val,
                         const TrainRunOptions& options, const ProgressFn& progress = nullptr);

}  // namespace lineocr
