// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lineocr/augment.hpp"
#include "lineocr/linepipe.hpp"
#include "lineocr/models.hpp"
#include "lineocr/nn/optim.hpp"

namespace lineocr {

namespace fs = std::filesystem;

struct DatasetSpec {
  std::string name;
  std::vector<fs::path> corpora;
  std::int64_t min_count = 100;
  std::int64_t max_lines = 0;
  fs::path out;
};

struct TrainSettings {
  fs::path train_set;
  fs::path val_set;
  std::int64_t iterations = 20000;
  int batch_size = 16;
  std::int64_t checkpoint_every = 1000;
  std::int64_t validate_every = 1000;
  AugmentConfig augment = scenario_preset("type3");
  std::string val_scenario = "type3";
  int val_repeats = 1;
  std::size_t val_max_lines = 0;  // 0: all
  fs::path out_dir = "runs/train";
};

struct EvalSettings {
  fs::path test_set;
  std::vector<std::string> scenarios{"type1", "type2", "type3"};
  int repeats = 30;  // type1 is always scored once
  int batch_size = 16;
  bool collapse_whitespace = false;
  fs::path out_dir = "runs/eval";
};

struct BenchSettings {
  fs::path dataset;
  std::vector<std::string> scenarios{"type1"};
  int batch_size = 4;
  int trials = 10;
  std::size_t max_lines = 0;
  fs::path out_dir = "runs/bench";
};

/// One self-describing JSON run file. Relative paths resolve against the
/// directory holding the file.
struct RunConfig {
  fs::path base_dir = ".";
  std::uint64_t seed = 1;
  fs::path charset;
  std::vector<fs::path> atlases;
  fs::path textures_train;
  fs::path textures_test;
  int max_len = 40;
  std::vector<DatasetSpec> datasets;
  NormalizationPolicy normalization;
  ModelSpec model;
  nn::OptimizerConfig optimizer;
  bool lr_explicit = false;
  TrainSettings train;
  EvalSettings eval;
  BenchSettings bench;

  static RunConfig parse(std::string_view json_text, const fs::path& base_dir);
  static RunConfig load(const fs::path& path);
  std::string to_json() const;

  /// Switches architecture; the learning rate follows unless set explicitly.
  void set_model_kind(ModelKind kind);
  /// Number of classes from the charset file.
  void sync_num_classes();

  /// Throws InvalidConfig naming the first missing path or conflicting setting.
  void validate_generate() const;
  void validate_train() const;
  void validate_eval() const;
  void validate_bench() const;
};

}  // namespace lineocr
