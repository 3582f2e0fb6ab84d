// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "lineocr/augment.hpp"
#include "lineocr/charset.hpp"
#include "lineocr/linepipe.hpp"
#include "lineocr/models.hpp"

namespace lineocr {

/// Errors are named from the recognizer's side: an insertion is a spurious
/// hypothesis character, a deletion a missed reference character.
enum class EditKind { Match, Substitution, Deletion, Insertion };
std::string to_string(EditKind kind);

struct EditOp {
  EditKind kind = EditKind::Match;
  char32_t reference = 0;   // unset for insertions
  char32_t hypothesis = 0;  // unset for deletions
  friend bool operator==(const EditOp&, const EditOp&) = default;
};

struct Alignment {
  std::size_t distance = 0;
  std::vector<EditOp> script;  // includes matches, in string order
};

/// Unit-cost edit distance with one optimal script. The backtrace runs from
/// the end and prefers substitution/match, then deletion, then insertion.
Alignment levenshtein(std::u32string_view reference, std::u32string_view hypothesis);
/// Distance only, linear memory.
std::size_t edit_distance(std::u32string_view reference, std::u32string_view hypothesis);
/// Replays `script` over the hypothesis and returns the reference it encodes.
/// Throws InvalidArgument when the script does not fit the hypothesis.
std::u32string apply_to_hypothesis(std::u32string_view hypothesis, std::span<const EditOp> script);

struct ErrorRow {
  EditKind kind = EditKind::Insertion;
  char32_t from = 0;
  char32_t to = 0;
  std::int64_t count = 0;
  double percent = 0.0;  // of all errors
  /// "Insertion of ' '", "Deletion of 'a'", "Substitution 'l' -> 'i'".
  std::string label() const;
};

struct ScenarioResult {
  std::string scenario;
  int repeats = 1;
  std::size_t lines = 0;
  std::size_t skipped = 0;
  std::int64_t total_edit_distance = 0;
  std::int64_t total_gt_length = 0;
  double cer = 0.0;
  std::vector<ErrorRow> error_table;
};

/// Corpus-level CER and error counts.
class CerAccumulator {
 public:
  explicit CerAccumulator(bool collapse_whitespace = false) : collapse_ws_(collapse_whitespace) {}
  void add(std::u32string_view reference, std::u32string_view hypothesis);
  std::int64_t total_edit_distance() const { return distance_; }
  std::int64_t total_gt_length() const { return gt_length_; }
  double cer() const;
  /// Ranked by count, then kind and characters; at most `top_k` rows.
  std::vector<ErrorRow> error_table(std::size_t top_k) const;

 private:
  bool collapse_ws_;
  std::int64_t distance_ = 0;
  std::int64_t gt_length_ = 0;
  std::map<std::tuple<int, char32_t, char32_t>, std::int64_t> counts_;
};

/// Runs of whitespace become one space; leading and trailing whitespace goes.
std::u32string collapse_whitespace(std::u32string_view s);

struct EvalOptions {
  int batch_size = 16;
  bool collapse_whitespace = false;
  std::size_t top_k = 10;
};

/// Every line is distorted `repeats` times with the scenario preset (line i,
/// repeat r draws from its own substream) and recognized greedily.
ScenarioResult evaluate(Model& model, const Charset& charset, const PreparedSet& data,
                        std::string_view scenario, int repeats, std::uint64_t seed,
                        const TextureBank* bank, const EvalOptions& options = {});

inline constexpr double kSymbolsPerPage = 1500.0;

struct Throughput {
  std::string scenario;
  int batch = 4;
  int trials = 10;
  std::int64_t symbols = 0;
  std::vector<double> trial_seconds;
  double sec_per_page_mean = 0.0;
  double sec_per_page_std = 0.0;
};

/// Times batching, the forward pass and decoding over the whole set, once per
/// trial; distortions are drawn beforehand and not timed.
Throughput benchmark(Model& model, const Charset& charset, const PreparedSet& data,
                     std::string_view scenario, int batch_size, int trials, std::uint64_t seed,
                     const TextureBank* bank);

std::string benchmark_csv(std::span<const Throughput> rows);

struct EvalReport {
  std::string model;
  std::vector<ScenarioResult> scenarios;

  std::string to_json() const;
  /// Aligned plain-text tables: CER per scenario, then the top errors.
  std::string to_text() const;
};

}  // namespace lineocr
