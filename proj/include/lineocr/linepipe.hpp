// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lineocr/augment.hpp"
#include "lineocr/batch.hpp"
#include "lineocr/charset.hpp"
#include "lineocr/error.hpp"
#include "lineocr/image.hpp"
#include "lineocr/synthgen.hpp"

namespace lineocr {

struct NormalizationPolicy {
  bool enabled = true;
  int target_height = 32;
  int target_x_height = 16;
  int baseline_row = 24;  // measured from the top edge

  /// Throws InvalidConfig.
  void validate() const;
  std::string to_json() const;
  static NormalizationPolicy from_json(std::string_view text);

  friend bool operator==(const NormalizationPolicy&, const NormalizationPolicy&) = default;
};

/// Deskews along the baseline and scales the x-height to the target. The
/// baseline lands on `baseline_row`; the result is `target_height` tall.
/// Throws DegenerateGeometry.
GrayImage normalize_geometry(const TextLineSample& sample, const NormalizationPolicy& policy);

/// Aspect-preserving bilinear rescale to `target_height` rows.
GrayImage rescale_to_height(const GrayImage& img, int target_height);

/// normalize_geometry when the policy is enabled, otherwise rescale_to_height.
GrayImage prepare_image(const TextLineSample& sample, const NormalizationPolicy& policy);

/// Network input value of a pixel; white maps to 0, which is also the padding value.
inline float pixel_to_input(std::uint8_t p) { return static_cast<float>(255 - p) / 255.0f; }

/// A line ready for batching: geometry fixed, labels encoded, not yet augmented.
struct PreparedLine {
  GrayImage image;
  LabelSeq labels;
  std::size_t id = 0;
};

struct SkippedSample {
  std::size_t id = 0;
  ErrorCode code = ErrorCode::SampleTooNarrow;
  std::string reason;
};

struct PreparedSet {
  std::vector<PreparedLine> lines;
  std::vector<SkippedSample> skipped;
};

/// Smallest frame count CTC needs for `labels` against the frames a line of
/// `width` columns yields at `width_downsampling`. Throws SampleTooNarrow.
void check_feasible(int width, const LabelSeq& labels, int width_downsampling);

/// Prepares every sample; lines CTC cannot fit, empty transcripts and
/// transcripts outside the charset are skipped and reported.
PreparedSet prepare_samples(std::span<const TextLineSample> samples, const Charset& charset,
                            const NormalizationPolicy& policy, int width_downsampling,
                            std::size_t first_id = 0);

/// load_dataset followed by prepare_samples; ids are manifest ids. Only
/// the first `max_lines` entries are used when it is non-zero.
PreparedSet prepare_dataset(const std::filesystem::path& dir, const Charset& charset,
                            const NormalizationPolicy& policy, int width_downsampling,
                            std::size_t max_lines = 0);

/// Augments (when `aug` is given) and zero-pads the selected lines into one
/// batch. Slot i draws its distortions from Rng(aug_seed, "slot", i).
Batch assemble_batch(std::span<const PreparedLine> lines, std::span<const std::size_t> indices,
                     const AugmentConfig* aug, const TextureBank* bank, std::uint64_t aug_seed);

/// Lines sorted by width and cut into consecutive groups; used for evaluation.
std::vector<std::vector<std::size_t>> width_sorted_batches(std::span<const PreparedLine> lines,
                                                           int batch_size);

/// Share of padded cells over all batch cells.
double padding_fraction(std::span<const PreparedLine> lines,
                        std::span<const std::vector<std::size_t>> batches);

/// Training batch stream. Lines are bucketed by width; every epoch shuffles
/// within buckets, cuts batches, and shuffles the batch order. Batch t is a
/// pure function of (seed, t), so a resumed run sees the same sequence.
class BucketBatcher {
 public:
  static constexpr int kBucketWidth = 32;

  BucketBatcher(std::span<const PreparedLine> lines, int batch_size, std::uint64_t seed,
                std::optional<AugmentConfig> aug = std::nullopt, const TextureBank* bank = nullptr);

  std::size_t batches_per_epoch() const { return batches_per_epoch_; }
  /// Index groups of one epoch.
  std::vector<std::vector<std::size_t>> epoch_plan(std::int64_t epoch) const;
  /// Batch for training iteration t >= 1.
  Batch batch(std::int64_t iteration);

 private:
  std::span<const PreparedLine> lines_;
  int batch_size_;
  std::uint64_t seed_;
  std::optional<AugmentConfig> aug_;
  const TextureBank* bank_;
  std::vector<std::vector<std::size_t>> buckets_;
  std::size_t batches_per_epoch_ = 0;
  std::int64_t cached_epoch_ = -1;
  std::vector<std::vector<std::size_t>> cached_plan_;
};

}  // namespace lineocr
