// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lineocr/charset.hpp"
#include "lineocr/nn/tensor.hpp"

namespace lineocr::ctc {

template <typename T>
struct CtcResult {
  /// Mean over the batch of -log p(label | x); +inf if any sample is infeasible.
  double loss = 0.0;
  std::vector<double> per_sample_nll;
  /// d loss / d log_probs, same shape as the input. Zero for infeasible samples.
  nn::Tensor<T> grad;
  std::vector<std::size_t> infeasible;
};

struct CtcOptions {
  /// Checks that each valid frame of exp(log_probs) sums to 1 within 1e-5.
  bool check_normalization = true;
};

/// Smallest number of frames that can emit `labels`: one per label plus one
/// blank between every adjacent repeated pair.
int min_frames(std::span<const Label> labels);

/// CTC negative log-likelihood via log-space forward-backward over the
/// blank-interleaved label (length 2L + 1), blank = class 0.
/// log_probs: [T, N, K]; input_lengths and labels have one entry per sample.
/// Throws ShapeMismatch / InvalidLabel on malformed input. Infeasible samples
/// are reported in the result, not thrown.
template <typename T>
CtcResult<T> ctc_loss(const nn::Tensor<T>& log_probs, std::span<const int> input_lengths,
                      std::span<const LabelSeq> labels, const CtcOptions& options = {});

/// Exhaustive sum over all K^T frame paths of the product probability of the
/// paths collapsing to `label`. probs: [T, K]. Throws CapExceeded beyond
/// T = 10 or 2e7 paths.
double brute_force_alignment_prob(const nn::Tensor<double>& probs, std::span<const Label> label);

/// Removes consecutive repeats, then blanks.
LabelSeq collapse(std::span<const Label> path);

/// Per-frame argmax (ties go to the lowest class) for one sample.
template <typename T>
std::vector<Label> best_path(const nn::Tensor<T>& log_probs, int sample, int length);

/// Best-path decoding of [T, N, K] scores.
template <typename T>
std::vector<LabelSeq> greedy_decode(const nn::Tensor<T>& log_probs,
                                    std::span<const int> input_lengths);

}  // namespace lineocr::ctc
