// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "lineocr/charset.hpp"
#include "lineocr/nn/tensor.hpp"

namespace lineocr {

/// Network input. Pixel p maps to (255 - p) / 255 so that white background
/// and zero padding coincide.
struct Batch {
  nn::Tensor<float> images;          // [B, 1, H, W_max]
  std::vector<int> widths;           // valid columns per sample
  std::vector<LabelSeq> labels;
  std::vector<std::size_t> sample_ids;

  int size() const { return static_cast<int>(widths.size()); }
  int max_width() const { return images.rank() == 4 ? images.dim(3) : 0; }
};

}  // namespace lineocr
