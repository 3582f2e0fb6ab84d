// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "lineocr/charset.hpp"
#include "lineocr/linepipe.hpp"
#include "lineocr/models.hpp"

namespace lineocr {

struct Recognition {
  std::string text;          // UTF-8
  std::vector<Label> trace;  // per-frame argmax
};

/// Binds a model to the charset it was trained with.
class Recognizer {
 public:
  /// Throws ChecksumMismatch when the charset does not match the fingerprint
  /// stored with the model or its class count.
  Recognizer(Model& model, std::string_view model_fingerprint, const Charset& charset,
             NormalizationPolicy policy);

  /// Geometry-aware path: normalizes using the sample's baseline metadata.
  Recognition recognize(const TextLineSample& sample);
  /// Bare image without metadata: rescaled to the model height only.
  Recognition recognize(const GrayImage& image);
  /// Lines that are already at model height.
  std::vector<Recognition> recognize_prepared(std::span<const GrayImage> images);

  Model& model() { return model_; }
  const Charset& charset() const { return charset_; }

 private:
  Model& model_;
  Charset charset_;
  NormalizationPolicy policy_;
};

}  // namespace lineocr
