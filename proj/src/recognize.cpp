// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/recognize.hpp"

#include <numeric>

#include "lineocr/ctc.hpp"

namespace lineocr {

Recognizer::Recognizer(Model& model, std::string_view model_fingerprint, const Charset& charset,
                       NormalizationPolicy policy)
    : model_(model), charset_(charset), policy_(policy) {
  if (charset.fingerprint() != model_fingerprint) {
    throw Error(ErrorCode::ChecksumMismatch, "charset fingerprint differs from the model's");
  }
  if (charset.num_classes() != model.spec().num_classes) {
    throw Error(ErrorCode::ChecksumMismatch, "charset size does not match the model output");
  }
  policy_.validate();
  if (policy_.target_height != model.spec().input_height) {
    throw Error(ErrorCode::InvalidConfig, "normalization height differs from the model input");
  }
}

Recognition Recognizer::recognize(const TextLineSample& sample) {
  const GrayImage img = prepare_image(sample, policy_);
  return recognize_prepared(std::span<const GrayImage>(&img, 1)).front();
}

Recognition Recognizer::recognize(const GrayImage& image) {
  const GrayImage img = rescale_to_height(image, policy_.target_height);
  return recognize_prepared(std::span<const GrayImage>(&img, 1)).front();
}

std::vector<Recognition> Recognizer::recognize_prepared(std::span<const GrayImage> images) {
  std::vector<PreparedLine> lines;
  lines.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) lines.push_back({images[i], {}, i});
  std::vector<std::size_t> idx(images.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const Batch batch = assemble_batch(lines, idx, nullptr, nullptr, 0);
  const auto log_probs = model_.forward(batch.images, batch.widths, nn::Mode::Infer);
  const auto lengths = model_.output_lengths(batch.widths);
  std::vector<Recognition> out;
  for (int i = 0; i < batch.size(); ++i) {
    Recognition r;
    r.trace = ctc::best_path(log_probs, i, lengths[static_cast<std::size_t>(i)]);
    r.text = charset_.decode_utf8(ctc::collapse(r.trace));
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace lineocr
