// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/linepipe.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "lineocr/ctc.hpp"

namespace lineocr {

using ordered_json = nlohmann::ordered_json;

void NormalizationPolicy::validate() const {
  if (target_height < 1 || target_x_height <= 0 || target_x_height >= target_height) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < target_x_height < target_height");
  }
  if (baseline_row < target_x_height || baseline_row > target_height) {
    throw Error(ErrorCode::InvalidConfig, "baseline_row must leave room for the x-height");
  }
}

std::string NormalizationPolicy::to_json() const {
  ordered_json j;
  j["enabled"] = enabled;
  j["target_height"] = target_height;
  j["target_x_height"] = target_x_height;
  j["baseline_row"] = baseline_row;
  return j.dump();
}

NormalizationPolicy NormalizationPolicy::from_json(std::string_view text) {
  NormalizationPolicy p;
  try {
    const auto j = ordered_json::parse(text);
    for (const auto& [key, v] : j.items()) {
      if (key == "enabled") p.enabled = v.get<bool>();
      else if (key == "target_height") p.target_height = v.get<int>();
      else if (key == "target_x_height") p.target_x_height = v.get<int>();
      else if (key == "baseline_row") p.baseline_row = v.get<int>();
      else throw Error(ErrorCode::InvalidConfig, "unknown normalization key '" + key + "'");
    }
  } catch (const ordered_json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("normalization policy: ") + e.what());
  }
  p.validate();
  return p;
}

GrayImage normalize_geometry(const TextLineSample& sample, const NormalizationPolicy& policy) {
  policy.validate();
  const GrayImage& img = sample.image;
  if (img.empty()) throw Error(ErrorCode::DegenerateGeometry, "empty line image");
  const double xh = sample.x_height;
  const double yl = sample.baseline.y_left, yr = sample.baseline.y_right;
  if (!(xh > 0.0) || !std::isfinite(xh) || !std::isfinite(yl) || !std::isfinite(yr)) {
    throw Error(ErrorCode::DegenerateGeometry, "x-height must be positive and finite");
  }
  const double theta = std::atan((yr - yl) / img.width);
  const double s = policy.target_x_height / xh;
  const double c = std::cos(theta), sn = std::sin(theta);
  const double out_w = std::round(s * img.width / c);
  if (out_w < 1.0 || out_w > 1e6) {
    throw Error(ErrorCode::DegenerateGeometry, "scaled line width out of range");
  }
  // Continuous edge coordinates: (u, v) in the output maps to a point
  // measured along and across the baseline from its left end.
  GrayImage out(static_cast<int>(out_w), policy.target_height);
  for (int v = 0; v < out.height; ++v) {
    const double across = (v + 0.5 - policy.baseline_row) / s;
    for (int u = 0; u < out.width; ++u) {
      const double along = (u + 0.5) / s;
      const double sx = along * c - across * sn;
      const double sy = yl + along * sn + across * c;
      out.at(u, v) = clamp_to_u8(sample_bilinear_fill(img, sx - 0.5, sy - 0.5, 255.0));
    }
  }
  return out;
}

GrayImage rescale_to_height(const GrayImage& img, int target_height) {
  if (img.empty()) throw Error(ErrorCode::InvalidArgument, "cannot rescale an empty image");
  if (img.height == target_height) return img;
  const int w = std::max(1, static_cast<int>(std::lround(static_cast<double>(img.width) *
                                                         target_height / img.height)));
  return resize_bilinear(img, w, target_height);
}

GrayImage prepare_image(const TextLineSample& sample, const NormalizationPolicy& policy) {
  if (policy.enabled) return normalize_geometry(sample, policy);
  return rescale_to_height(sample.image, policy.target_height);
}

void check_feasible(int width, const LabelSeq& labels, int width_downsampling) {
  const int frames = (width + width_downsampling - 1) / width_downsampling;
  const int need = ctc::min_frames(labels);
  if (labels.empty() || frames < need) {
    throw Error(ErrorCode::SampleTooNarrow,
                std::to_string(frames) + " frames for a label needing " + std::to_string(need));
  }
}

PreparedSet prepare_samples(std::span<const TextLineSample> samples, const Charset& charset,
                            const NormalizationPolicy& policy, int width_downsampling,
                            std::size_t first_id) {
  PreparedSet set;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::size_t id = first_id + i;
    try {
      PreparedLine line;
      line.labels = charset.encode_utf8(samples[i].transcript);
      line.image = prepare_image(samples[i], policy);
      check_feasible(line.image.width, line.labels, width_downsampling);
      line.id = id;
      set.lines.push_back(std::move(line));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SampleTooNarrow && e.code() != ErrorCode::UnknownSymbol &&
          e.code() != ErrorCode::DegenerateGeometry) {
        throw;
      }
      set.skipped.push_back({id, e.code(), e.what()});
    }
  }
  return set;
}

PreparedSet prepare_dataset(const std::filesystem::path& dir, const Charset& charset,
                            const NormalizationPolicy& policy, int width_downsampling,
                            std::size_t max_lines) {
  auto entries = load_dataset(dir);
  if (max_lines > 0 && entries.size() > max_lines) entries.resize(max_lines);
  std::vector<TextLineSample> samples;
  samples.reserve(entries.size());
  for (auto& e : entries) samples.push_back(std::move(e.sample));
  PreparedSet set = prepare_samples(samples, charset, policy, width_downsampling);
  for (auto& line : set.lines) line.id = static_cast<std::size_t>(entries[line.id].id);
  for (auto& s : set.skipped) s.id = static_cast<std::size_t>(entries[s.id].id);
  return set;
}

Batch assemble_batch(std::span<const PreparedLine> lines, std::span<const std::size_t> indices,
                     const AugmentConfig* aug, const TextureBank* bank, std::uint64_t aug_seed) {
  if (indices.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  std::vector<GrayImage> images;
  images.reserve(indices.size());
  int h = -1, w_max = 0;
  for (std::size_t slot = 0; slot < indices.size(); ++slot) {
    const PreparedLine& line = lines[indices[slot]];
    if (aug) {
      Rng rng(aug_seed, "slot", slot);
      images.push_back(augment_line(line.image, *aug, bank, rng));
    } else {
      images.push_back(line.image);
    }
    if (h >= 0 && images.back().height != h) {
      throw Error(ErrorCode::ShapeMismatch, "lines in a batch must share one height");
    }
    h = images.back().height;
    w_max = std::max(w_max, images.back().width);
  }
  Batch b;
  const int n = static_cast<int>(indices.size());
  b.images = nn::Tensor<float>({n, 1, h, w_max});
  for (int i = 0; i < n; ++i) {
    const GrayImage& img = images[static_cast<std::size_t>(i)];
    float* dst = b.images.data() + static_cast<std::size_t>(i) * h * w_max;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < img.width; ++x) {
        dst[static_cast<std::size_t>(y) * w_max + x] = pixel_to_input(img.at(x, y));
      }
    }
    const PreparedLine& line = lines[indices[static_cast<std::size_t>(i)]];
    b.widths.push_back(img.width);
    b.labels.push_back(line.labels);
    b.sample_ids.push_back(line.id);
  }
  return b;
}

std::vector<std::vector<std::size_t>> width_sorted_batches(std::span<const PreparedLine> lines,
                                                           int batch_size) {
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  std::vector<std::size_t> order(lines.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lines[a].image.width < lines[b].image.width;
  });
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size)) {
    const auto end = std::min(order.size(), i + static_cast<std::size_t>(batch_size));
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

double padding_fraction(std::span<const PreparedLine> lines,
                        std::span<const std::vector<std::size_t>> batches) {
  double padded = 0.0, total = 0.0;
  for (const auto& b : batches) {
    int w_max = 0;
    for (auto i : b) w_max = std::max(w_max, lines[i].image.width);
    for (auto i : b) {
      padded += w_max - lines[i].image.width;
      total += w_max;
    }
  }
  return total > 0.0 ? padded / total : 0.0;
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

BucketBatcher::BucketBatcher(std::span<const PreparedLine> lines, int batch_size,
                             std::uint64_t seed, std::optional<AugmentConfig> aug,
                             const TextureBank* bank)
    : lines_(lines), batch_size_(batch_size), seed_(seed), aug_(std::move(aug)), bank_(bank) {
  if (batch_size < 1) throw Error(ErrorCode::InvalidArgument, "batch_size must be >= 1");
  if (lines.empty()) throw Error(ErrorCode::InvalidArgument, "no lines to batch");
  if (aug_) aug_->validate();
  std::map<int, std::vector<std::size_t>> by_bucket;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    by_bucket[(lines[i].image.width - 1) / kBucketWidth].push_back(i);
  }
  for (auto& [key, members] : by_bucket) {
    batches_per_epoch_ += (members.size() + static_cast<std::size_t>(batch_size) - 1) /
                          static_cast<std::size_t>(batch_size);
    buckets_.push_back(std::move(members));
  }
}

std::vector<std::vector<std::size_t>> BucketBatcher::epoch_plan(std::int64_t epoch) const {
  Rng rng(seed_, "batching", static_cast<std::uint64_t>(epoch));
  std::vector<std::vector<std::size_t>> plan;
  for (auto bucket : buckets_) {
    shuffle(bucket, rng);
    for (std::size_t i = 0; i < bucket.size(); i += static_cast<std::size_t>(batch_size_)) {
      const auto end = std::min(bucket.size(), i + static_cast<std::size_t>(batch_size_));
      plan.emplace_back(bucket.begin() + static_cast<std::ptrdiff_t>(i),
                        bucket.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }
  shuffle(plan, rng);
  return plan;
}

Batch BucketBatcher::batch(std::int64_t iteration) {
  if (iteration < 1) throw Error(ErrorCode::InvalidArgument, "iterations start at 1");
  const auto per_epoch = static_cast<std::int64_t>(batches_per_epoch_);
  const std::int64_t epoch = (iteration - 1) / per_epoch;
  if (epoch != cached_epoch_) {
    cached_plan_ = epoch_plan(epoch);
    cached_epoch_ = epoch;
  }
  const auto& indices = cached_plan_[static_cast<std::size_t>((iteration - 1) % per_epoch)];
  return assemble_batch(lines_, indices, aug_ ? &*aug_ : nullptr, bank_,
                        derive_seed(seed_, "augment", static_cast<std::uint64_t>(iteration)));
}

}  // namespace lineocr
