// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "lineocr/nn/layers.hpp"

namespace lineocr::nn {

struct OptimizerConfig {
  double lr0 = 0.0006;
  double decay_factor = 0.99;
  std::int64_t decay_every = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 10.0;  // <= 0 disables clipping

  void validate() const;
};

/// Step-decayed rate lr0 * decay_factor^floor(t / decay_every).
double learning_rate(const OptimizerConfig& cfg, std::int64_t iteration);

/// Global L2 norm of all gradients; rescales them in place when it exceeds
/// `max_norm`. Returns the norm before clipping.
template <typename T>
double clip_global_norm(std::span<Param<T>* const> params, double max_norm);

/// One bias-corrected Adam update at iteration t >= 1 using learning_rate(t).
template <typename T>
void adam_step(std::span<Param<T>* const> params, const OptimizerConfig& cfg,
               std::int64_t iteration);

template <typename T>
void zero_grads(std::span<Param<T>* const> params) {
  for (auto* p : params) p->grad.zero();
}

}  // namespace lineocr::nn
