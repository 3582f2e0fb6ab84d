// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/nn/optim.hpp"

#include <cmath>

namespace lineocr::nn {

void OptimizerConfig::validate() const {
  if (!(decay_factor > 0.0 && decay_factor <= 1.0) || decay_every < 1 || !(beta1 >= 0.0 && beta1 < 1.0) ||
      !(beta2 >= 0.0 && beta2 < 1.0) || !(lr0 >= 0.0) || !(epsilon > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "optimizer configuration out of range");
  }
}

double learning_rate(const OptimizerConfig& cfg, std::int64_t iteration) {
  const auto periods = static_cast<double>(iteration / cfg.decay_every);
  return cfg.lr0 * std::pow(cfg.decay_factor, periods);
}

template <typename T>
double clip_global_norm(std::span<Param<T>* const> params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params) {
    for (T g : p->grad.values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const T scale = static_cast<T>(max_norm / norm);
    for (auto* p : params) {
      for (T& g : p->grad.values()) g *= scale;
    }
  }
  return norm;
}

template <typename T>
void adam_step(std::span<Param<T>* const> params, const OptimizerConfig& cfg,
               std::int64_t iteration) {
  if (iteration < 1) throw Error(ErrorCode::InvalidArgument, "adam iteration must be >= 1");
  const double lr = learning_rate(cfg, iteration);
  const double t = static_cast<double>(iteration);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  for (auto* p : params) {
    T* v = p->value.data();
    const T* g = p->grad.data();
    T* m1 = p->moment1.data();
    T* m2 = p->moment2.data();
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      m1[i] = b1 * m1[i] + (T(1) - b1) * g[i];
      m2[i] = b2 * m2[i] + (T(1) - b2) * g[i] * g[i];
      const double m_hat = m1[i] / correction1;
      const double v_hat = m2[i] / correction2;
      v[i] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
    }
  }
}

template double clip_global_norm<float>(std::span<Param<float>* const>, double);
template double clip_global_norm<double>(std::span<Param<double>* const>, double);
template void adam_step<float>(std::span<Param<float>* const>, const OptimizerConfig&, std::int64_t);
template void adam_step<double>(std::span<Param<double>* const>, const OptimizerConfig&, std::int64_t);

}  // namespace lineocr::nn
