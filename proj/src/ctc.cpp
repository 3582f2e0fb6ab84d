// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/ctc.hpp"

#include <cmath>
#include <limits>

namespace lineocr::ctc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

int min_frames(std::span<const Label> labels) {
  int frames = static_cast<int>(labels.size());
  for (std::size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++frames;
  }
  return frames;
}

template <typename T>
CtcResult<T> ctc_loss(const nn::Tensor<T>& log_probs, std::span<const int> input_lengths,
                      std::span<const LabelSeq> labels, const CtcOptions& options) {
  nn::require_rank(log_probs.shape(), 3, "ctc log_probs");
  const int frames = log_probs.dim(0), batch = log_probs.dim(1), classes = log_probs.dim(2);
  if (input_lengths.size() != static_cast<std::size_t>(batch) ||
      labels.size() != static_cast<std::size_t>(batch)) {
    throw Error(ErrorCode::ShapeMismatch, "ctc: need one input length and label per sample");
  }
  CtcResult<T> result;
  result.grad = nn::Tensor<T>(log_probs.shape());
  result.per_sample_nll.assign(static_cast<std::size_t>(batch), 0.0);
  auto lp = [&](int t, int n, int k) -> double { return log_probs.at(t, n, k); };

  std::vector<double> alpha, beta;
  double total = 0.0;
  for (int n = 0; n < batch; ++n) {
    const int len = input_lengths[static_cast<std::size_t>(n)];
    const LabelSeq& label = labels[static_cast<std::size_t>(n)];
    if (len < 0 || len > frames) {
      throw Error(ErrorCode::ShapeMismatch, "ctc: input length exceeds frame count", static_cast<std::size_t>(n));
    }
    for (Label l : label) {
      if (l < 1 || l >= classes) {
        throw Error(ErrorCode::InvalidLabel, "ctc: label " + std::to_string(l) + " out of range",
                    static_cast<std::size_t>(n));
      }
    }
    if (options.check_normalization) {
      for (int t = 0; t < len; ++t) {
        double s = 0.0;
        for (int k = 0; k < classes; ++k) s += std::exp(lp(t, n, k));
        if (std::abs(s - 1.0) > 1e-5) {
          throw Error(ErrorCode::InvalidArgument, "ctc: frame probabilities do not sum to 1",
                      static_cast<std::size_t>(n));
        }
      }
    }
    if (len < min_frames(label)) {
      result.infeasible.push_back(static_cast<std::size_t>(n));
      result.per_sample_nll[static_cast<std::size_t>(n)] = std::numeric_limits<double>::infinity();
      continue;
    }
    const int s_len = 2 * static_cast<int>(label.size()) + 1;
    auto ext = [&](int s) -> Label { return (s % 2 == 0) ? Charset::kBlank : label[static_cast<std::size_t>(s / 2)]; };
    // Skip transition s-2 -> s allowed when s is a label that differs from s-2.
    auto can_skip = [&](int s) { return s >= 2 && s % 2 == 1 && ext(s) != ext(s - 2); };

    alpha.assign(static_cast<std::size_t>(len) * s_len, kNegInf);
    beta.assign(static_cast<std::size_t>(len) * s_len, kNegInf);
    auto A = [&](int t, int s) -> double& { return alpha[static_cast<std::size_t>(t) * s_len + s]; };
    auto B = [&](int t, int s) -> double& { return beta[static_cast<std::size_t>(t) * s_len + s]; };

    double log_likelihood = kNegInf;
    if (len == 0) {
      log_likelihood = label.empty() ? 0.0 : kNegInf;
    } else {
      A(0, 0) = lp(0, n, Charset::kBlank);
      if (s_len > 1) A(0, 1) = lp(0, n, ext(1));
      for (int t = 1; t < len; ++t) {
        for (int s = 0; s < s_len; ++s) {
          double v = A(t - 1, s);
          if (s >= 1) v = log_add(v, A(t - 1, s - 1));
          if (can_skip(s)) v = log_add(v, A(t - 1, s - 2));
          A(t, s) = v == kNegInf ? kNegInf : v + lp(t, n, ext(s));
        }
      }
      // beta excludes the emission at its own frame.
      B(len - 1, s_len - 1) = 0.0;
      if (s_len > 1) B(len - 1, s_len - 2) = 0.0;
      for (int t = len - 2; t >= 0; --t) {
        for (int s = 0; s < s_len; ++s) {
          double v = B(t + 1, s) + lp(t + 1, n, ext(s));
          if (s + 1 < s_len) v = log_add(v, B(t + 1, s + 1) + lp(t + 1, n, ext(s + 1)));
          if (s + 2 < s_len && can_skip(s + 2)) {
            v = log_add(v, B(t + 1, s + 2) + lp(t + 1, n, ext(s + 2)));
          }
          B(t, s) = v;
        }
      }
      log_likelihood = A(len - 1, s_len - 1);
      if (s_len > 1) log_likelihood = log_add(log_likelihood, A(len - 1, s_len - 2));
    }
    if (log_likelihood == kNegInf) {
      result.infeasible.push_back(static_cast<std::size_t>(n));
      result.per_sample_nll[static_cast<std::size_t>(n)] = std::numeric_limits<double>::infinity();
      continue;
    }
    result.per_sample_nll[static_cast<std::size_t>(n)] = -log_likelihood;
    total += -log_likelihood;
    // d(-log p)/d log_probs[t, k] = -sum_{s: ext(s)=k} alpha_t(s) beta_t(s) / p
    const double scale = 1.0 / batch;
    for (int t = 0; t < len; ++t) {
      for (int s = 0; s < s_len; ++s) {
        const double occ = A(t, s) + B(t, s) - log_likelihood;
        if (occ == kNegInf) continue;
        result.grad.at(t, n, ext(s)) -= static_cast<T>(std::exp(occ) * scale);
      }
    }
  }
  result.loss = result.infeasible.empty() ? total / batch : std::numeric_limits<double>::infinity();
  return result;
}

double brute_force_alignment_prob(const nn::Tensor<double>& probs, std::span<const Label> label) {
  nn::require_rank(probs.shape(), 2, "alignment probs");
  const int frames = probs.dim(0), classes = probs.dim(1);
  if (frames > 10 || std::pow(static_cast<double>(classes), frames) > 2e7) {
    throw Error(ErrorCode::CapExceeded, "brute-force enumeration limited to T <= 10 and 2e7 paths");
  }
  std::vector<Label> path(static_cast<std::size_t>(frames), 0);
  const LabelSeq target(label.begin(), label.end());
  double total = 0.0;
  while (true) {
    if (collapse(path) == target) {
      double p = 1.0;
      for (int t = 0; t < frames; ++t) p *= probs.at(t, path[static_cast<std::size_t>(t)]);
      total += p;
    }
    int t = frames - 1;
    while (t >= 0 && ++path[static_cast<std::size_t>(t)] == classes) {
      path[static_cast<std::size_t>(t)] = 0;
      --t;
    }
    if (t < 0) break;
  }
  return total;
}

LabelSeq collapse(std::span<const Label> path) {
  LabelSeq out;
  Label prev = -1;
  for (Label l : path) {
    if (l != prev && l != Charset::kBlank) out.push_back(l);
    prev = l;
  }
  return out;
}

template <typename T>
std::vector<Label> best_path(const nn::Tensor<T>& log_probs, int sample, int length) {
  const int classes = log_probs.dim(2);
  std::vector<Label> path(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    Label best = 0;
    T best_v = log_probs.at(t, sample, 0);
    for (int k = 1; k < classes; ++k) {
      const T v = log_probs.at(t, sample, k);
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    path[static_cast<std::size_t>(t)] = best;
  }
  return path;
}

template <typename T>
std::vector<LabelSeq> greedy_decode(const nn::Tensor<T>& log_probs,
                                    std::span<const int> input_lengths) {
  nn::require_rank(log_probs.shape(), 3, "greedy_decode log_probs");
  const int batch = log_probs.dim(1);
  if (input_lengths.size() != static_cast<std::size_t>(batch)) {
    throw Error(ErrorCode::ShapeMismatch, "greedy_decode: one length per sample required");
  }
  std::vector<LabelSeq> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (int n = 0; n < batch; ++n) {
    const int len = std::min(input_lengths[static_cast<std::size_t>(n)], log_probs.dim(0));
    out.push_back(collapse(best_path(log_probs, n, len)));
  }
  return out;
}

template CtcResult<float> ctc_loss<float>(const nn::Tensor<float>&, std::span<const int>,
                                          std::span<const LabelSeq>, const CtcOptions&);
template CtcResult<double> ctc_loss<double>(const nn::Tensor<double>&, std::span<const int>,
                                            std::span<const LabelSeq>, const CtcOptions&);
template std::vector<Label> best_path<float>(const nn::Tensor<float>&, int, int);
template std::vector<Label> best_path<double>(const nn::Tensor<double>&, int, int);
template std::vector<LabelSeq> greedy_decode<float>(const nn::Tensor<float>&, std::span<const int>);
template std::vector<LabelSeq> greedy_decode<double>(const nn::Tensor<double>&, std::span<const int>);

}  // namespace lineocr::ctc
