// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lineocr/nn/tensor.hpp"
#include "lineocr/rng.hpp"

namespace lineocr::nn {

enum class Mode { Train, Infer };

/// A trainable tensor with its gradient and Adam moment estimates.
template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> moment1;
  Tensor<T> moment2;

  Param() = default;
  Param(std::string n, Tensor<T> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(value.shape()),
        moment1(value.shape()),
        moment2(value.shape()) {}
};

// ---------------------------------------------------------------------------
// Functional ops. Layouts: images [N, C, H, W]; sequences [T, N, F].

struct Conv2dGeometry {
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;
};

/// floor((in + 2 pad - k) / stride) + 1
int conv_output_size(int in, int kernel, int stride, int pad);

template <typename T>
struct Conv2dGrads {
  Tensor<T> dx;
  Tensor<T> dw;
  Tensor<T> db;
};

/// Cross-correlation of x [N,C,H,W] with w [O,C,kh,kw] plus bias [O].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const Conv2dGeometry& g);
template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Conv2dGeometry& g,
                               const Tensor<T>& dy);

/// Max pooling with TensorFlow "SAME" semantics: the output is
/// ceil(in / stride) along each axis and any padding goes to the bottom and
/// right. Padded cells never win. For the window/stride pairs used by the
/// models and even input sizes this equals unpadded pooling.
struct PoolGeometry {
  int window_h = 2;
  int window_w = 2;
  int stride_h = 2;
  int stride_w = 2;
};

int pool_output_size(int in, int stride);

template <typename T>
struct PoolResult {
  Tensor<T> y;
  std::vector<std::int32_t> argmax;  // flat input offset per output element
};

/// Ties go to the first maximum in row-major window order.
template <typename T>
PoolResult<T> maxpool2d(const Tensor<T>& x, const PoolGeometry& g);
template <typename T>
Tensor<T> maxpool2d_backward(const Shape& x_shape, const std::vector<std::int32_t>& argmax,
                             const Tensor<T>& dy);

struct BatchNormConfig {
  double momentum = 0.9;
  double epsilon = 1e-5;
};

template <typename T>
struct BatchNormCache {
  Tensor<T> xhat;
  std::vector<T> inv_std;
};

template <typename T>
struct BatchNormGrads {
  Tensor<T> dx;
  Tensor<T> dgamma;
  Tensor<T> dbeta;
};

/// Per-channel normalization of x [N,C,H,W] (or [N,C]). Train mode uses the
/// biased batch variance and folds it into the running statistics.
template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                    const BatchNormConfig& cfg, BatchNormCache<T>* cache = nullptr);
/// Exact gradient of the train-mode transform.
template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& dy, const Tensor<T>& gamma,
                                     const BatchNormCache<T>& cache);

/// Inverted dropout. `mask` receives 0 or 1/(1-rate) per element.
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng,
                  std::vector<T>* mask = nullptr);
template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const std::vector<T>& mask);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy);

template <typename T>
struct LinearGrads {
  Tensor<T> dx;
  Tensor<T> dw;
  Tensor<T> db;
};

/// Affine map over the last axis: x [..., F], w [O, F], b [O] -> [..., O].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);
template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy);

template <typename T>
Tensor<T> softmax(const Tensor<T>& x);
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& dy);
template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x);
template <typename T>
Tensor<T> log_softmax_backward(const Tensor<T>& y, const Tensor<T>& dy);

/// [N, C, H, W] -> [W, N, C*H]. Column w becomes step w; the feature index
/// of (c, h) is c * H + h.
template <typename T>
Tensor<T> map_to_sequence(const Tensor<T>& x);
template <typename T>
Tensor<T> map_to_sequence_backward(const Tensor<T>& dy, const Shape& x_shape);

// ---------------------------------------------------------------------------
// Stateful layers: each caches what its backward pass needs and accumulates
// parameter gradients into Param::grad.

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;
  virtual std::vector<Param<T>*> params() { return {}; }
  virtual std::vector<std::pair<std::string, Tensor<T>*>> buffers() { return {}; }
  virtual std::string description() const = 0;
};

/// Conv2d followed by batch norm and ReLU: one convolutional block.
template <typename T>
class ConvBlock final : public Layer<T> {
 public:
  ConvBlock(std::string name, int in_channels, int out_channels, int kernel,
            Conv2dGeometry geometry, Rng& init_rng, BatchNormConfig bn = {});

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::vector<Param<T>*> params() override { return {&weight, &bias, &gamma, &beta}; }
  std::vector<std::pair<std::string, Tensor<T>*>> buffers() override;
  std::string description() const override;

  Param<T> weight;
  Param<T> bias;
  Param<T> gamma;
  Param<T> beta;
  Tensor<T> running_mean;
  Tensor<T> running_var;

 private:
  std::string name_;
  int kernel_;
  Conv2dGeometry geometry_;
  BatchNormConfig bn_;
  Shape input_shape_;
  std::vector<T> cols_;
  BatchNormCache<T> bn_cache_;
  Tensor<T> output_;
  Mode last_mode_ = Mode::Infer;
};

template <typename T>
class MaxPool final : public Layer<T> {
 public:
  explicit MaxPool(PoolGeometry g) : geometry_(g) {}
  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  Tensor<T> backward(const Tensor<T>& dy) override;
  std::string description() const override;

 private:
  PoolGeometry geometry_;
  Shape input_shape_;
  std::vector<std::int32_t> argmax_;
};

template <typename T>
class Linear {
 public:
  Linear(std::string name, int in_features, int out_features, Rng& init_rng);
  Tensor<T> forward(const Tensor<T>& x);
  Tensor<T> backward(const Tensor<T>& dy);
  std::vector<Param<T>*> params() { return {&weight, &bias}; }

  Param<T> weight;
  Param<T> bias;

 private:
  Tensor<T> input_;
};

/// Uniform in [-bound, bound].
template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng);

}  // namespace lineocr::nn
