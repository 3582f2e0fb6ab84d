// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/nn/layers.hpp"

#include <cmath>
#include <limits>

namespace lineocr::nn {

int conv_output_size(int in, int kernel, int stride, int pad) {
  const int span = in + 2 * pad - kernel;
  if (span < 0 || stride < 1) {
    throw Error(ErrorCode::ShapeMismatch, "kernel " + std::to_string(kernel) +
                                              " does not fit padded input " + std::to_string(in));
  }
  return span / stride + 1;
}

int pool_output_size(int in, int stride) { return (in + stride - 1) / stride; }

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

namespace {

struct ConvDims {
  int n, c, h, w, o, kh, kw, ho, wo;
  std::size_t patch() const { return static_cast<std::size_t>(c) * kh * kw; }
  std::size_t positions() const { return static_cast<std::size_t>(n) * ho * wo; }
};

template <typename T>
ConvDims conv_dims(const Shape& xs, const Shape& ws, const Conv2dGeometry& g) {
  require_rank(xs, 4, "conv2d input");
  require_rank(ws, 4, "conv2d weights");
  if (xs[1] != ws[1]) {
    throw Error(ErrorCode::ShapeMismatch, "conv2d channel mismatch: input " + shape_string(xs) +
                                              ", weights " + shape_string(ws));
  }
  ConvDims d{xs[0], xs[1], xs[2], xs[3], ws[0], ws[2], ws[3], 0, 0};
  d.ho = conv_output_size(d.h, d.kh, g.stride_h, g.pad_h);
  d.wo = conv_output_size(d.w, d.kw, g.stride_w, g.pad_w);
  return d;
}

// cols[(c*kh + i)*kw + j][n*ho*wo + oh*wo + ow] = x[n, c, oh*sh - ph + i, ow*sw - pw + j]
template <typename T>
void im2col(const T* x, const ConvDims& d, const Conv2dGeometry& g, std::vector<T>& cols) {
  const std::size_t npos = d.positions();
  cols.assign(d.patch() * npos, T(0));
  for (int c = 0; c < d.c; ++c) {
    for (int i = 0; i < d.kh; ++i) {
      for (int j = 0; j < d.kw; ++j) {
        T* row = cols.data() + ((static_cast<std::size_t>(c) * d.kh + i) * d.kw + j) * npos;
        for (int n = 0; n < d.n; ++n) {
          const T* plane = x + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w;
          for (int oh = 0; oh < d.ho; ++oh) {
            const int ih = oh * g.stride_h - g.pad_h + i;
            if (ih < 0 || ih >= d.h) continue;
            T* out = row + (static_cast<std::size_t>(n) * d.ho + oh) * d.wo;
            const T* in_row = plane + static_cast<std::size_t>(ih) * d.w;
            for (int ow = 0; ow < d.wo; ++ow) {
              const int iw = ow * g.stride_w - g.pad_w + j;
              if (iw >= 0 && iw < d.w) out[ow] = in_row[iw];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const std::vector<T>& cols, const ConvDims& d, const Conv2dGeometry& g, T* dx) {
  const std::size_t npos = d.positions();
  for (int c = 0; c < d.c; ++c) {
    for (int i = 0; i < d.kh; ++i) {
      for (int j = 0; j < d.kw; ++j) {
        const T* row = cols.data() + ((static_cast<std::size_t>(c) * d.kh + i) * d.kw + j) * npos;
        for (int n = 0; n < d.n; ++n) {
          T* plane = dx + (static_cast<std::size_t>(n) * d.c + c) * d.h * d.w;
          for (int oh = 0; oh < d.ho; ++oh) {
            const int ih = oh * g.stride_h - g.pad_h + i;
            if (ih < 0 || ih >= d.h) continue;
            const T* src = row + (static_cast<std::size_t>(n) * d.ho + oh) * d.wo;
            T* out_row = plane + static_cast<std::size_t>(ih) * d.w;
            for (int ow = 0; ow < d.wo; ++ow) {
              const int iw = ow * g.stride_w - g.pad_w + j;
              if (iw >= 0 && iw < d.w) out_row[iw] += src[ow];
            }
          }
        }
      }
    }
  }
}

template <typename T>
Tensor<T> conv_forward_cols(const std::vector<T>& cols, const ConvDims& d, const Tensor<T>& w,
                            const Tensor<T>& b) {
  const std::size_t per_image = static_cast<std::size_t>(d.ho) * d.wo;
  const int npos = static_cast<int>(d.positions());
  std::vector<T> out(static_cast<std::size_t>(d.o) * npos);
  gemm<T>(false, false, d.o, npos, static_cast<int>(d.patch()), T(1), w.data(), cols.data(), T(0),
          out.data());
  Tensor<T> y({d.n, d.o, d.ho, d.wo});
  for (int o = 0; o < d.o; ++o) {
    const T bias = b[static_cast<std::size_t>(o)];
    for (int n = 0; n < d.n; ++n) {
      const T* src = out.data() + static_cast<std::size_t>(o) * npos + n * per_image;
      T* dst = y.data() + (static_cast<std::size_t>(n) * d.o + o) * per_image;
      for (std::size_t p = 0; p < per_image; ++p) dst[p] = src[p] + bias;
    }
  }
  return y;
}

template <typename T>
Conv2dGrads<T> conv_backward_cols(const std::vector<T>& cols, const ConvDims& d,
                                  const Tensor<T>& w, const Conv2dGeometry& g,
                                  const Tensor<T>& dy) {
  const std::size_t per_image = static_cast<std::size_t>(d.ho) * d.wo;
  const int npos = static_cast<int>(d.positions());
  // Regroup dy [N, O, P] as [O, N*P] to match the column layout.
  std::vector<T> dout(static_cast<std::size_t>(d.o) * npos);
  for (int n = 0; n < d.n; ++n) {
    for (int o = 0; o < d.o; ++o) {
      const T* src = dy.data() + (static_cast<std::size_t>(n) * d.o + o) * per_image;
      std::copy(src, src + per_image, dout.data() + static_cast<std::size_t>(o) * npos + n * per_image);
    }
  }
  Conv2dGrads<T> grads{Tensor<T>({d.n, d.c, d.h, d.w}), Tensor<T>({d.o, d.c, d.kh, d.kw}),
                       Tensor<T>({d.o})};
  const int patch = static_cast<int>(d.patch());
  gemm<T>(false, true, d.o, patch, npos, T(1), dout.data(), cols.data(), T(0), grads.dw.data());
  for (int o = 0; o < d.o; ++o) {
    const T* row = dout.data() + static_cast<std::size_t>(o) * npos;
    T acc = 0;
    for (int p = 0; p < npos; ++p) acc += row[p];
    grads.db[static_cast<std::size_t>(o)] = acc;
  }
  std::vector<T> dcols(static_cast<std::size_t>(patch) * npos);
  gemm<T>(true, false, patch, npos, d.o, T(1), w.data(), dout.data(), T(0), dcols.data());
  col2im(dcols, d, g, grads.dx.data());
  return grads;
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 const Conv2dGeometry& g) {
  const ConvDims d = conv_dims<T>(x.shape(), w.shape(), g);
  if (b.size() != static_cast<std::size_t>(d.o)) {
    throw Error(ErrorCode::ShapeMismatch, "conv2d bias size mismatch");
  }
  std::vector<T> cols;
  im2col(x.data(), d, g, cols);
  return conv_forward_cols(cols, d, w, b);
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Conv2dGeometry& g,
                               const Tensor<T>& dy) {
  const ConvDims d = conv_dims<T>(x.shape(), w.shape(), g);
  std::vector<T> cols;
  im2col(x.data(), d, g, cols);
  return conv_backward_cols(cols, d, w, g, dy);
}

template <typename T>
PoolResult<T> maxpool2d(const Tensor<T>& x, const PoolGeometry& g) {
  require_rank(x.shape(), 4, "maxpool2d input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < 1 || w < 1 || g.window_h < 1 || g.window_w < 1 || g.stride_h < 1 || g.stride_w < 1) {
    throw Error(ErrorCode::ShapeMismatch, "maxpool2d: empty input or window");
  }
  const int ho = pool_output_size(h, g.stride_h);
  const int wo = pool_output_size(w, g.stride_w);
  const int pad_top = std::max((ho - 1) * g.stride_h + g.window_h - h, 0) / 2;
  const int pad_left = std::max((wo - 1) * g.stride_w + g.window_w - w, 0) / 2;
  PoolResult<T> r{Tensor<T>({n, c, ho, wo}), std::vector<std::int32_t>(static_cast<std::size_t>(n) * c * ho * wo)};
  std::size_t out = 0;
  for (int plane = 0; plane < n * c; ++plane) {
    const std::size_t base = static_cast<std::size_t>(plane) * h * w;
    for (int oh = 0; oh < ho; ++oh) {
      for (int ow = 0; ow < wo; ++ow, ++out) {
        T best = -std::numeric_limits<T>::infinity();
        std::int32_t best_at = -1;
        for (int i = 0; i < g.window_h; ++i) {
          const int ih = oh * g.stride_h - pad_top + i;
          if (ih < 0 || ih >= h) continue;
          for (int j = 0; j < g.window_w; ++j) {
            const int iw = ow * g.stride_w - pad_left + j;
            if (iw < 0 || iw >= w) continue;
            const std::size_t at = base + static_cast<std::size_t>(ih) * w + iw;
            if (best_at < 0 || x[at] > best) {
              best = x[at];
              best_at = static_cast<std::int32_t>(at);
            }
          }
        }
        r.y[out] = best;
        r.argmax[out] = best_at;
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2d_backward(const Shape& x_shape, const std::vector<std::int32_t>& argmax,
                             const Tensor<T>& dy) {
  Tensor<T> dx(x_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx[static_cast<std::size_t>(argmax[i])] += dy[i];
  return dx;
}

namespace {

struct ChannelLayout {
  int n, c, spatial;
};

ChannelLayout channel_layout(const Shape& s) {
  if (s.size() == 2) return {s[0], s[1], 1};
  require_rank(s, 4, "batchnorm input");
  return {s[0], s[1], s[2] * s[3]};
}

}  // namespace

template <typename T>
Tensor<T> batchnorm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                    Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                    const BatchNormConfig& cfg, BatchNormCache<T>* cache) {
  const ChannelLayout L = channel_layout(x.shape());
  const auto c_count = static_cast<std::size_t>(L.c);
  if (gamma.size() != c_count || beta.size() != c_count || running_mean.size() != c_count ||
      running_var.size() != c_count) {
    throw Error(ErrorCode::ShapeMismatch, "batchnorm parameter size does not match channels");
  }
  Tensor<T> y(x.shape());
  const double m = static_cast<double>(L.n) * L.spatial;
  if (cache) {
    cache->xhat = Tensor<T>(x.shape());
    cache->inv_std.assign(c_count, T(0));
  }
  for (int c = 0; c < L.c; ++c) {
    double mean, var;
    if (mode == Mode::Train) {
      double sum = 0.0;
      for (int n = 0; n < L.n; ++n) {
        const T* p = x.data() + (static_cast<std::size_t>(n) * L.c + c) * L.spatial;
        for (int s = 0; s < L.spatial; ++s) sum += p[s];
      }
      mean = sum / m;
      double sq = 0.0;
      for (int n = 0; n < L.n; ++n) {
        const T* p = x.data() + (static_cast<std::size_t>(n) * L.c + c) * L.spatial;
        for (int s = 0; s < L.spatial; ++s) sq += (p[s] - mean) * (p[s] - mean);
      }
      var = sq / m;
      running_mean[static_cast<std::size_t>(c)] = static_cast<T>(
          cfg.momentum * running_mean[static_cast<std::size_t>(c)] + (1.0 - cfg.momentum) * mean);
      running_var[static_cast<std::size_t>(c)] = static_cast<T>(
          cfg.momentum * running_var[static_cast<std::size_t>(c)] + (1.0 - cfg.momentum) * var);
    } else {
      mean = running_mean[static_cast<std::size_t>(c)];
      var = running_var[static_cast<std::size_t>(c)];
    }
    const double inv_std = 1.0 / std::sqrt(var + cfg.epsilon);
    const double gm = gamma[static_cast<std::size_t>(c)];
    const double bt = beta[static_cast<std::size_t>(c)];
    if (cache) cache->inv_std[static_cast<std::size_t>(c)] = static_cast<T>(inv_std);
    for (int n = 0; n < L.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * L.c + c) * L.spatial;
      for (int s = 0; s < L.spatial; ++s) {
        const double xh = (x[off + s] - mean) * inv_std;
        if (cache) cache->xhat[off + s] = static_cast<T>(xh);
        y[off + s] = static_cast<T>(gm * xh + bt);
      }
    }
  }
  return y;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& dy, const Tensor<T>& gamma,
                                     const BatchNormCache<T>& cache) {
  const ChannelLayout L = channel_layout(dy.shape());
  BatchNormGrads<T> g{Tensor<T>(dy.shape()), Tensor<T>({L.c}), Tensor<T>({L.c})};
  const double m = static_cast<double>(L.n) * L.spatial;
  for (int c = 0; c < L.c; ++c) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (int n = 0; n < L.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * L.c + c) * L.spatial;
      for (int s = 0; s < L.spatial; ++s) {
        sum_dy += dy[off + s];
        sum_dy_xhat += static_cast<double>(dy[off + s]) * cache.xhat[off + s];
      }
    }
    g.dgamma[static_cast<std::size_t>(c)] = static_cast<T>(sum_dy_xhat);
    g.dbeta[static_cast<std::size_t>(c)] = static_cast<T>(sum_dy);
    const double gm = gamma[static_cast<std::size_t>(c)];
    const double k = gm * cache.inv_std[static_cast<std::size_t>(c)] / m;
    for (int n = 0; n < L.n; ++n) {
      const std::size_t off = (static_cast<std::size_t>(n) * L.c + c) * L.spatial;
      for (int s = 0; s < L.spatial; ++s) {
        g.dx[off + s] = static_cast<T>(
            k * (m * dy[off + s] - sum_dy - cache.xhat[off + s] * sum_dy_xhat));
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Mode mode, Rng& rng, std::vector<T>* mask) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "dropout rate must lie in [0, 1)");
  }
  if (mode == Mode::Infer || rate == 0.0) {
    if (mask) mask->assign(x.size(), T(1));
    return x;
  }
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> y(x.shape());
  std::vector<T> local;
  std::vector<T>& m = mask ? *mask : local;
  m.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    m[i] = rng.uniform() < rate ? T(0) : keep_scale;
    y[i] = x[i] * m[i];
  }
  return y;
}

template <typename T>
Tensor<T> dropout_backward(const Tensor<T>& dy, const std::vector<T>& mask) {
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * mask[i];
  return dx;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  Tensor<T> dx(dy.shape());
  for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = y[i] > T(0) ? dy[i] : T(0);
  return dx;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  require_rank(w.shape(), 2, "linear weights");
  const int f = w.dim(1), o = w.dim(0);
  if (x.rank() < 1 || x.shape().back() != f || b.size() != static_cast<std::size_t>(o)) {
    throw Error(ErrorCode::ShapeMismatch, "linear: input " + shape_string(x.shape()) +
                                              " vs weights " + shape_string(w.shape()));
  }
  const int rows = static_cast<int>(x.size() / static_cast<std::size_t>(f));
  Shape out_shape = x.shape();
  out_shape.back() = o;
  Tensor<T> y(out_shape);
  for (int r = 0; r < rows; ++r) {
    std::copy(b.data(), b.data() + o, y.data() + static_cast<std::size_t>(r) * o);
  }
  gemm<T>(false, true, rows, o, f, T(1), x.data(), w.data(), T(1), y.data());
  return y;
}

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy) {
  const int f = w.dim(1), o = w.dim(0);
  const int rows = static_cast<int>(x.size() / static_cast<std::size_t>(f));
  LinearGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(w.shape()), Tensor<T>({o})};
  gemm<T>(false, false, rows, f, o, T(1), dy.data(), w.data(), T(0), g.dx.data());
  gemm<T>(true, false, o, f, rows, T(1), dy.data(), x.data(), T(0), g.dw.data());
  for (int r = 0; r < rows; ++r) {
    for (int k = 0; k < o; ++k) g.db[static_cast<std::size_t>(k)] += dy[static_cast<std::size_t>(r) * o + k];
  }
  return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  Tensor<T> y = log_softmax(x);
  for (auto& v : y.values()) v = std::exp(v);
  return y;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  const int k = y.shape().back();
  Tensor<T> dx(y.shape());
  for (std::size_t r = 0; r < y.size() / static_cast<std::size_t>(k); ++r) {
    const std::size_t off = r * k;
    double dot = 0.0;
    for (int i = 0; i < k; ++i) dot += static_cast<double>(y[off + i]) * dy[off + i];
    for (int i = 0; i < k; ++i) dx[off + i] = static_cast<T>(y[off + i] * (dy[off + i] - dot));
  }
  return dx;
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x) {
  if (x.rank() < 1 || x.shape().back() < 1) {
    throw Error(ErrorCode::ShapeMismatch, "softmax over empty axis");
  }
  const int k = x.shape().back();
  Tensor<T> y(x.shape());
  for (std::size_t r = 0; r < x.size() / static_cast<std::size_t>(k); ++r) {
    const std::size_t off = r * k;
    T mx = x[off];
    for (int i = 1; i < k; ++i) mx = std::max(mx, x[off + i]);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += std::exp(static_cast<double>(x[off + i] - mx));
    const double lse = mx + std::log(sum);
    for (int i = 0; i < k; ++i) y[off + i] = static_cast<T>(x[off + i] - lse);
  }
  return y;
}

template <typename T>
Tensor<T> log_softmax_backward(const Tensor<T>& y, const Tensor<T>& dy) {
  const int k = y.shape().back();
  Tensor<T> dx(y.shape());
  for (std::size_t r = 0; r < y.size() / static_cast<std::size_t>(k); ++r) {
    const std::size_t off = r * k;
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += dy[off + i];
    for (int i = 0; i < k; ++i) {
      dx[off + i] = static_cast<T>(dy[off + i] - std::exp(static_cast<double>(y[off + i])) * sum);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> map_to_sequence(const Tensor<T>& x) {
  require_rank(x.shape(), 4, "map_to_sequence input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> y({w, n, c * h});
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) y.at(col, b, ch * h + r) = x.at(b, ch, r, col);
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> map_to_sequence_backward(const Tensor<T>& dy, const Shape& x_shape) {
  Tensor<T> dx(x_shape);
  const int n = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3];
  for (int b = 0; b < n; ++b) {
    for (int ch = 0; ch < c; ++ch) {
      for (int r = 0; r < h; ++r) {
        for (int col = 0; col < w; ++col) dx.at(b, ch, r, col) = dy.at(col, b, ch * h + r);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------

template <typename T>
ConvBlock<T>::ConvBlock(std::string name, int in_channels, int out_channels, int kernel,
                        Conv2dGeometry geometry, Rng& init_rng, BatchNormConfig bn)
    : weight(name + ".weight",
             uniform_tensor<T>({out_channels, in_channels, kernel, kernel},
                               std::sqrt(6.0 / (in_channels * kernel * kernel)), init_rng)),
      bias(name + ".bias", Tensor<T>({out_channels})),
      gamma(name + ".bn_gamma", Tensor<T>({out_channels}, T(1))),
      beta(name + ".bn_beta", Tensor<T>({out_channels})),
      running_mean({out_channels}),
      running_var({out_channels}, T(1)),
      name_(std::move(name)),
      kernel_(kernel),
      geometry_(geometry),
      bn_(bn) {}

template <typename T>
Tensor<T> ConvBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  const ConvDims d = conv_dims<T>(x.shape(), weight.value.shape(), geometry_);
  im2col(x.data(), d, geometry_, cols_);
  input_shape_ = x.shape();
  Tensor<T> z = conv_forward_cols(cols_, d, weight.value, bias.value);
  Tensor<T> normed = batchnorm(z, gamma.value, beta.value, running_mean, running_var, mode, bn_,
                               mode == Mode::Train ? &bn_cache_ : nullptr);
  last_mode_ = mode;
  output_ = relu(normed);
  if (mode == Mode::Infer) cols_.clear();
  check_finite(output_, "conv block forward");
  return output_;
}

template <typename T>
Tensor<T> ConvBlock<T>::backward(const Tensor<T>& dy) {
  if (last_mode_ != Mode::Train) {
    throw Error(ErrorCode::InvalidArgument, "backward requires a train-mode forward pass");
  }
  const Tensor<T> d_normed = relu_backward(output_, dy);
  const BatchNormGrads<T> bn = batchnorm_backward(d_normed, gamma.value, bn_cache_);
  for (std::size_t i = 0; i < gamma.grad.size(); ++i) {
    gamma.grad[i] += bn.dgamma[i];
    beta.grad[i] += bn.dbeta[i];
  }
  const ConvDims d = conv_dims<T>(input_shape_, weight.value.shape(), geometry_);
  Conv2dGrads<T> g = conv_backward_cols(cols_, d, weight.value, geometry_, bn.dx);
  for (std::size_t i = 0; i < weight.grad.size(); ++i) weight.grad[i] += g.dw[i];
  for (std::size_t i = 0; i < bias.grad.size(); ++i) bias.grad[i] += g.db[i];
  check_finite(g.dx, "conv block backward");
  return std::move(g.dx);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>*>> ConvBlock<T>::buffers() {
  return {{name_ + ".bn_running_mean", &running_mean}, {name_ + ".bn_running_var", &running_var}};
}

template <typename T>
std::string ConvBlock<T>::description() const {
  return "Conv2d (" + std::to_string(kernel_) + "x" + std::to_string(kernel_) + "," +
         std::to_string(weight.value.dim(0)) + "; stride: " + std::to_string(geometry_.stride_h) +
         "x" + std::to_string(geometry_.stride_w) + ")";
}

template <typename T>
Tensor<T> MaxPool<T>::forward(const Tensor<T>& x, Mode) {
  PoolResult<T> r = maxpool2d(x, geometry_);
  input_shape_ = x.shape();
  argmax_ = std::move(r.argmax);
  return std::move(r.y);
}

template <typename T>
Tensor<T> MaxPool<T>::backward(const Tensor<T>& dy) {
  return maxpool2d_backward(input_shape_, argmax_, dy);
}

template <typename T>
std::string MaxPool<T>::description() const {
  return "Max pooling (" + std::to_string(geometry_.window_h) + "x" +
         std::to_string(geometry_.window_w) + "; stride: " + std::to_string(geometry_.stride_h) +
         "x" + std::to_string(geometry_.stride_w) + ")";
}

template <typename T>
Linear<T>::Linear(std::string name, int in_features, int out_features, Rng& init_rng)
    : weight(name + ".weight", uniform_tensor<T>({out_features, in_features},
                                                 std::sqrt(6.0 / in_features), init_rng)),
      bias(name + ".bias", Tensor<T>({out_features})) {}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) {
  input_ = x;
  return linear(x, weight.value, bias.value);
}

template <typename T>
Tensor<T> Linear<T>::backward(const Tensor<T>& dy) {
  LinearGrads<T> g = linear_backward(input_, weight.value, dy);
  for (std::size_t i = 0; i < weight.grad.size(); ++i) weight.grad[i] += g.dw[i];
  for (std::size_t i = 0; i < bias.grad.size(); ++i) bias.grad[i] += g.db[i];
  return std::move(g.dx);
}

#define LINEOCR_INSTANTIATE_LAYERS(T)                                                          \
  template Tensor<T> uniform_tensor<T>(Shape, double, Rng&);                                   \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                               const Conv2dGeometry&);                                         \
  template Conv2dGrads<T> conv2d_backward<T>(const Tensor<T>&, const Tensor<T>&,               \
                                             const Conv2dGeometry&, const Tensor<T>&);         \
  template PoolResult<T> maxpool2d<T>(const Tensor<T>&, const PoolGeometry&);                  \
  template Tensor<T> maxpool2d_backward<T>(const Shape&, const std::vector<std::int32_t>&,     \
                                           const Tensor<T>&);                                  \
  template Tensor<T> batchnorm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                  Tensor<T>&, Tensor<T>&, Mode, const BatchNormConfig&,        \
                                  BatchNormCache<T>*);                                         \
  template BatchNormGrads<T> batchnorm_backward<T>(const Tensor<T>&, const Tensor<T>&,         \
                                                   const BatchNormCache<T>&);                  \
  template Tensor<T> dropout<T>(const Tensor<T>&, double, Mode, Rng&, std::vector<T>*);        \
  template Tensor<T> dropout_backward<T>(const Tensor<T>&, const std::vector<T>&);             \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                \
  template Tensor<T> relu_backward<T>(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);          \
  template LinearGrads<T> linear_backward<T>(const Tensor<T>&, const Tensor<T>&,               \
                                             const Tensor<T>&);                                \
  template Tensor<T> softmax<T>(const Tensor<T>&);                                             \
  template Tensor<T> softmax_backward<T>(const Tensor<T>&, const Tensor<T>&);                  \
  template Tensor<T> log_softmax<T>(const Tensor<T>&);                                         \
  template Tensor<T> log_softmax_backward<T>(const Tensor<T>&, const Tensor<T>&);              \
  template Tensor<T> map_to_sequence<T>(const Tensor<T>&);                                     \
  template Tensor<T> map_to_sequence_backward<T>(const Tensor<T>&, const Shape&);              \
  template class ConvBlock<T>;                                                                 \
  template class MaxPool<T>;                                                                   \
  template class Linear<T>;

LINEOCR_INSTANTIATE_LAYERS(float)
LINEOCR_INSTANTIATE_LAYERS(double)

#undef LINEOCR_INSTANTIATE_LAYERS

}  // namespace lineocr::nn
