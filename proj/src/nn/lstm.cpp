// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/nn/lstm.hpp"

#include <cmath>

namespace lineocr::nn {
namespace {

template <typename T>
inline T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

// Applies the gate nonlinearities to pre-activations `a` [N, 4H] in place and
// writes the new cell state. `c_prev` may be null (zero state).
template <typename T>
void cell_forward(T* a, const T* c_prev, const T* peephole, int n, int h, T* c_out) {
  for (int b = 0; b < n; ++b) {
    T* row = a + static_cast<std::size_t>(b) * 4 * h;
    T* ig = row;
    T* fg = row + h;
    T* gg = row + 2 * h;
    T* og = row + 3 * h;
    const T* cp = c_prev ? c_prev + static_cast<std::size_t>(b) * h : nullptr;
    T* c = c_out + static_cast<std::size_t>(b) * h;
    for (int k = 0; k < h; ++k) {
      const T prev = cp ? cp[k] : T(0);
      T ai = ig[k], af = fg[k], ao = og[k];
      if (peephole) {
        ai += peephole[k] * prev;
        af += peephole[h + k] * prev;
      }
      ig[k] = sigmoid(ai);
      fg[k] = sigmoid(af);
      gg[k] = std::tanh(gg[k]);
      c[k] = fg[k] * prev + ig[k] * gg[k];
      if (peephole) ao += peephole[2 * h + k] * c[k];
      og[k] = sigmoid(ao);
    }
  }
}

}  // namespace

template <typename T>
LstmState<T> lstm_cell_step(const Tensor<T>& x_t, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                            const LstmParams<T>& p, bool peephole) {
  require_rank(x_t.shape(), 2, "lstm input");
  const int n = x_t.dim(0), f = x_t.dim(1);
  const int h = p.w_recurrent.rank() == 2 ? p.w_recurrent.dim(1) : -1;
  if (p.w_input.shape() != Shape{4 * h, f} || p.w_recurrent.shape() != Shape{4 * h, h} ||
      p.bias.size() != static_cast<std::size_t>(4 * h) || h_prev.shape() != Shape{n, h} ||
      c_prev.shape() != Shape{n, h} ||
      (peephole && p.peephole.shape() != Shape{3, h})) {
    throw Error(ErrorCode::ShapeMismatch, "lstm_cell_step: inconsistent shapes");
  }
  Tensor<T> a({n, 4 * h});
  for (int b = 0; b < n; ++b) {
    std::copy(p.bias.data(), p.bias.data() + 4 * h, a.data() + static_cast<std::size_t>(b) * 4 * h);
  }
  gemm<T>(false, true, n, 4 * h, f, T(1), x_t.data(), p.w_input.data(), T(1), a.data());
  gemm<T>(false, true, n, 4 * h, h, T(1), h_prev.data(), p.w_recurrent.data(), T(1), a.data());
  LstmState<T> out{Tensor<T>({n, h}), Tensor<T>({n, h})};
  cell_forward(a.data(), c_prev.data(), peephole ? p.peephole.data() : nullptr, n, h, out.c.data());
  for (int b = 0; b < n; ++b) {
    for (int k = 0; k < h; ++k) {
      out.h.at(b, k) = a.at(b, 3 * h + k) * std::tanh(out.c.at(b, k));
    }
  }
  return out;
}

template <typename T>
LstmLayer<T>::LstmLayer(std::string name, int input_size, int hidden_size, bool peephole_on,
                        bool reverse, Rng& init_rng)
    : w_input(name + ".w_input", uniform_tensor<T>({4 * hidden_size, input_size},
                                                   1.0 / std::sqrt(hidden_size), init_rng)),
      w_recurrent(name + ".w_recurrent",
                  uniform_tensor<T>({4 * hidden_size, hidden_size}, 1.0 / std::sqrt(hidden_size),
                                    init_rng)),
      bias(name + ".bias", Tensor<T>({4 * hidden_size})),
      peephole(name + ".peephole", Tensor<T>({3, hidden_size})),
      hidden_(hidden_size),
      peephole_enabled_(peephole_on),
      reverse_(reverse) {
  for (int k = 0; k < hidden_size; ++k) bias.value[static_cast<std::size_t>(hidden_size + k)] = T(1);
}

template <typename T>
std::vector<Param<T>*> LstmLayer<T>::params() {
  if (peephole_enabled_) return {&w_input, &w_recurrent, &bias, &peephole};
  return {&w_input, &w_recurrent, &bias};
}

template <typename T>
Tensor<T> LstmLayer<T>::forward(const Tensor<T>& seq, std::span<const int> lengths) {
  require_rank(seq.shape(), 3, "lstm sequence");
  const int steps = seq.dim(0), n = seq.dim(1), f = seq.dim(2), h = hidden_;
  if (f != w_input.value.dim(1) || steps < 1) {
    throw Error(ErrorCode::ShapeMismatch, "lstm: sequence " + shape_string(seq.shape()) +
                                              " vs input size " + std::to_string(w_input.value.dim(1)));
  }
  if (!lengths.empty() && lengths.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::ShapeMismatch, "lstm: one length per batch element required");
  }
  steps_ = steps;
  batch_ = n;
  input_ = seq;
  mask_.assign(static_cast<std::size_t>(steps) * n, T(1));
  if (!lengths.empty()) {
    for (int t = 0; t < steps; ++t) {
      for (int b = 0; b < n; ++b) {
        if (t >= lengths[static_cast<std::size_t>(b)]) mask_[static_cast<std::size_t>(t) * n + b] = T(0);
      }
    }
  }
  // Input projections for all steps at once.
  gates_ = Tensor<T>({steps, n, 4 * h});
  for (int r = 0; r < steps * n; ++r) {
    std::copy(bias.value.data(), bias.value.data() + 4 * h,
              gates_.data() + static_cast<std::size_t>(r) * 4 * h);
  }
  gemm<T>(false, true, steps * n, 4 * h, f, T(1), seq.data(), w_input.value.data(), T(1),
          gates_.data());

  cell_ = Tensor<T>({steps, n, h});
  hidden_out_ = Tensor<T>({steps, n, h});
  cell_out_ = Tensor<T>({steps, n, h});
  const T* pp = peephole_enabled_ ? peephole.value.data() : nullptr;
  const std::size_t step_size = static_cast<std::size_t>(n) * h;
  for (int k = 0; k < steps; ++k) {
    const int t = reverse_ ? steps - 1 - k : k;
    const int prev = reverse_ ? t + 1 : t - 1;
    T* a = gates_.data() + static_cast<std::size_t>(t) * n * 4 * h;
    const T* h_prev = k > 0 ? hidden_out_.data() + static_cast<std::size_t>(prev) * step_size : nullptr;
    const T* c_prev = k > 0 ? cell_out_.data() + static_cast<std::size_t>(prev) * step_size : nullptr;
    if (h_prev) gemm<T>(false, true, n, 4 * h, h, T(1), h_prev, w_recurrent.value.data(), T(1), a);
    T* c = cell_.data() + static_cast<std::size_t>(t) * step_size;
    cell_forward(a, c_prev, pp, n, h, c);
    T* h_out = hidden_out_.data() + static_cast<std::size_t>(t) * step_size;
    T* c_out = cell_out_.data() + static_cast<std::size_t>(t) * step_size;
    for (int b = 0; b < n; ++b) {
      const T m = mask_[static_cast<std::size_t>(t) * n + b];
      const T* og = a + static_cast<std::size_t>(b) * 4 * h + 3 * h;
      for (int j = 0; j < h; ++j) {
        const std::size_t idx = static_cast<std::size_t>(b) * h + j;
        h_out[idx] = m * og[j] * std::tanh(c[idx]);
        c_out[idx] = m * c[idx];
      }
    }
  }
  check_finite(hidden_out_, "lstm forward");
  return hidden_out_;
}

template <typename T>
Tensor<T> LstmLayer<T>::backward(const Tensor<T>& dh_seq) {
  const int steps = steps_, n = batch_, h = hidden_;
  const int f = w_input.value.dim(1);
  if (dh_seq.shape() != Shape{steps, n, h}) {
    throw Error(ErrorCode::ShapeMismatch, "lstm backward: gradient shape mismatch");
  }
  const std::size_t step_size = static_cast<std::size_t>(n) * h;
  Tensor<T> dpre({steps, n, 4 * h});
  std::vector<T> dh_next(step_size, T(0)), dc_next(step_size, T(0));
  std::vector<T> dh(step_size), dc(step_size);
  const T* pp = peephole_enabled_ ? peephole.value.data() : nullptr;
  T* dpp = peephole_enabled_ ? peephole.grad.data() : nullptr;

  for (int k = steps - 1; k >= 0; --k) {
    const int t = reverse_ ? steps - 1 - k : k;
    const int prev = reverse_ ? t + 1 : t - 1;
    const T* g = gates_.data() + static_cast<std::size_t>(t) * n * 4 * h;
    const T* c = cell_.data() + static_cast<std::size_t>(t) * step_size;
    const T* c_prev = k > 0 ? cell_out_.data() + static_cast<std::size_t>(prev) * step_size : nullptr;
    const T* dy = dh_seq.data() + static_cast<std::size_t>(t) * step_size;
    T* da = dpre.data() + static_cast<std::size_t>(t) * n * 4 * h;
    for (int b = 0; b < n; ++b) {
      const T m = mask_[static_cast<std::size_t>(t) * n + b];
      const T* gr = g + static_cast<std::size_t>(b) * 4 * h;
      T* dar = da + static_cast<std::size_t>(b) * 4 * h;
      for (int j = 0; j < h; ++j) {
        const std::size_t idx = static_cast<std::size_t>(b) * h + j;
        const T dhv = m * (dy[idx] + dh_next[idx]);
        T dcv = m * dc_next[idx];
        const T ig = gr[j], fg = gr[h + j], gg = gr[2 * h + j], og = gr[3 * h + j];
        const T tc = std::tanh(c[idx]);
        const T dao = dhv * tc * og * (T(1) - og);
        dcv += dhv * og * (T(1) - tc * tc);
        if (pp) dcv += dao * pp[2 * h + j];
        const T prev_c = c_prev ? c_prev[idx] : T(0);
        const T dai = dcv * gg * ig * (T(1) - ig);
        const T daf = dcv * prev_c * fg * (T(1) - fg);
        const T dag = dcv * ig * (T(1) - gg * gg);
        T dcp = dcv * fg;
        if (pp) {
          dcp += dai * pp[j] + daf * pp[h + j];
          dpp[j] += dai * prev_c;
          dpp[h + j] += daf * prev_c;
          dpp[2 * h + j] += dao * c[idx];
        }
        dar[j] = dai;
        dar[h + j] = daf;
        dar[2 * h + j] = dag;
        dar[3 * h + j] = dao;
        dc[idx] = dcp;
      }
    }
    std::fill(dh.begin(), dh.end(), T(0));
    if (k > 0) {
      const T* h_prev = hidden_out_.data() + static_cast<std::size_t>(prev) * step_size;
      gemm<T>(false, false, n, h, 4 * h, T(1), da, w_recurrent.value.data(), T(0), dh.data());
      gemm<T>(true, false, 4 * h, h, n, T(1), da, h_prev, T(1), w_recurrent.grad.data());
    }
    dh_next.swap(dh);
    dc_next.swap(dc);
  }
  gemm<T>(true, false, 4 * h, f, steps * n, T(1), dpre.data(), input_.data(), T(1),
          w_input.grad.data());
  for (int r = 0; r < steps * n; ++r) {
    const T* row = dpre.data() + static_cast<std::size_t>(r) * 4 * h;
    for (int j = 0; j < 4 * h; ++j) bias.grad[static_cast<std::size_t>(j)] += row[j];
  }
  Tensor<T> dx({steps, n, f});
  gemm<T>(false, false, steps * n, f, 4 * h, T(1), dpre.data(), w_input.value.data(), T(0), dx.data());
  check_finite(dx, "lstm backward");
  return dx;
}

template <typename T>
BiLstm<T>::BiLstm(std::string name, int input_size, int hidden_size, bool peephole, Rng& init_rng)
    : forward_layer(name + ".fw", input_size, hidden_size, peephole, false, init_rng),
      backward_layer(name + ".bw", input_size, hidden_size, peephole, true, init_rng) {}

template <typename T>
Tensor<T> BiLstm<T>::forward(const Tensor<T>& seq, std::span<const int> lengths) {
  const Tensor<T> hf = forward_layer.forward(seq, lengths);
  const Tensor<T> hb = backward_layer.forward(seq, lengths);
  const int steps = seq.dim(0), n = seq.dim(1), h = forward_layer.hidden_size();
  Tensor<T> y({steps, n, 2 * h});
  for (int r = 0; r < steps * n; ++r) {
    std::copy_n(hf.data() + static_cast<std::size_t>(r) * h, h, y.data() + static_cast<std::size_t>(r) * 2 * h);
    std::copy_n(hb.data() + static_cast<std::size_t>(r) * h, h,
                y.data() + static_cast<std::size_t>(r) * 2 * h + h);
  }
  return y;
}

template <typename T>
Tensor<T> BiLstm<T>::backward(const Tensor<T>& dy) {
  const int steps = dy.dim(0), n = dy.dim(1), h = forward_layer.hidden_size();
  Tensor<T> df({steps, n, h}), db({steps, n, h});
  for (int r = 0; r < steps * n; ++r) {
    std::copy_n(dy.data() + static_cast<std::size_t>(r) * 2 * h, h, df.data() + static_cast<std::size_t>(r) * h);
    std::copy_n(dy.data() + static_cast<std::size_t>(r) * 2 * h + h, h,
                db.data() + static_cast<std::size_t>(r) * h);
  }
  Tensor<T> dx = forward_layer.backward(df);
  const Tensor<T> dxb = backward_layer.backward(db);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dxb[i];
  return dx;
}

template <typename T>
std::vector<Param<T>*> BiLstm<T>::params() {
  auto p = forward_layer.params();
  for (auto* q : backward_layer.params()) p.push_back(q);
  return p;
}

template LstmState<float> lstm_cell_step<float>(const Tensor<float>&, const Tensor<float>&,
                                                const Tensor<float>&, const LstmParams<float>&, bool);
template LstmState<double> lstm_cell_step<double>(const Tensor<double>&, const Tensor<double>&,
                                                  const Tensor<double>&, const LstmParams<double>&,
                                                  bool);
template class LstmLayer<float>;
template class LstmLayer<double>;
template class BiLstm<float>;
template class BiLstm<double>;

}  // namespace lineocr::nn
