// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "lineocr/nn/layers.hpp"

namespace lineocr::nn {

// Gate blocks are stacked in the order input, forget, cell candidate, output:
//   i = sigma(a_i [+ p_i * c_prev])     f = sigma(a_f [+ p_f * c_prev])
//   g = tanh(a_g)                       c = f * c_prev + i * g
//   o = sigma(a_o [+ p_o * c])          h = o * tanh(c)
// with a = W x + U h_prev + b. Peephole weights p are diagonal.

template <typename T>
struct LstmParams {
  Tensor<T> w_input;      // [4H, F]
  Tensor<T> w_recurrent;  // [4H, H]
  Tensor<T> bias;         // [4H]
  Tensor<T> peephole;     // [3, H] rows (i, f, o); ignored without peepholes
};

template <typename T>
struct LstmState {
  Tensor<T> h;  // [N, H]
  Tensor<T> c;  // [N, H]
};

/// One time step for a batch: x_t [N, F], h_prev/c_prev [N, H].
template <typename T>
LstmState<T> lstm_cell_step(const Tensor<T>& x_t, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                            const LstmParams<T>& params, bool peephole);

/// Unidirectional LSTM over [T, N, F] with zero initial state and exact
/// backpropagation through time. With per-sample lengths, steps at or beyond
/// a sample's length output zeros and carry no state, so a reversed layer
/// starts at each sample's own last frame.
template <typename T>
class LstmLayer {
 public:
  LstmLayer(std::string name, int input_size, int hidden_size, bool peephole, bool reverse,
            Rng& init_rng);

  Tensor<T> forward(const Tensor<T>& seq, std::span<const int> lengths = {});
  Tensor<T> backward(const Tensor<T>& dh_seq);
  std::vector<Param<T>*> params();

  int hidden_size() const { return hidden_; }
  bool has_peephole() const { return peephole_enabled_; }

  Param<T> w_input;
  Param<T> w_recurrent;
  Param<T> bias;
  Param<T> peephole;

 private:
  int hidden_;
  bool peephole_enabled_;
  bool reverse_;
  int steps_ = 0;
  int batch_ = 0;
  Tensor<T> input_;
  std::vector<T> mask_;  // [T, N]
  Tensor<T> gates_;      // [T, N, 4H] post-activation
  Tensor<T> cell_;       // [T, N, H] unmasked cell state
  Tensor<T> hidden_out_; // [T, N, H] masked outputs
  Tensor<T> cell_out_;   // [T, N, H] masked cell state carried forward
};

/// Forward and reverse LSTMs with per-step concatenation [h_fwd ; h_bwd].
template <typename T>
class BiLstm {
 public:
  BiLstm(std::string name, int input_size, int hidden_size, bool peephole, Rng& init_rng);

  Tensor<T> forward(const Tensor<T>& seq, std::span<const int> lengths = {});
  Tensor<T> backward(const Tensor<T>& dy);
  std::vector<Param<T>*> params();

  LstmLayer<T> forward_layer;
  LstmLayer<T> backward_layer;
};

}  // namespace lineocr::nn
