// Copyright (C) 2026 The lineocr Authors
// SPDX-License-Identifier: Apache-2.0

#include "lineocr/nn/tensor.hpp"

#include <Eigen/Core>

namespace lineocr::nn {

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
void gemm(bool trans_a, bool trans_b, int m, int n, int k, T alpha, const T* a, const T* b,
          T beta, T* c) {
  using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using ConstMap = Eigen::Map<const RowMat>;
  Eigen::Map<RowMat> cm(c, m, n);
  if (beta == T(0)) {
    cm.setZero();
  } else if (beta != T(1)) {
    cm *= beta;
  }
  if (m == 0 || n == 0 || k == 0) return;
  const ConstMap am(a, trans_a ? k : m, trans_a ? m : k);
  const ConstMap bm(b, trans_b ? n : k, trans_b ? k : n);
  if (!trans_a && !trans_b) {
    cm.noalias() += alpha * am * bm;
  } else if (trans_a && !trans_b) {
    cm.noalias() += alpha * am.transpose() * bm;
  } else if (!trans_a && trans_b) {
    cm.noalias() += alpha * am * bm.transpose();
  } else {
    cm.noalias() += alpha * am.transpose() * bm.transpose();
  }
}

template void gemm<float>(bool, bool, int, int, int, float, const float*, const float*, float,
                          float*);
template void gemm<double>(bool, bool, int, int, int, double, const double*, const double*,
                           double, double*);

}  // namespace lineocr::nn
