// SPDX-License-Identifier: Apache-2.0

#include "householder.hpp"

#include <algorithm>

namespace blrqr::detail {

void householder_qr_inplace(ColMatrix& w, Vector& tau) {
  const Index m = w.rows();
  const Index n = w.cols();
  const Index k = std::min(m, n);
  tau.setZero(k);
  for (Index j = 0; j < k; ++j) {
    const Index len = m - j;
    tau(j) = make_householder(w.col(j).tail(len));
    const Index rest = n - j - 1;
    if (tau(j) == 0.0 || rest == 0) continue;
    const double beta = w(j, j);
    w(j, j) = 1.0;
    auto v = w.col(j).tail(len);
    auto trailing = w.bottomRightCorner(len, rest);
    Eigen::RowVectorXd z = v.transpose() * trailing;
    trailing.noalias() -= (tau(j) * v) * z;
    w(j, j) = beta;
  }
  count_flops(FlopKind::DenseQr, qr_flops(m, n));
}

ColMatrix form_q(const ColMatrix& w, const Vector& tau, Index ncols) {
  const Index m = w.rows();
  const Index k = tau.size();
  ColMatrix q = ColMatrix::Identity(m, ncols);
  for (Index j = k - 1; j >= 0; --j) {
    if (tau(j) == 0.0) continue;
    const Index len = m - j;
    Vector v(len);
    v(0) = 1.0;
    v.tail(len - 1) = w.col(j).tail(len - 1);
    auto block = q.bottomRows(len);
    Eigen::RowVectorXd z = v.transpose() * block;
    block.noalias() -= (tau(j) * v) * z;
  }
  count_flops(FlopKind::DenseQr, qr_flops(m, std::min(k, ncols)));
  return q;
}

Matrix extract_y(const ColMatrix& w, Index k) {
  const Index m = w.rows();
  Matrix y = Matrix::Zero(m, k);
  for (Index j = 0; j < k; ++j) {
    y(j, j) = 1.0;
    for (Index i = j + 1; i < m; ++i) y(i, j) = w(i, j);
  }
  return y;
}

Matrix extract_r(const ColMatrix& w, Index k) {
  const Index n = w.cols();
  Matrix r = Matrix::Zero(k, n);
  for (Index i = 0; i < k; ++i)
    for (Index j = i; j < n; ++j) r(i, j) = w(i, j);
  return r;
}

Matrix build_t_factor(const Matrix& y, const Vector& tau) {
  const Index k = tau.size();
  Matrix t = Matrix::Zero(k, k);
  if (k == 0) return t;
  const Matrix gram = y.transpose() * y;
  for (Index i = 0; i < k; ++i) {
    t(i, i) = tau(i);
    if (i == 0 || tau(i) == 0.0) continue;
    Vector z = gram.col(i).head(i);
    Vector col = t.topLeftCorner(i, i).triangularView<Eigen::Upper>() * z;
    t.col(i).head(i) = -tau(i) * col;
  }
  count_flops(FlopKind::TFactor, tfactor_flops(y.rows(), k));
  return t;
}

}  // namespace blrqr::detail
