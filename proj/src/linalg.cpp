// SPDX-License-Identifier: Apache-2.0

#include "blrqr/linalg.hpp"

#include <Eigen/SVD>
#include <lapacke.h>

#include <algorithm>

#include "householder.hpp"

namespace blrqr {

Matrix multiply(const Matrix& a, Op op_a, const Matrix& b, Op op_b) {
  const Index m = op_rows(a, op_a);
  const Index k = op_cols(a, op_a);
  const Index n = op_cols(b, op_b);
  Matrix c(m, n);
  if (op_a == Op::NoTrans && op_b == Op::NoTrans) c.noalias() = a * b;
  else if (op_a == Op::NoTrans) c.noalias() = a * b.transpose();
  else if (op_b == Op::NoTrans) c.noalias() = a.transpose() * b;
  else c.noalias() = a.transpose() * b.transpose();
  count_flops(FlopKind::Gemm, gemm_flops(m, n, k));
  return c;
}

void subtract_product(Matrix& c, const Matrix& a, Op op_a, const Matrix& b) {
  if (op_a == Op::NoTrans) c.noalias() -= a * b;
  else c.noalias() -= a.transpose() * b;
  count_flops(FlopKind::Gemm, gemm_flops(c.rows(), c.cols(), op_cols(a, op_a)));
}

Matrix identity(Index rows, Index cols) { return Matrix::Identity(rows, cols); }

ThinQr thin_qr(const Matrix& a) {
  const Index k = std::min(a.rows(), a.cols());
  ColMatrix w = a;
  Vector tau;
  detail::householder_qr_inplace(w, tau);
  ThinQr out;
  out.q = detail::form_q(w, tau, k);
  out.r = detail::extract_r(w, k);
  return out;
}

ThinSvd thin_svd(const Matrix& a) {
  const Index m = a.rows();
  const Index n = a.cols();
  const Index k = std::min(m, n);
  ThinSvd out{Matrix::Zero(m, k), Vector::Zero(k), Matrix::Zero(n, k)};
  if (k == 0) return out;

  ColMatrix w = a;
  ColMatrix u(m, k), vt(k, n);
  const auto li = [](Index x) { return static_cast<lapack_int>(x); };
  const lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', li(m), li(n), w.data(), li(m), out.sigma.data(),
                                         u.data(), li(m), vt.data(), li(k));
  if (info == 0) {
    out.u = u;
    out.v = vt.transpose();
    return out;
  }
  // divide and conquer did not converge
  Eigen::JacobiSVD<ColMatrix> svd(ColMatrix(a), Eigen::ComputeThinU | Eigen::ComputeThinV);
  return ThinSvd{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace blrqr
