// SPDX-License-Identifier: Apache-2.0

#include "blrqr/dense_kernels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "householder.hpp"

namespace blrqr {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

WYFactorization qr_compact_wy(const Matrix& a) {
  require(a.rows() >= a.cols(), "qr_compact_wy: panel must have at least as many rows as columns");
  require(a.cols() >= 1, "qr_compact_wy: empty panel");
  const Index n = a.cols();
  ColMatrix w = a;
  Vector tau;
  detail::householder_qr_inplace(w, tau);
  WYFactorization out;
  out.reflector.y = detail::extract_y(w, n);
  out.reflector.t = detail::build_t_factor(out.reflector.y, tau);
  out.r = detail::extract_r(w, n);
  return out;
}

Matrix apply_wy(const WYReflector& ref, const Matrix& c, Op op) {
  require(c.rows() == ref.y.rows(), "apply_wy: row dimension mismatch");
  const Matrix w = multiply(ref.y, Op::Trans, c);
  const Matrix tw = multiply(ref.t, op, w);
  Matrix out = c;
  subtract_product(out, ref.y, Op::NoTrans, tw);
  return out;
}

Matrix apply_wy_transpose(const WYReflector& ref, const Matrix& c) { return apply_wy(ref, c, Op::Trans); }

Matrix apply_wy(const WYReflector& ref, const Matrix& c) { return apply_wy(ref, c, Op::NoTrans); }

TpFactorization tp_qr(const Matrix& r_top, const Matrix& a_bot) {
  require(r_top.rows() == r_top.cols(), "tp_qr: top block must be square");
  require(a_bot.cols() == r_top.cols(), "tp_qr: column dimension mismatch");
  const Index n = r_top.cols();
  const Index k = a_bot.rows();

  ColMatrix r = r_top.triangularView<Eigen::Upper>();
  ColMatrix a = a_bot;
  Vector tau = Vector::Zero(n);

  for (Index j = 0; j < n; ++j) {
    const double alpha = r(j, j);
    const double sigma = k > 0 ? a.col(j).squaredNorm() : 0.0;
    if (sigma == 0.0) continue;
    const double norm = std::sqrt(alpha * alpha + sigma);
    const double beta = alpha >= 0.0 ? -norm : norm;
    tau(j) = (beta - alpha) / beta;
    a.col(j) /= (alpha - beta);
    r(j, j) = beta;
    const Index rest = n - j - 1;
    if (rest == 0) continue;
    Eigen::RowVectorXd w = r.row(j).tail(rest);
    w.noalias() += a.col(j).transpose() * a.rightCols(rest);
    r.row(j).tail(rest) -= tau(j) * w;
    a.rightCols(rest).noalias() -= (tau(j) * a.col(j)) * w;
  }
  count_flops(FlopKind::DenseQr, static_cast<std::uint64_t>(2 * k * n * n + n * n));

  TpFactorization out;
  out.reflector.y = a;
  out.reflector.t = detail::build_t_factor(out.reflector.y, tau);
  out.r = r;
  return out;
}

std::pair<Matrix, Matrix> apply_tp(const TpReflector& ref, const Matrix& c_top, const Matrix& c_bot,
                                   Op op) {
  require(c_top.rows() == ref.y.cols(), "apply_tp: top row dimension mismatch");
  require(c_bot.rows() == ref.y.rows(), "apply_tp: bottom row dimension mismatch");
  require(c_top.cols() == c_bot.cols(), "apply_tp: column dimension mismatch");
  Matrix w = c_top;
  if (ref.y.rows() > 0) w += multiply(ref.y, Op::Trans, c_bot);
  const Matrix tw = multiply(ref.t, op, w);
  std::pair<Matrix, Matrix> out{c_top - tw, c_bot};
  if (ref.y.rows() > 0) subtract_product(out.second, ref.y, Op::NoTrans, tw);
  return out;
}

std::pair<Matrix, Matrix> apply_tp_transpose(const TpReflector& ref, const Matrix& c_top,
                                             const Matrix& c_bot) {
  return apply_tp(ref, c_top, c_bot, Op::Trans);
}

std::pair<Matrix, Matrix> apply_tp(const TpReflector& ref, const Matrix& c_top, const Matrix& c_bot) {
  return apply_tp(ref, c_top, c_bot, Op::NoTrans);
}

MgsFactorization mgs_panel_qr(const Matrix& a) {
  require(a.rows() >= a.cols(), "mgs_panel_qr: panel must have at least as many rows as columns");
  const Index m = a.rows();
  const Index n = a.cols();
  ColMatrix w = a;
  MgsFactorization out;
  out.r = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    const double rjj = w.col(j).norm();
    out.r(j, j) = rjj;
    if (!(rjj >= 1e-300)) {
      out.rank_deficient = true;
      w.col(j).setZero();
      continue;
    }
    w.col(j) /= rjj;
    const Index rest = n - j - 1;
    if (rest == 0) continue;
    Eigen::RowVectorXd proj = w.col(j).transpose() * w.rightCols(rest);
    out.r.row(j).tail(rest) = proj;
    w.rightCols(rest).noalias() -= w.col(j) * proj;
  }
  count_flops(FlopKind::DenseQr, static_cast<std::uint64_t>(2 * m * n * n));
  out.q = w;
  return out;
}

Matrix materialize(const WYReflector& ref) {
  const Index m = ref.y.rows();
  return Matrix::Identity(m, m) - ref.y * ref.t * ref.y.transpose();
}

Matrix materialize(const TpReflector& ref) {
  const Index n = ref.y.cols();
  const Index k = ref.y.rows();
  Matrix v(n + k, n);
  v.topRows(n).setIdentity();
  v.bottomRows(k) = ref.y;
  return Matrix::Identity(n + k, n + k) - v * ref.t * v.transpose();
}

}  // namespace blrqr
