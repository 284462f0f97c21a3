// SPDX-License-Identifier: Apache-2.0

#include "blrqr/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace blrqr {

double frobenius_condition(const Matrix& a) {
  const Vector sigma = thin_svd(a).sigma;
  double inv = 0.0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) == 0.0) return std::numeric_limits<double>::infinity();
    inv += 1.0 / (sigma(i) * sigma(i));
  }
  return sigma.norm() * std::sqrt(inv);
}

AccuracyReport compute_metrics(const Matrix& a_dense, const FactorizationResult& f, bool with_kappa) {
  const Index n = a_dense.cols();
  if (n > kMaxMetricsCols) throw std::invalid_argument("compute_metrics: matrix too large to materialize");
  if (f.r.cols() != n || (f.algorithm != Algorithm::BlockedMgs && f.r.rows() != a_dense.rows()))
    throw std::invalid_argument("compute_metrics: factorization does not match the matrix");

  AccuracyReport rep;
  const Matrix qr = apply_q(f, r_dense(f), false);
  if (qr.rows() != a_dense.rows()) throw std::invalid_argument("compute_metrics: factorization does not match the matrix");
  const double norm_a = a_dense.norm();
  rep.res = norm_a == 0.0 ? (qr - a_dense).norm() : (qr - a_dense).norm() / norm_a;

  const Matrix q = economy_q(f);
  Matrix gram = q.transpose() * q;
  gram.diagonal().array() -= 1.0;
  rep.orth = gram.norm() / std::sqrt(static_cast<double>(n));

  if (with_kappa && n <= kMaxKappaCols) rep.kappa_f = frobenius_condition(a_dense);
  rep.max_rank = max_rank(f.r);
  rep.memory_bytes = memory_footprint(f.r);
  if (f.algorithm == Algorithm::BlockedMgs) rep.memory_bytes += memory_footprint(f.q_explicit);
  return rep;
}

}  // namespace blrqr
