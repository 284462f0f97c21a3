// SPDX-License-Identifier: Apache-2.0
//
// Elementary Householder reflectors on column-major scratch storage.

#pragma once

#include <cmath>

#include "blrqr/linalg.hpp"

namespace blrqr::detail {

/// Turns x into a Householder vector in place. On return x(0) holds beta and
/// x(1:) the tail of v (v(0) = 1 implicitly); H = I - tau v v^T with
/// H x_original = beta e_1. beta takes the sign opposite to x(0), with
/// x(0) == 0 treated as positive. When x(1:) is already zero no reflection is
/// needed and tau = 0.
template <typename Segment>
double make_householder(Segment&& x) {
  const Index len = x.size();
  if (len == 0) return 0.0;
  const double alpha = x(0);
  const double sigma = len > 1 ? x.tail(len - 1).squaredNorm() : 0.0;
  if (sigma == 0.0) return 0.0;
  const double norm = std::sqrt(alpha * alpha + sigma);
  const double beta = alpha >= 0.0 ? -norm : norm;
  const double tau = (beta - alpha) / beta;
  x.tail(len - 1) /= (alpha - beta);
  x(0) = beta;
  return tau;
}

/// LAPACK geqr2-style factorization of w in place: R in the upper triangle,
/// Householder tails below the diagonal. Handles any shape.
void householder_qr_inplace(ColMatrix& w, Vector& tau);

/// First `ncols` columns of Q = H_0 H_1 ... H_{k-1} from a geqr2 layout.
ColMatrix form_q(const ColMatrix& w, const Vector& tau, Index ncols);

/// Unit lower trapezoidal Y from a geqr2 layout (k = tau.size() columns).
Matrix extract_y(const ColMatrix& w, Index k);

/// Upper trapezoidal R (k x n) from a geqr2 layout.
Matrix extract_r(const ColMatrix& w, Index k);

/// Forward columnwise T such that H_0 ... H_{k-1} = I - Y T Y^T.
Matrix build_t_factor(const Matrix& y, const Vector& tau);

}  // namespace blrqr::detail
