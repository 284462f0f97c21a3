// SPDX-License-Identifier: Apache-2.0
//
// Dense panel kernels: compact-WY Householder QR and its application,
// triangular-on-top-of-square ("TP") QR updates, and MGS panel QR.

#pragma once

#include <utility>

#include "blrqr/linalg.hpp"

namespace blrqr {

/// Compact-WY reflector Q = I - Y T Y^T.
/// Y (m x n) is unit lower trapezoidal with the unit diagonal stored
/// explicitly; T (n x n) is upper triangular.
struct WYReflector {
  Matrix y;
  Matrix t;
};

/// Structured reflector Q = I - [I; Y] T [I; Y]^T acting on a stacked pair
/// [top (n rows); bottom (k rows)]. Only the bottom part Y (k x n) is stored.
struct TpReflector {
  Matrix y;
  Matrix t;
};

struct WYFactorization {
  WYReflector reflector;
  Matrix r;  // n x n upper triangular
};

struct TpFactorization {
  TpReflector reflector;
  Matrix r;  // n x n upper triangular
};

/// Householder QR of a with m >= n. Throws std::invalid_argument if m < n.
WYFactorization qr_compact_wy(const Matrix& a);

/// Q^T c = c - Y T^T Y^T c.
Matrix apply_wy_transpose(const WYReflector& ref, const Matrix& c);
/// Q c = c - Y T Y^T c.
Matrix apply_wy(const WYReflector& ref, const Matrix& c);
Matrix apply_wy(const WYReflector& ref, const Matrix& c, Op op);

/// QR of [r_top; a_bot] with r_top upper triangular. a_bot may have any
/// number of rows, including zero.
TpFactorization tp_qr(const Matrix& r_top, const Matrix& a_bot);

/// Applies Q^T (or Q for Op::NoTrans) of a structured reflector to the
/// stacked pair [c_top; c_bot] and returns the updated pair.
///   w = op(T) (c_top + Y^T c_bot);  c_top -= w;  c_bot -= Y w
std::pair<Matrix, Matrix> apply_tp_transpose(const TpReflector& ref, const Matrix& c_top,
                                             const Matrix& c_bot);
std::pair<Matrix, Matrix> apply_tp(const TpReflector& ref, const Matrix& c_top, const Matrix& c_bot);
std::pair<Matrix, Matrix> apply_tp(const TpReflector& ref, const Matrix& c_top, const Matrix& c_bot,
                                   Op op);

struct MgsFactorization {
  Matrix q;  // m x n, orthonormal columns
  Matrix r;  // n x n upper triangular
  /// Set when some diagonal entry of r fell below 1e-300. The corresponding
  /// column of q is left at zero; nothing is repaired.
  bool rank_deficient = false;
};

/// Modified Gram-Schmidt QR of a with m >= n.
MgsFactorization mgs_panel_qr(const Matrix& a);

/// Explicit Q (rows x rows) of a compact-WY reflector. Test and metric use.
Matrix materialize(const WYReflector& ref);
/// Explicit Q ((n+k) x (n+k)) of a structured reflector.
Matrix materialize(const TpReflector& ref);

}  // namespace blrqr
