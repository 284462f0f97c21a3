// SPDX-License-Identifier: Apache-2.0
//
// Dense matrix types and flop-counted products shared by every module.

#pragma once

#include <Eigen/Core>

#include <cstdint>

#include "blrqr/flops.hpp"

namespace blrqr {

using Index = Eigen::Index;

/// Row-major dense matrix; the storage type of every dense block.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Column-major scratch used inside column-oriented kernels.
using ColMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Op { NoTrans, Trans };

inline Index op_rows(const Matrix& a, Op op) { return op == Op::NoTrans ? a.rows() : a.cols(); }
inline Index op_cols(const Matrix& a, Op op) { return op == Op::NoTrans ? a.cols() : a.rows(); }

/// op(a) * op(b), counted as a GEMM.
Matrix multiply(const Matrix& a, Op op_a, const Matrix& b, Op op_b = Op::NoTrans);
inline Matrix multiply(const Matrix& a, const Matrix& b) { return multiply(a, Op::NoTrans, b, Op::NoTrans); }

/// c -= op(a) * b, counted as a GEMM.
void subtract_product(Matrix& c, const Matrix& a, Op op_a, const Matrix& b);

Matrix identity(Index rows, Index cols);

/// Thin Householder QR of any shape: a = q * r with q (m x min(m,n)) having
/// orthonormal columns and r (min(m,n) x n) upper trapezoidal.
struct ThinQr {
  Matrix q;
  Matrix r;
};
ThinQr thin_qr(const Matrix& a);

/// Thin SVD a = u * diag(sigma) * v^T with sigma non-increasing.
struct ThinSvd {
  Matrix u;
  Vector sigma;
  Matrix v;
};
ThinSvd thin_svd(const Matrix& a);

}  // namespace blrqr
