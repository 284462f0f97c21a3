// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the unit tests: seeded random matrices and dense
// reference computations.

#pragma once

#include <Eigen/QR>
#include <Eigen/SVD>

#include <random>

#include "blrqr/blr.hpp"
#include "blrqr/linalg.hpp"
#include "blrqr/scheduler.hpp"

namespace blrqr::test {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return m;
}

inline Matrix orthonormal_columns(Index rows, Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<ColMatrix> qr(ColMatrix(random_matrix(rows, cols, rng)));
  return Matrix(qr.householderQ() * ColMatrix::Identity(rows, cols));
}

inline LowRankBlock random_lowrank(Index rows, Index cols, Index rank, std::mt19937_64& rng) {
  return LowRankBlock{orthonormal_columns(rows, rank, rng), random_matrix(cols, rank, rng)};
}

inline double orth_defect(const Matrix& u) {
  return (u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm();
}

inline double rel_err(const Matrix& got, const Matrix& want) {
  const double n = want.norm();
  return n == 0.0 ? got.norm() : (got - want).norm() / n;
}

/// Smallest rank whose SVD truncation meets the relative Frobenius tolerance.
inline Index svd_rank(const Matrix& a, double eps) {
  Eigen::JacobiSVD<ColMatrix> svd{ColMatrix(a)};
  const Vector s = svd.singularValues();
  const double tol = eps * s.norm();
  Index r = s.size();
  double tail = 0.0;
  while (r > 0 && std::sqrt(tail + s(r - 1) * s(r - 1)) <= tol) {
    tail += s(r - 1) * s(r - 1);
    --r;
  }
  return r;
}

}  // namespace blrqr::test

namespace blrqr::test {

/// Weakly admissible BLR matrix: random dense diagonal, rank-k off-diagonal
/// blocks, plus the exact dense matrix.
inline std::pair<BlrMatrix, Matrix> random_weak_blr(Index m, Index n, Index b, Index k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BlrMatrix a(BlrStructure::weak(m, n, b));
  for (Index i = 0; i < a.block_rows(); ++i)
    for (Index j = 0; j < a.block_cols(); ++j)
      a.set_block(i, j, i == j ? Block(random_matrix(b, b, rng)) : Block(random_lowrank(b, b, k, rng)));
  return {a, blr_to_dense(a)};
}

/// All-dense BLR matrix from a dense matrix.
inline BlrMatrix dense_blr(const Matrix& d, Index b) {
  BlrMatrix a(BlrStructure::dense(d.rows(), d.cols(), b));
  for (Index i = 0; i < a.block_rows(); ++i)
    for (Index j = 0; j < a.block_cols(); ++j) a.set_block(i, j, Block(Matrix(d.block(i * b, j * b, b, b))));
  return a;
}

/// Kahn's algorithm choosing uniformly among the ready nodes.
inline std::vector<std::size_t> random_topological_order(const TaskDag& dag, std::mt19937_64& rng) {
  std::vector<int> pending = dag.ready_count;
  std::vector<std::size_t> ready, order;
  for (std::size_t n = 0; n < dag.nodes.size(); ++n)
    if (pending[n] == 0) ready.push_back(n);
  while (!ready.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, ready.size() - 1);
    const std::size_t at = pick(rng);
    const std::size_t n = ready[at];
    ready.erase(ready.begin() + static_cast<std::ptrdiff_t>(at));
    order.push_back(n);
    for (std::size_t s : dag.successors[n])
      if (--pending[s] == 0) ready.push_back(s);
  }
  return order;
}

}  // namespace blrqr::test
