// SPDX-License-Identifier: Apache-2.0
//
// Adaptive-rank compression and arithmetic on low-rank blocks.

#pragma once

#include "blrqr/blr.hpp"

namespace blrqr {

struct ToleranceConfig {
  double epsilon = 1e-10;
  /// Compressions needing more than this fraction of min(rows, cols) stay dense.
  double dense_fallback_fraction = 0.5;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// Column-pivoted Householder QR truncated at the smallest rank whose
/// remainder has Frobenius norm <= epsilon * ||a||_F. Falls back to Dense(a)
/// when that rank exceeds the dense_fallback_fraction cutoff.
Block compress_rrqr(const Matrix& a, const ToleranceConfig& cfg);

/// Same truncation without the dense fallback.
LowRankBlock compress_lowrank(const Matrix& a, double epsilon);

/// a + bk recompressed to tolerance.
LowRankBlock rounded_add(const LowRankBlock& a, const LowRankBlock& bk, const ToleranceConfig& cfg);

/// d + u v^T.
Matrix lr_add_into_dense(const Matrix& d, const LowRankBlock& a);

enum class Side { Left, Right };

/// Side::Right: a * d, keeping a.u.  Side::Left: d * a, re-orthonormalized.
LowRankBlock lr_times_dense(const LowRankBlock& a, const Matrix& d, Side side);

/// a * bk with no truncation; rank is min(a.rank, bk.rank).
LowRankBlock lr_times_lr(const LowRankBlock& a, const LowRankBlock& bk);

/// Low-rank block from any factor pair left * right^T, with the left factor
/// orthonormalized.
LowRankBlock orthonormalize_left(const Matrix& left, const Matrix& right);

/// op(a) * b. Low-rank when either operand is, dense otherwise.
Block multiply(const Block& a, Op op_a, const Block& b);

/// target += scale * delta, keeping target's kind. Low-rank targets are
/// recompressed at cfg.epsilon; dense targets absorb the expanded update.
void accumulate(Block& target, const Block& delta, double scale, const ToleranceConfig& cfg);

/// scale * a.
Block scaled(const Block& a, double scale);

/// Compresses every admissible block of a dense matrix. Blocks whose rank
/// exceeds the fallback cutoff stay dense and are marked inadmissible in the
/// returned structure.
BlrMatrix compress_blr(const Matrix& dense, const BlrStructure& structure, const ToleranceConfig& cfg);

}  // namespace blrqr
