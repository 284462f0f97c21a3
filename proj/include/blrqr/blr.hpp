// SPDX-License-Identifier: Apache-2.0
//
// Block low-rank matrix types: dense and low-rank blocks, the admissibility
// structure of a flat p x q grid of b x b blocks, and the grid itself.

#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "blrqr/linalg.hpp"

namespace blrqr {

using DenseBlock = Matrix;

/// u * v^T with u (rows x rank) column-orthonormal and v (cols x rank).
/// rank == 0 is the zero block.
struct LowRankBlock {
  Matrix u;
  Matrix v;

  Index rows() const { return u.rows(); }
  Index cols() const { return v.rows(); }
  Index rank() const { return u.cols(); }

  Matrix to_dense() const;
  static LowRankBlock zero(Index rows, Index cols);
};

class Block {
 public:
  Block() : payload_(LowRankBlock::zero(0, 0)) {}
  Block(DenseBlock dense) : payload_(std::move(dense)) {}
  Block(LowRankBlock low_rank) : payload_(std::move(low_rank)) {}

  bool is_dense() const { return std::holds_alternative<DenseBlock>(payload_); }
  bool is_low_rank() const { return !is_dense(); }

  const DenseBlock& dense() const { return std::get<DenseBlock>(payload_); }
  DenseBlock& dense() { return std::get<DenseBlock>(payload_); }
  const LowRankBlock& low_rank() const { return std::get<LowRankBlock>(payload_); }
  LowRankBlock& low_rank() { return std::get<LowRankBlock>(payload_); }

  Index rows() const;
  Index cols() const;
  /// Rank of a low-rank block; 0 for dense blocks.
  Index rank() const { return is_dense() ? 0 : low_rank().rank(); }

  Matrix to_dense() const;
  /// Zero block of the same kind and shape.
  Block zero_like() const;

 private:
  std::variant<DenseBlock, LowRankBlock> payload_;
};

/// Grid geometry and admissibility map. admissible(i, j) == true marks a
/// cell stored in low-rank form.
class BlrStructure {
 public:
  BlrStructure() = default;
  /// Everything dense. Throws std::invalid_argument unless b divides m and n.
  BlrStructure(Index m, Index n, Index b);

  /// Every off-diagonal cell admissible.
  static BlrStructure weak(Index m, Index n, Index b);
  static BlrStructure dense(Index m, Index n, Index b) { return BlrStructure(m, n, b); }

  Index m() const { return m_; }
  Index n() const { return n_; }
  Index b() const { return b_; }
  Index p() const { return p_; }
  Index q() const { return q_; }

  bool admissible(Index i, Index j) const { return admissible_[cell(i, j)] != 0; }
  /// Diagonal cells stay inadmissible; std::invalid_argument otherwise.
  void set_admissible(Index i, Index j, bool value);

  std::size_t cell(Index i, Index j) const { return static_cast<std::size_t>(i * q_ + j); }
  bool operator==(const BlrStructure&) const = default;

 private:
  Index m_ = 0, n_ = 0, b_ = 0, p_ = 0, q_ = 0;
  std::vector<std::uint8_t> admissible_;
};

class BlrMatrix {
 public:
  BlrMatrix() = default;
  /// Zero matrix: dense zero blocks on inadmissible cells, rank-0 elsewhere.
  explicit BlrMatrix(BlrStructure structure);

  const BlrStructure& structure() const { return structure_; }
  Index rows() const { return structure_.m(); }
  Index cols() const { return structure_.n(); }
  Index block_size() const { return structure_.b(); }
  Index block_rows() const { return structure_.p(); }
  Index block_cols() const { return structure_.q(); }

  const Block& block(Index i, Index j) const { return blocks_[structure_.cell(i, j)]; }
  Block& block(Index i, Index j) { return blocks_[structure_.cell(i, j)]; }

  /// Replaces a block; enforces payload shape and the structure's kind.
  void set_block(Index i, Index j, Block block);

  /// Throws std::logic_error describing the first violated invariant.
  void validate() const;

 private:
  BlrStructure structure_;
  std::vector<Block> blocks_;
};

Matrix blr_to_dense(const BlrMatrix& a);

/// Largest rank over low-rank blocks, 0 when there are none.
Index max_rank(const BlrMatrix& a);

/// b^2 scalars per dense block plus 2 b r per low-rank block, 8 bytes each.
std::uint64_t memory_footprint(const BlrMatrix& a);
std::uint64_t memory_footprint(const Block& block);

}  // namespace blrqr
