// SPDX-License-Identifier: Apache-2.0

#include "blrqr/blr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace blrqr {

Matrix LowRankBlock::to_dense() const {
  if (rank() == 0) return Matrix::Zero(rows(), cols());
  return u * v.transpose();
}

LowRankBlock LowRankBlock::zero(Index rows, Index cols) {
  return LowRankBlock{Matrix(rows, 0), Matrix(cols, 0)};
}

Index Block::rows() const { return is_dense() ? dense().rows() : low_rank().rows(); }
Index Block::cols() const { return is_dense() ? dense().cols() : low_rank().cols(); }

Matrix Block::to_dense() const { return is_dense() ? dense() : low_rank().to_dense(); }

Block Block::zero_like() const {
  if (is_dense()) return Block(Matrix::Zero(rows(), cols()));
  return Block(LowRankBlock::zero(rows(), cols()));
}

BlrStructure::BlrStructure(Index m, Index n, Index b) : m_(m), n_(n), b_(b) {
  if (b < 1 || m < 1 || n < 1) throw std::invalid_argument("BlrStructure: sizes must be positive");
  if (m % b != 0 || n % b != 0) {
    std::ostringstream msg;
    msg << "BlrStructure: block size " << b << " must divide m=" << m << " and n=" << n;
    throw std::invalid_argument(msg.str());
  }
  p_ = m / b;
  q_ = n / b;
  admissible_.assign(static_cast<std::size_t>(p_ * q_), 0);
}

BlrStructure BlrStructure::weak(Index m, Index n, Index b) {
  BlrStructure s(m, n, b);
  for (Index i = 0; i < s.p(); ++i)
    for (Index j = 0; j < s.q(); ++j)
      if (i != j) s.set_admissible(i, j, true);
  return s;
}

void BlrStructure::set_admissible(Index i, Index j, bool value) {
  if (i < 0 || i >= p_ || j < 0 || j >= q_) throw std::out_of_range("BlrStructure: cell out of range");
  if (i == j && value) throw std::invalid_argument("BlrStructure: diagonal blocks are always dense");
  admissible_[cell(i, j)] = value ? 1 : 0;
}

BlrMatrix::BlrMatrix(BlrStructure structure) : structure_(std::move(structure)) {
  const Index b = structure_.b();
  blocks_.reserve(static_cast<std::size_t>(structure_.p() * structure_.q()));
  for (Index i = 0; i < structure_.p(); ++i) {
    for (Index j = 0; j < structure_.q(); ++j) {
      if (structure_.admissible(i, j)) blocks_.emplace_back(LowRankBlock::zero(b, b));
      else blocks_.emplace_back(Matrix::Zero(b, b));
    }
  }
}

void BlrMatrix::set_block(Index i, Index j, Block block) {
  const Index b = structure_.b();
  if (block.rows() != b || block.cols() != b) throw std::invalid_argument("BlrMatrix: block must be b x b");
  if (block.is_dense() == structure_.admissible(i, j))
    throw std::invalid_argument("BlrMatrix: block kind does not match the admissibility map");
  blocks_[structure_.cell(i, j)] = std::move(block);
}

void BlrMatrix::validate() const {
  const Index b = structure_.b();
  auto fail = [](Index i, Index j, const char* what) {
    std::ostringstream msg;
    msg << "BlrMatrix block (" << i << "," << j << "): " << what;
    throw std::logic_error(msg.str());
  };
  if (blocks_.size() != static_cast<std::size_t>(structure_.p() * structure_.q()))
    throw std::logic_error("BlrMatrix: grid is incomplete");
  for (Index i = 0; i < structure_.p(); ++i) {
    for (Index j = 0; j < structure_.q(); ++j) {
      const Block& blk = block(i, j);
      if (blk.rows() != b || blk.cols() != b) fail(i, j, "payload is not b x b");
      if (blk.is_dense() == structure_.admissible(i, j)) fail(i, j, "kind differs from admissibility map");
      if (blk.is_low_rank()) {
        const auto& lr = blk.low_rank();
        if (lr.v.cols() != lr.rank()) fail(i, j, "factor ranks differ");
        if (lr.rank() > b) fail(i, j, "rank exceeds block size");
        if (lr.rank() > 0) {
          const double defect =
              (lr.u.transpose() * lr.u - Matrix::Identity(lr.rank(), lr.rank())).norm();
          if (defect > 1e-12 * std::sqrt(static_cast<double>(lr.rank())) * 100)
            fail(i, j, "u is not column-orthonormal");
        }
      }
    }
  }
}

Matrix blr_to_dense(const BlrMatrix& a) {
  const Index b = a.block_size();
  Matrix out(a.rows(), a.cols());
  for (Index i = 0; i < a.block_rows(); ++i)
    for (Index j = 0; j < a.block_cols(); ++j) out.block(i * b, j * b, b, b) = a.block(i, j).to_dense();
  return out;
}

Index max_rank(const BlrMatrix& a) {
  Index r = 0;
  for (Index i = 0; i < a.block_rows(); ++i)
    for (Index j = 0; j < a.block_cols(); ++j) r = std::max(r, a.block(i, j).rank());
  return r;
}

std::uint64_t memory_footprint(const Block& block) {
  const auto scalars = block.is_dense()
                           ? static_cast<std::uint64_t>(block.rows() * block.cols())
                           : static_cast<std::uint64_t>((block.rows() + block.cols()) * block.rank());
  return scalars * sizeof(double);
}

std::uint64_t memory_footprint(const BlrMatrix& a) {
  std::uint64_t bytes = 0;
  for (Index i = 0; i < a.block_rows(); ++i)
    for (Index j = 0; j < a.block_cols(); ++j) bytes += memory_footprint(a.block(i, j));
  return bytes;
}

}  // namespace blrqr
