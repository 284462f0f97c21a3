// SPDX-License-Identifier: Apache-2.0

#include "blrqr/lowrank.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "householder.hpp"

namespace blrqr {

void ToleranceConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  if (!(dense_fallback_fraction > 0.0 && dense_fallback_fraction <= 1.0))
    throw std::invalid_argument("dense_fallback_fraction must lie in (0, 1]");
}

namespace {

// fell_back is set (and block left empty) once the rank would exceed rank_limit.
struct RrqrOutcome {
  LowRankBlock block;
  bool fell_back = false;
};

RrqrOutcome rrqr_truncated(const Matrix& a, double epsilon, Index rank_limit) {
  FlopScope scope(FlopKind::Compress);
  const Index m = a.rows();
  const Index n = a.cols();
  const Index kmax = std::min(m, n);
  RrqrOutcome out;

  const double norm_a = a.norm();
  if (norm_a == 0.0) {
    out.block = LowRankBlock::zero(m, n);
    return out;
  }
  const double tol = epsilon * norm_a;

  ColMatrix w = a;
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Vector tau = Vector::Zero(kmax);
  Vector colsq(n);
  std::uint64_t flops = 0;

  Index r = 0;
  for (;; ++r) {
    // Exact trailing norms; cheap next to the reflector update.
    for (Index c = r; c < n; ++c) colsq(c) = w.col(c).tail(m - r).squaredNorm();
    const double remainder = std::sqrt(colsq.tail(n - r).sum());
    if (remainder <= tol || r == kmax) break;
    if (r + 1 > rank_limit) {
      out.fell_back = true;
      count_flops(FlopKind::Compress, flops);
      return out;
    }
    Index piv = r;
    for (Index c = r + 1; c < n; ++c)
      if (colsq(c) > colsq(piv)) piv = c;
    if (piv != r) {
      w.col(r).swap(w.col(piv));
      std::swap(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(piv)]);
    }
    const Index len = m - r;
    tau(r) = detail::make_householder(w.col(r).tail(len));
    const Index rest = n - r - 1;
    if (tau(r) != 0.0 && rest > 0) {
      const double beta = w(r, r);
      w(r, r) = 1.0;
      auto v = w.col(r).tail(len);
      auto trailing = w.bottomRightCorner(len, rest);
      Eigen::RowVectorXd z = v.transpose() * trailing;
      trailing.noalias() -= (tau(r) * v) * z;
      w(r, r) = beta;
    }
    flops += static_cast<std::uint64_t>(4 * len * (n - r));
  }
  count_flops(FlopKind::Compress, flops);

  const Vector tau_r = tau.head(r);
  out.block.u = detail::form_q(w, tau_r, r);
  const Matrix rfac = detail::extract_r(w, r);
  out.block.v.resize(n, r);
  for (Index c = 0; c < n; ++c) out.block.v.row(perm[static_cast<std::size_t>(c)]) = rfac.col(c).transpose();
  return out;
}

}  // namespace

Block compress_rrqr(const Matrix& a, const ToleranceConfig& cfg) {
  const auto limit = static_cast<Index>(
      std::floor(cfg.dense_fallback_fraction * static_cast<double>(std::min(a.rows(), a.cols()))));
  RrqrOutcome res = rrqr_truncated(a, cfg.epsilon, limit);
  if (res.fell_back) return Block(a);
  return Block(std::move(res.block));
}

LowRankBlock compress_lowrank(const Matrix& a, double epsilon) {
  return rrqr_truncated(a, epsilon, std::min(a.rows(), a.cols())).block;
}

LowRankBlock rounded_add(const LowRankBlock& a, const LowRankBlock& bk, const ToleranceConfig& cfg) {
  if (a.rows() != bk.rows() || a.cols() != bk.cols())
    throw std::invalid_argument("rounded_add: dimension mismatch");
  if (bk.rank() == 0) return a;
  if (a.rank() == 0) return bk;

  FlopScope scope(FlopKind::RoundedAdd);
  const Index m = a.rows();
  const Index n = a.cols();
  const Index s = a.rank() + bk.rank();

  Matrix uu(m, s), vv(n, s);
  uu << a.u, bk.u;
  vv << a.v, bk.v;
  const ThinQr qu = thin_qr(uu);
  const ThinQr qv = thin_qr(vv);
  const Matrix core = multiply(qu.r, Op::NoTrans, qv.r, Op::Trans);

  const ThinSvd svd = thin_svd(core);
  const Vector& sigma = svd.sigma;
  const Index k = sigma.size();
  count_flops(FlopKind::RoundedAdd, static_cast<std::uint64_t>(12 * core.rows() * core.cols() * k));

  // Trailing energy test, with a floor at the rounding level of the inputs so
  // that exact cancellation is recognised.
  const double floor = 32.0 * DBL_EPSILON * (a.v.norm() + bk.v.norm());
  const double tol = std::max(cfg.epsilon * sigma.norm(), floor);
  Index r = k;
  double tail = 0.0;
  while (r > 0) {
    const double next = tail + sigma(r - 1) * sigma(r - 1);
    if (std::sqrt(next) > tol) break;
    tail = next;
    --r;
  }

  if (r == 0) return LowRankBlock::zero(m, n);
  LowRankBlock out;
  const Matrix x = svd.u.leftCols(r);
  Matrix z = svd.v.leftCols(r);
  for (Index c = 0; c < r; ++c) z.col(c) *= sigma(c);
  out.u = multiply(qu.q, x);
  out.v = multiply(qv.q, z);
  return out;
}

Matrix lr_add_into_dense(const Matrix& d, const LowRankBlock& a) {
  if (d.rows() != a.rows() || d.cols() != a.cols())
    throw std::invalid_argument("lr_add_into_dense: dimension mismatch");
  Matrix out = d;
  if (a.rank() == 0) return out;
  out.noalias() += a.u * a.v.transpose();
  count_flops(FlopKind::Gemm, gemm_flops(d.rows(), d.cols(), a.rank()));
  return out;
}

LowRankBlock orthonormalize_left(const Matrix& left, const Matrix& right) {
  if (left.cols() != right.cols()) throw std::invalid_argument("orthonormalize_left: rank mismatch");
  if (left.cols() == 0) return LowRankBlock::zero(left.rows(), right.rows());
  const ThinQr qr = thin_qr(left);
  return LowRankBlock{qr.q, multiply(right, Op::NoTrans, qr.r, Op::Trans)};
}

Block multiply(const Block& a, Op op_a, const Block& b) {
  const Index rows = op_a == Op::NoTrans ? a.rows() : a.cols();
  const Index inner = op_a == Op::NoTrans ? a.cols() : a.rows();
  if (inner != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
  const Index cols = b.cols();

  if (a.is_dense() && b.is_dense()) return Block(multiply(a.dense(), op_a, b.dense()));

  if (a.is_dense()) {
    const auto& lb = b.low_rank();
    if (lb.rank() == 0) return Block(LowRankBlock::zero(rows, cols));
    return Block(orthonormalize_left(multiply(a.dense(), op_a, lb.u), lb.v));
  }

  const auto& la = a.low_rank();
  if (la.rank() == 0 || (b.is_low_rank() && b.rank() == 0)) return Block(LowRankBlock::zero(rows, cols));
  const bool left_orthonormal = op_a == Op::NoTrans;
  const Matrix& left = left_orthonormal ? la.u : la.v;
  const Matrix& right = left_orthonormal ? la.v : la.u;

  if (b.is_dense()) {
    Matrix new_right = multiply(b.dense(), Op::Trans, right);
    if (left_orthonormal) return Block(LowRankBlock{left, std::move(new_right)});
    return Block(orthonormalize_left(left, new_right));
  }

  const auto& lb = b.low_rank();
  const Matrix core = multiply(right, Op::Trans, lb.u);  // ra x rb
  if (la.rank() <= lb.rank()) {
    Matrix new_right = multiply(lb.v, Op::NoTrans, core, Op::Trans);
    if (left_orthonormal) return Block(LowRankBlock{left, std::move(new_right)});
    return Block(orthonormalize_left(left, new_right));
  }
  return Block(orthonormalize_left(multiply(left, core), lb.v));
}

LowRankBlock lr_times_dense(const LowRankBlock& a, const Matrix& d, Side side) {
  if (side == Side::Right) return multiply(Block(a), Op::NoTrans, Block(d)).low_rank();
  return multiply(Block(d), Op::NoTrans, Block(a)).low_rank();
}

LowRankBlock lr_times_lr(const LowRankBlock& a, const LowRankBlock& bk) {
  return multiply(Block(a), Op::NoTrans, Block(bk)).low_rank();
}

Block scaled(const Block& a, double scale) {
  if (a.is_dense()) return Block(Matrix(scale * a.dense()));
  const auto& lr = a.low_rank();
  return Block(LowRankBlock{lr.u, scale * lr.v});
}

void accumulate(Block& target, const Block& delta, double scale, const ToleranceConfig& cfg) {
  if (target.rows() != delta.rows() || target.cols() != delta.cols())
    throw std::invalid_argument("accumulate: dimension mismatch");
  if (target.is_dense()) {
    Matrix& t = target.dense();
    if (delta.is_dense()) {
      t += scale * delta.dense();
    } else if (delta.rank() > 0) {
      const auto& lr = delta.low_rank();
      t.noalias() += (scale * lr.u) * lr.v.transpose();
      count_flops(FlopKind::Gemm, gemm_flops(t.rows(), t.cols(), lr.rank()));
    }
    return;
  }
  if (delta.is_low_rank()) {
    if (delta.rank() == 0) return;
    // Once the stacked factors are no thinner than the block itself the
    // factored recompression buys nothing over compressing the dense sum.
    if (target.rank() + delta.rank() < std::min(target.rows(), target.cols())) {
      target = Block(rounded_add(target.low_rank(), scaled(delta, scale).low_rank(), cfg));
      return;
    }
    const auto& lr = delta.low_rank();
    Matrix sum = target.to_dense();
    sum.noalias() += (scale * lr.u) * lr.v.transpose();
    count_flops(FlopKind::Gemm, gemm_flops(sum.rows(), sum.cols(), target.rank() + lr.rank()));
    target = Block(compress_lowrank(sum, cfg.epsilon));
    return;
  }
  Matrix sum = lr_add_into_dense(scale * delta.dense(), target.low_rank());
  target = Block(compress_lowrank(sum, cfg.epsilon));
}

BlrMatrix compress_blr(const Matrix& dense, const BlrStructure& structure, const ToleranceConfig& cfg) {
  if (dense.rows() != structure.m() || dense.cols() != structure.n())
    throw std::invalid_argument("compress_blr: matrix does not match structure");
  const Index b = structure.b();
  BlrStructure actual = structure;
  std::vector<Block> blocks;
  blocks.reserve(static_cast<std::size_t>(structure.p() * structure.q()));
  for (Index i = 0; i < structure.p(); ++i) {
    for (Index j = 0; j < structure.q(); ++j) {
      Matrix tile = dense.block(i * b, j * b, b, b);
      if (!structure.admissible(i, j)) {
        blocks.emplace_back(std::move(tile));
        continue;
      }
      Block c = compress_rrqr(tile, cfg);
      if (c.is_dense()) actual.set_admissible(i, j, false);
      blocks.push_back(std::move(c));
    }
  }
  BlrMatrix out(actual);
  for (Index i = 0; i < structure.p(); ++i)
    for (Index j = 0; j < structure.q(); ++j)
      out.set_block(i, j, std::move(blocks[static_cast<std::size_t>(i * structure.q() + j)]));
  return out;
}

}  // namespace blrqr
