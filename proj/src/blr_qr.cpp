// SPDX-License-Identifier: Apache-2.0

#include "blrqr/blr_qr.hpp"

#include <stdexcept>
#include <string>

namespace blrqr {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

// Sum of many transient terms. Formed exactly, then truncated once when every
// term is low-rank.
class BlockSum {
 public:
  void add(const Block& term) {
    if (sum_.size() == 0) sum_ = Matrix::Zero(term.rows(), term.cols());
    if (term.is_dense()) {
      all_low_rank_ = false;
      sum_ += term.dense();
    } else if (term.rank() > 0) {
      const auto& lr = term.low_rank();
      sum_.noalias() += lr.u * lr.v.transpose();
      count_flops(FlopKind::Gemm, gemm_flops(sum_.rows(), sum_.cols(), lr.rank()));
    }
  }

  Block take(const ToleranceConfig& cfg) {
    if (all_low_rank_) return Block(compress_lowrank(sum_, cfg.epsilon));
    return Block(std::move(sum_));
  }

 private:
  Matrix sum_;
  bool all_low_rank_ = true;
};

// Converts a freshly computed block to the kind demanded by the structure.
Block to_kind(Block s, bool low_rank, const ToleranceConfig& cfg) {
  if (low_rank && s.is_dense()) return Block(compress_lowrank(s.dense(), cfg.epsilon));
  if (!low_rank && s.is_low_rank()) return Block(s.to_dense());
  return s;
}

// Rows of block column `col`'s stacked panel: b for dense blocks, rank for
// low-rank ones (their V^T parts).
Matrix stack_v_parts(const BlrMatrix& a, Index col, Index first_row, std::vector<Index>& heights) {
  const Index b = a.block_size();
  Index h = 0;
  heights.clear();
  for (Index i = first_row; i < a.block_rows(); ++i) {
    const Block& blk = a.block(i, col);
    heights.push_back(blk.is_dense() ? b : blk.rank());
    h += heights.back();
  }
  Matrix stack(h, b);
  Index off = 0;
  for (Index i = first_row; i < a.block_rows(); ++i) {
    const Block& blk = a.block(i, col);
    const Index hi = heights[static_cast<std::size_t>(i - first_row)];
    if (blk.is_dense()) stack.middleRows(off, hi) = blk.dense();
    else if (hi > 0) stack.middleRows(off, hi) = blk.low_rank().v.transpose();
    off += hi;
  }
  return stack;
}

// Splits a factor computed on the stacked panel back into per-block entries
// shaped like the blocks of column `col`.
std::vector<Block> unstack(const BlrMatrix& a, Index col, Index first_row, const Matrix& stacked,
                           const std::vector<Index>& heights) {
  const Index b = a.block_size();
  std::vector<Block> out;
  Index off = 0;
  for (Index i = first_row; i < a.block_rows(); ++i) {
    const Block& blk = a.block(i, col);
    const Index hi = heights[static_cast<std::size_t>(i - first_row)];
    if (blk.is_dense()) {
      out.emplace_back(Matrix(stacked.middleRows(off, hi)));
    } else if (hi == 0) {
      out.emplace_back(LowRankBlock::zero(b, stacked.cols()));
    } else {
      out.emplace_back(LowRankBlock{blk.low_rank().u, stacked.middleRows(off, hi).transpose()});
    }
    off += hi;
  }
  return out;
}

void check_householder_input(const BlrMatrix& a) {
  require(a.block_rows() >= a.block_cols(), "Householder BLR-QR needs p >= q");
  for (Index k = 0; k < a.block_cols(); ++k)
    require(a.block(k, k).is_dense(), "diagonal block " + std::to_string(k) + " must be dense");
}

}  // namespace

TileReflectorStore::TileReflectorStore(Index p_, Index q_) : p(p_), q(q_) {
  diag.resize(static_cast<std::size_t>(q));
  updates.resize(static_cast<std::size_t>(p * q));
}

const TileUpdate& TileReflectorStore::update(Index i, Index k) const {
  const auto& u = updates.at(static_cast<std::size_t>(i * q + k));
  if (!u) throw std::logic_error("tile reflector missing");
  return *u;
}

TileUpdate& TileReflectorStore::update(Index i, Index k) {
  auto& u = updates.at(static_cast<std::size_t>(i * q + k));
  if (!u) throw std::logic_error("tile reflector missing");
  return *u;
}

void TileReflectorStore::set_update(Index i, Index k, TileUpdate u) {
  require(i > k, "tile reflectors exist only below the diagonal");
  updates.at(static_cast<std::size_t>(i * q + k)) = std::move(u);
}

// Blocked Householder ----------------------------------------------------------

ReflectorColumn triangularize_block_column(BlrMatrix& a, Index k, const ToleranceConfig&) {
  require(k >= 0 && k < a.block_cols(), "triangularize_block_column: column out of range");
  require(a.block(k, k).is_dense(), "triangularize_block_column: diagonal block must be dense");
  std::vector<Index> heights;
  const Matrix stack = stack_v_parts(a, k, k, heights);
  WYFactorization f = qr_compact_wy(stack);

  ReflectorColumn ref;
  ref.col = k;
  ref.entries = unstack(a, k, k, f.reflector.y, heights);
  ref.t = std::move(f.reflector.t);

  a.block(k, k) = Block(std::move(f.r));
  for (Index i = k + 1; i < a.block_rows(); ++i) a.block(i, k) = a.block(i, k).zero_like();
  return ref;
}

void apply_block_column_reflector(const ReflectorColumn& ref, BlrMatrix& a, Index j,
                                  const ToleranceConfig& cfg, Op op) {
  const Index k = ref.col;
  require(j >= 0 && j < a.block_cols(), "apply_block_column_reflector: column out of range");
  if (ref.t.isZero(0.0)) return;
  BlockSum sum;
  for (Index i = k; i < a.block_rows(); ++i) sum.add(multiply(ref.entry(i), Op::Trans, a.block(i, j)));
  const Block w = multiply(Block(ref.t), op, sum.take(cfg));
  for (Index i = k; i < a.block_rows(); ++i)
    accumulate(a.block(i, j), multiply(ref.entry(i), Op::NoTrans, w), -1.0, cfg);
}

// Tiled Householder ------------------------------------------------------------

WYReflector tile_diag_qr(BlrMatrix& a, Index k) {
  require(a.block(k, k).is_dense(), "tile_diag_qr: diagonal block must be dense");
  WYFactorization f = qr_compact_wy(a.block(k, k).dense());
  a.block(k, k) = Block(std::move(f.r));
  return std::move(f.reflector);
}

void tile_apply_block_reflector(const WYReflector& ref, BlrMatrix& a, Index k, Index j, Op op) {
  Block& blk = a.block(k, j);
  if (ref.t.isZero(0.0)) return;
  if (blk.is_dense()) {
    blk.dense() = apply_wy(ref, blk.dense(), op);
  } else if (blk.rank() > 0) {
    // An orthogonal map keeps u column-orthonormal.
    blk.low_rank().u = apply_wy(ref, blk.low_rank().u, op);
  }
}

TileUpdate tile_update_qr(BlrMatrix& a, Index k, Index i) {
  require(i > k, "tile_update_qr: needs i > k");
  const Matrix& rkk = a.block(k, k).dense();
  Block& aik = a.block(i, k);
  TileUpdate out;
  if (aik.is_dense()) {
    TpFactorization f = tp_qr(rkk, aik.dense());
    out.y = Block(std::move(f.reflector.y));
    out.t = std::move(f.reflector.t);
    a.block(k, k) = Block(std::move(f.r));
  } else {
    // [R; U V^T] = diag(I, U) [R; V^T]: only the r rows of V^T are reduced.
    const LowRankBlock& lr = aik.low_rank();
    TpFactorization f = tp_qr(rkk, lr.v.transpose());
    if (lr.rank() > 0) out.y = Block(LowRankBlock{lr.u, f.reflector.y.transpose()});
    else out.y = Block(LowRankBlock::zero(lr.rows(), rkk.cols()));
    out.t = std::move(f.reflector.t);
    a.block(k, k) = Block(std::move(f.r));
  }
  aik = aik.zero_like();
  return out;
}

void tile_apply_trap_reflector(const TileUpdate& ref, BlrMatrix& a, Index k, Index i, Index j,
                               const ToleranceConfig& cfg, Op op) {
  require(i > k, "tile_apply_trap_reflector: needs i > k");
  if (ref.t.isZero(0.0)) return;
  BlockSum sum;
  sum.add(a.block(k, j));
  sum.add(multiply(ref.y, Op::Trans, a.block(i, j)));
  const Block w = multiply(Block(ref.t), op, sum.take(cfg));
  accumulate(a.block(i, j), multiply(ref.y, Op::NoTrans, w), -1.0, cfg);
  accumulate(a.block(k, j), w, -1.0, cfg);
}

// Workspace --------------------------------------------------------------------

BlrStructure mgs_r_structure(const BlrStructure& a) {
  BlrStructure s(a.n(), a.n(), a.b());
  for (Index j = 0; j < s.p(); ++j)
    for (Index k = 0; k < s.q(); ++k)
      if (j != k && a.admissible(j, k)) s.set_admissible(j, k, true);
  return s;
}

FactorizationWorkspace::FactorizationWorkspace(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg)
    : algo_(algo), cfg_(cfg), a_(a) {
  cfg_.validate();
  a_.validate();
  const Index q = a_.block_cols();
  switch (algo_) {
    case Algorithm::BlockedHouseholder:
      check_householder_input(a_);
      columns_.resize(static_cast<std::size_t>(q));
      break;
    case Algorithm::TiledHouseholder:
      check_householder_input(a_);
      tiles_ = TileReflectorStore(a_.block_rows(), q);
      break;
    case Algorithm::BlockedMgs:
      require(a_.block_rows() >= a_.block_cols(), "blocked MGS needs p >= q");
      q_ = BlrMatrix(a_.structure());
      r_ = BlrMatrix(mgs_r_structure(a_.structure()));
      mgs_deficient_.assign(static_cast<std::size_t>(q), 0);
      break;
  }
}

std::vector<std::vector<Task>> loop_phases(Algorithm algo, Index p, Index q) {
  require(p >= q && q >= 1, "loop_phases: needs p >= q >= 1");
  std::vector<std::vector<Task>> out;
  auto push = [&out](std::vector<Task> phase) {
    if (!phase.empty()) out.push_back(std::move(phase));
  };
  for (Index k = 0; k < q; ++k) {
    switch (algo) {
      case Algorithm::BlockedHouseholder: {
        push({Task{TaskKind::PanelQR, k, -1, -1}});
        std::vector<Task> apply;
        for (Index j = k + 1; j < q; ++j) apply.push_back(Task{TaskKind::ApplyColumnReflector, k, -1, j});
        push(std::move(apply));
        break;
      }
      case Algorithm::TiledHouseholder: {
        push({Task{TaskKind::DiagQR, k, -1, -1}});
        std::vector<Task> apply;
        for (Index j = k + 1; j < q; ++j) apply.push_back(Task{TaskKind::ApplyBlockReflector, k, -1, j});
        push(std::move(apply));
        for (Index i = k + 1; i < p; ++i) {
          push({Task{TaskKind::UpdateQR, k, i, -1}});
          std::vector<Task> trap;
          for (Index j = k + 1; j < q; ++j) trap.push_back(Task{TaskKind::ApplyTrapReflector, k, i, j});
          push(std::move(trap));
        }
        break;
      }
      case Algorithm::BlockedMgs: {
        push({Task{TaskKind::PanelQR, k, -1, -1}});
        std::vector<Task> project, update;
        for (Index j = k + 1; j < q; ++j) {
          project.push_back(Task{TaskKind::MgsProject, k, -1, j});
          update.push_back(Task{TaskKind::MgsUpdate, k, -1, j});
        }
        push(std::move(project));
        push(std::move(update));
        break;
      }
    }
  }
  return out;
}

std::vector<std::vector<Task>> FactorizationWorkspace::phases() const {
  return loop_phases(algo_, a_.block_rows(), a_.block_cols());
}

void FactorizationWorkspace::run(const Task& task) {
  const Index k = task.k;
  switch (task.kind) {
    case TaskKind::PanelQR:
      if (algo_ == Algorithm::BlockedHouseholder) {
        columns_[static_cast<std::size_t>(k)] = triangularize_block_column(a_, k, cfg_);
      } else if (algo_ == Algorithm::BlockedMgs) {
        std::vector<Index> heights;
        const Matrix stack = stack_v_parts(a_, k, 0, heights);
        MgsFactorization f = mgs_panel_qr(stack);
        std::vector<Block> qcol = unstack(a_, k, 0, f.q, heights);
        for (Index i = 0; i < a_.block_rows(); ++i) q_.block(i, k) = std::move(qcol[static_cast<std::size_t>(i)]);
        r_.block(k, k) = Block(std::move(f.r));
        mgs_deficient_[static_cast<std::size_t>(k)] = f.rank_deficient ? 1 : 0;
      } else {
        throw std::logic_error("PanelQR is not a tiled task");
      }
      return;
    case TaskKind::ApplyColumnReflector:
      apply_block_column_reflector(columns_[static_cast<std::size_t>(k)], a_, task.j, cfg_, Op::Trans);
      return;
    case TaskKind::DiagQR:
      tiles_.diag[static_cast<std::size_t>(k)] = tile_diag_qr(a_, k);
      return;
    case TaskKind::ApplyBlockReflector:
      tile_apply_block_reflector(tiles_.diag[static_cast<std::size_t>(k)], a_, k, task.j, Op::Trans);
      return;
    case TaskKind::UpdateQR:
      tiles_.set_update(task.i, k, tile_update_qr(a_, k, task.i));
      return;
    case TaskKind::ApplyTrapReflector:
      tile_apply_trap_reflector(tiles_.update(task.i, k), a_, k, task.i, task.j, cfg_, Op::Trans);
      return;
    case TaskKind::MgsProject: {
      BlockSum sum;
      for (Index i = 0; i < a_.block_rows(); ++i) sum.add(multiply(q_.block(i, k), Op::Trans, a_.block(i, task.j)));
      r_.block(k, task.j) = to_kind(sum.take(cfg_), r_.structure().admissible(k, task.j), cfg_);
      return;
    }
    case TaskKind::MgsUpdate:
      for (Index i = 0; i < a_.block_rows(); ++i)
        accumulate(a_.block(i, task.j), multiply(q_.block(i, k), Op::NoTrans, r_.block(k, task.j)), -1.0, cfg_);
      return;
  }
}

FactorizationResult FactorizationWorkspace::finish() {
  FactorizationResult out;
  out.algorithm = algo_;
  switch (algo_) {
    case Algorithm::BlockedHouseholder:
      out.r = std::move(a_);
      out.columns = std::move(columns_);
      break;
    case Algorithm::TiledHouseholder:
      out.r = std::move(a_);
      out.tiles = std::move(tiles_);
      break;
    case Algorithm::BlockedMgs:
      out.r = std::move(r_);
      out.q_explicit = std::move(q_);
      for (char d : mgs_deficient_) out.rank_deficient = out.rank_deficient || d != 0;
      break;
  }
  return out;
}

FactorizationResult factorize(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg) {
  FactorizationWorkspace ws(algo, a, cfg);
  for (const auto& phase : ws.phases())
    for (const Task& t : phase) ws.run(t);
  return ws.finish();
}

FactorizationResult blocked_householder_qr(const BlrMatrix& a, const ToleranceConfig& cfg) {
  return factorize(Algorithm::BlockedHouseholder, a, cfg);
}

FactorizationResult tiled_householder_qr(const BlrMatrix& a, const ToleranceConfig& cfg) {
  return factorize(Algorithm::TiledHouseholder, a, cfg);
}

FactorizationResult blocked_mgs_qr(const BlrMatrix& a, const ToleranceConfig& cfg) {
  return factorize(Algorithm::BlockedMgs, a, cfg);
}

// Q application ----------------------------------------------------------------

namespace {

// Y^T C for one reflector entry against a dense row slice.
template <typename Slice>
Matrix entry_t_times(const Block& y, const Slice& c) {
  if (y.is_dense()) return y.dense().transpose() * c;
  const auto& lr = y.low_rank();
  if (lr.rank() == 0) return Matrix::Zero(lr.cols(), c.cols());
  return lr.v * (lr.u.transpose() * c);
}

template <typename Slice>
void subtract_entry_times(Slice&& c, const Block& y, const Matrix& w) {
  if (y.is_dense()) {
    c.noalias() -= y.dense() * w;
    return;
  }
  const auto& lr = y.low_rank();
  if (lr.rank() == 0) return;
  const Matrix vw = lr.v.transpose() * w;
  c.noalias() -= lr.u * vw;
}

void apply_column_dense(const ReflectorColumn& ref, Matrix& c, Index b, bool transpose) {
  const Index p = ref.col + static_cast<Index>(ref.entries.size());
  Matrix s = Matrix::Zero(ref.t.rows(), c.cols());
  for (Index i = ref.col; i < p; ++i) s += entry_t_times(ref.entry(i), c.middleRows(i * b, b));
  const Matrix w = transpose ? Matrix(ref.t.transpose() * s) : Matrix(ref.t * s);
  for (Index i = ref.col; i < p; ++i) subtract_entry_times(c.middleRows(i * b, b), ref.entry(i), w);
}

void apply_trap_dense(const TileUpdate& ref, Matrix& c, Index b, Index k, Index i, bool transpose) {
  Matrix s = c.middleRows(k * b, b);
  s += entry_t_times(ref.y, c.middleRows(i * b, b));
  const Matrix w = transpose ? Matrix(ref.t.transpose() * s) : Matrix(ref.t * s);
  c.middleRows(k * b, b) -= w;
  subtract_entry_times(c.middleRows(i * b, b), ref.y, w);
}

void require_householder(const FactorizationResult& f, Algorithm algo, const Matrix& c) {
  require(f.algorithm == algo, "Q application called on the wrong factorization kind");
  require(c.rows() == f.r.rows(), "Q application: row dimension mismatch");
}

}  // namespace

Matrix blocked_apply_q(const FactorizationResult& f, const Matrix& c, bool transpose) {
  require_householder(f, Algorithm::BlockedHouseholder, c);
  const Index b = f.r.block_size();
  const auto nk = static_cast<Index>(f.columns.size());
  Matrix out = c;
  if (transpose) {
    for (Index k = 0; k < nk; ++k) apply_column_dense(f.columns[static_cast<std::size_t>(k)], out, b, true);
  } else {
    for (Index k = nk - 1; k >= 0; --k) apply_column_dense(f.columns[static_cast<std::size_t>(k)], out, b, false);
  }
  return out;
}

Matrix tiled_apply_q(const FactorizationResult& f, const Matrix& c, bool transpose) {
  require_householder(f, Algorithm::TiledHouseholder, c);
  const Index b = f.r.block_size();
  const Index p = f.tiles.p;
  const Index q = f.tiles.q;
  Matrix out = c;
  auto diag = [&](Index k) {
    const auto& ref = f.tiles.diag[static_cast<std::size_t>(k)];
    out.middleRows(k * b, b) = apply_wy(ref, Matrix(out.middleRows(k * b, b)), transpose ? Op::Trans : Op::NoTrans);
  };
  if (transpose) {
    for (Index k = 0; k < q; ++k) {
      diag(k);
      for (Index i = k + 1; i < p; ++i) apply_trap_dense(f.tiles.update(i, k), out, b, k, i, true);
    }
  } else {
    for (Index k = q - 1; k >= 0; --k) {
      for (Index i = p - 1; i > k; --i) apply_trap_dense(f.tiles.update(i, k), out, b, k, i, false);
      diag(k);
    }
  }
  return out;
}

BlrMatrix blocked_apply_q(const FactorizationResult& f, BlrMatrix c, bool transpose, const ToleranceConfig& cfg) {
  require(f.algorithm == Algorithm::BlockedHouseholder, "blocked_apply_q: wrong factorization kind");
  require(c.rows() == f.r.rows() && c.block_size() == f.r.block_size(), "blocked_apply_q: grid mismatch");
  const auto nk = static_cast<Index>(f.columns.size());
  const Op op = transpose ? Op::Trans : Op::NoTrans;
  for (Index s = 0; s < nk; ++s) {
    const Index k = transpose ? s : nk - 1 - s;
    for (Index j = 0; j < c.block_cols(); ++j)
      apply_block_column_reflector(f.columns[static_cast<std::size_t>(k)], c, j, cfg, op);
  }
  return c;
}

BlrMatrix tiled_apply_q(const FactorizationResult& f, BlrMatrix c, bool transpose, const ToleranceConfig& cfg) {
  require(f.algorithm == Algorithm::TiledHouseholder, "tiled_apply_q: wrong factorization kind");
  require(c.rows() == f.r.rows() && c.block_size() == f.r.block_size(), "tiled_apply_q: grid mismatch");
  const Index p = f.tiles.p;
  const Index q = f.tiles.q;
  const Index nc = c.block_cols();
  if (transpose) {
    for (Index k = 0; k < q; ++k) {
      for (Index j = 0; j < nc; ++j) tile_apply_block_reflector(f.tiles.diag[static_cast<std::size_t>(k)], c, k, j, Op::Trans);
      for (Index i = k + 1; i < p; ++i)
        for (Index j = 0; j < nc; ++j) tile_apply_trap_reflector(f.tiles.update(i, k), c, k, i, j, cfg, Op::Trans);
    }
  } else {
    for (Index k = q - 1; k >= 0; --k) {
      for (Index i = p - 1; i > k; --i)
        for (Index j = 0; j < nc; ++j) tile_apply_trap_reflector(f.tiles.update(i, k), c, k, i, j, cfg, Op::NoTrans);
      for (Index j = 0; j < nc; ++j)
        tile_apply_block_reflector(f.tiles.diag[static_cast<std::size_t>(k)], c, k, j, Op::NoTrans);
    }
  }
  return c;
}

Matrix apply_q(const FactorizationResult& f, const Matrix& c, bool transpose) {
  switch (f.algorithm) {
    case Algorithm::BlockedHouseholder: return blocked_apply_q(f, c, transpose);
    case Algorithm::TiledHouseholder: return tiled_apply_q(f, c, transpose);
    case Algorithm::BlockedMgs: {
      const Matrix q = blr_to_dense(f.q_explicit);
      require(c.rows() == (transpose ? q.rows() : q.cols()), "apply_q: row dimension mismatch");
      return transpose ? Matrix(q.transpose() * c) : Matrix(q * c);
    }
  }
  throw std::logic_error("apply_q: unknown algorithm");
}

Matrix economy_q(const FactorizationResult& f) {
  if (f.algorithm == Algorithm::BlockedMgs) return blr_to_dense(f.q_explicit);
  return apply_q(f, Matrix::Identity(f.r.rows(), f.r.cols()), false);
}

Matrix r_dense(const FactorizationResult& f) { return blr_to_dense(f.r); }

}  // namespace blrqr
