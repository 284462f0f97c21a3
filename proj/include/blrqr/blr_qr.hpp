// SPDX-License-Identifier: Apache-2.0
//
// QR factorizations of BLR matrices: blocked modified Gram-Schmidt, blocked
// Householder and tiled Householder, together with their Q-application
// routines and the per-task kernels the executors drive.

#pragma once

#include <optional>
#include <vector>

#include "blrqr/blr.hpp"
#include "blrqr/dense_kernels.hpp"
#include "blrqr/lowrank.hpp"
#include "blrqr/task.hpp"

namespace blrqr {

enum class Algorithm { BlockedMgs, BlockedHouseholder, TiledHouseholder };

/// Reflector of one block column: Q_k = I - Y T Y^T where Y has one block per
/// block row i >= col. entries[i - col] is low-rank exactly when the
/// factorized block A(i, col) was.
struct ReflectorColumn {
  Index col = 0;
  std::vector<Block> entries;
  Matrix t;

  const Block& entry(Index i) const { return entries[static_cast<std::size_t>(i - col)]; }
};

/// Structured reflector I - [I; Y] T [I; Y]^T that annihilated tile (i, k).
struct TileUpdate {
  Block y;
  Matrix t;
};

struct TileReflectorStore {
  Index p = 0;
  Index q = 0;
  std::vector<WYReflector> diag;                 // one per k < q
  std::vector<std::optional<TileUpdate>> updates;  // (i, k) at i * q + k, i > k

  TileReflectorStore() = default;
  TileReflectorStore(Index p_, Index q_);
  const TileUpdate& update(Index i, Index k) const;
  TileUpdate& update(Index i, Index k);
  void set_update(Index i, Index k, TileUpdate u);
};

struct FactorizationResult {
  Algorithm algorithm = Algorithm::BlockedHouseholder;
  /// Householder: m x n with the structure of the input, zero below the
  /// block diagonal. MGS: n x n.
  BlrMatrix r;
  BlrMatrix q_explicit;                  // MGS only
  std::vector<ReflectorColumn> columns;  // blocked Householder only
  TileReflectorStore tiles;              // tiled Householder only
  bool rank_deficient = false;           // MGS panel signalled rank deficiency
};

// Blocked Householder kernels ------------------------------------------------

/// Triangularizes block column k of a in place: R(k,k) ends up in a(k,k) and
/// the blocks below become zero of their kind.
ReflectorColumn triangularize_block_column(BlrMatrix& a, Index k, const ToleranceConfig& cfg);

/// Applies Q_k^T (Op::Trans) or Q_k (Op::NoTrans) to block column j of a.
void apply_block_column_reflector(const ReflectorColumn& ref, BlrMatrix& a, Index j,
                                  const ToleranceConfig& cfg, Op op = Op::Trans);

// Tiled Householder kernels --------------------------------------------------

WYReflector tile_diag_qr(BlrMatrix& a, Index k);
void tile_apply_block_reflector(const WYReflector& ref, BlrMatrix& a, Index k, Index j, Op op = Op::Trans);
TileUpdate tile_update_qr(BlrMatrix& a, Index k, Index i);
void tile_apply_trap_reflector(const TileUpdate& ref, BlrMatrix& a, Index k, Index i, Index j,
                               const ToleranceConfig& cfg, Op op = Op::Trans);

// Whole factorizations (sequential loop order) -------------------------------

FactorizationResult blocked_householder_qr(const BlrMatrix& a, const ToleranceConfig& cfg);
FactorizationResult tiled_householder_qr(const BlrMatrix& a, const ToleranceConfig& cfg);
/// Any admissibility pattern is accepted; diagonal blocks must be dense.
FactorizationResult blocked_mgs_qr(const BlrMatrix& a, const ToleranceConfig& cfg);

FactorizationResult factorize(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg);

// Q application ----------------------------------------------------------------

/// Q c (transpose = false) or Q^T c for a dense c with m rows.
Matrix blocked_apply_q(const FactorizationResult& f, const Matrix& c, bool transpose);
Matrix tiled_apply_q(const FactorizationResult& f, const Matrix& c, bool transpose);
/// BLR variants; c needs the same block size and block-row count as the input.
BlrMatrix blocked_apply_q(const FactorizationResult& f, BlrMatrix c, bool transpose, const ToleranceConfig& cfg);
BlrMatrix tiled_apply_q(const FactorizationResult& f, BlrMatrix c, bool transpose, const ToleranceConfig& cfg);

/// Dispatches on f.algorithm. For MGS this multiplies by the explicit Q
/// (m x n); transpose = true gives Q^T c (n rows).
Matrix apply_q(const FactorizationResult& f, const Matrix& c, bool transpose);

/// Economy Q (m x n).
Matrix economy_q(const FactorizationResult& f);

// Task-level driver ------------------------------------------------------------

/// Loop-order task list of a p x q block grid split into barrier-separated
/// phases; tasks inside one phase are mutually independent.
std::vector<std::vector<Task>> loop_phases(Algorithm algo, Index p, Index q);

/// Mutable state of one factorization, advanced one task at a time. Tasks
/// touching disjoint blocks may run concurrently.
class FactorizationWorkspace {
 public:
  FactorizationWorkspace(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg);

  Algorithm algorithm() const { return algo_; }
  const BlrMatrix& matrix() const { return a_; }

  /// loop_phases for this matrix's grid.
  std::vector<std::vector<Task>> phases() const;

  void run(const Task& task);

  /// Consumes the workspace.
  FactorizationResult finish();

 private:
  Algorithm algo_;
  ToleranceConfig cfg_;
  BlrMatrix a_;
  std::vector<ReflectorColumn> columns_;
  TileReflectorStore tiles_;
  BlrMatrix q_;
  BlrMatrix r_;
  std::vector<char> mgs_deficient_;
};

/// Structure of an n x n R factor taking admissibility from the leading q x q
/// cells of a's structure.
BlrStructure mgs_r_structure(const BlrStructure& a);

/// Dense R (m x n for Householder, n x n for MGS).
Matrix r_dense(const FactorizationResult& f);

}  // namespace blrqr
