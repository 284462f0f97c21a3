// SPDX-License-Identifier: Apache-2.0
//
// Units of work shared by the factorizations and the executors.

#pragma once

#include <compare>
#include <string>
#include <tuple>

#include "blrqr/linalg.hpp"

namespace blrqr {

enum class TaskKind {
  DiagQR,                // tiled: QR of diagonal tile (k,k)
  PanelQR,               // blocked: triangularize / orthogonalize block column k
  UpdateQR,              // tiled: annihilate tile (i,k) against (k,k)
  ApplyBlockReflector,   // tiled: diagonal reflector k onto tile (k,j)
  ApplyTrapReflector,    // tiled: reflector (i,k) onto tiles (k,j), (i,j)
  ApplyColumnReflector,  // blocked Householder: reflector column k onto column j
  MgsProject,            // blocked MGS: R(k,j) = Q(:,k)^T A(:,j)
  MgsUpdate,             // blocked MGS: A(:,j) -= Q(:,k) R(k,j)
};

std::string task_kind_name(TaskKind kind);

/// Static priority: larger runs first.
int task_priority(TaskKind kind);

/// Coordinates not used by a kind are left at -1.
struct Task {
  TaskKind kind = TaskKind::DiagQR;
  Index k = -1;
  Index i = -1;
  Index j = -1;

  /// Lexicographic (k, i, j).
  std::tuple<Index, Index, Index> coords() const { return {k, i, j}; }
  bool operator==(const Task&) const = default;
  std::string label() const;
};

}  // namespace blrqr
