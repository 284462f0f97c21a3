// SPDX-License-Identifier: Apache-2.0
//
// Executors for the task-level factorization drivers: sequential loop order,
// fork-join with a barrier after every parallel loop, and a priority task
// graph built from the blocks each task reads and writes.

#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blrqr/blr_qr.hpp"

namespace blrqr {

enum class Executor { Sequential, ForkJoin, TaskGraph };

std::string executor_name(Executor e);
std::optional<Executor> parse_executor(const std::string& name);  // seq | forkjoin | taskgraph
std::string algorithm_name(Algorithm a);
std::optional<Algorithm> parse_algorithm(const std::string& name);  // mgs | blocked-hh | tiled-hh

/// A block-level piece of state a task touches: a matrix tile or a stored
/// reflector.
struct TaskAccess {
  enum class Space { Tile, Reflector, TileReflector, QTile, RTile };
  Space space = Space::Tile;
  Index x = -1;
  Index y = -1;
  bool write = false;

  bool same_resource(const TaskAccess& o) const { return space == o.space && x == o.x && y == o.y; }
};

/// Read and write sets of one task on a p-block-row grid.
std::vector<TaskAccess> task_accesses(Algorithm algo, const Task& task, Index p);

struct TaskDag {
  Algorithm algorithm = Algorithm::TiledHouseholder;
  Index p = 0;
  Index q = 0;
  std::vector<Task> nodes;                                // loop order
  std::vector<std::pair<std::size_t, std::size_t>> edges;  // (u, v): u finishes before v; sorted, unique
  std::vector<std::vector<std::size_t>> successors;
  std::vector<int> ready_count;  // number of predecessors

  std::optional<std::size_t> find(const Task& t) const;
  bool has_edge(std::size_t u, std::size_t v) const;
  bool acyclic() const;
  /// Kahn's algorithm, preferring the earliest node in loop order; throws on
  /// a cycle.
  std::vector<std::size_t> topological_order() const;
  bool is_topological(const std::vector<std::size_t>& order) const;
  std::string to_dot() const;
};

/// Dependency graph of the loop-order tasks of `algo` on a p x q grid: an edge
/// joins every pair of tasks whose access sets conflict (read after write,
/// write after read, write after write), in loop order.
TaskDag build_dag(Algorithm algo, Index p, Index q);
TaskDag build_tiled_dag(Index p, Index q);

struct ExecOptions {
  int threads = 1;
  /// Abort if two running tasks share a written block. Also enabled by the
  /// BLRQR_CHECK_CONFLICTS environment variable.
  bool check_conflicts = false;
  /// Receives the tasks in the order they started.
  std::vector<Task>* trace = nullptr;
};

/// BLRQR_THREADS, when set to a positive integer, replaces `requested`.
int resolve_threads(int requested);

FactorizationResult execute_sequential(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg,
                                       std::vector<Task>* trace = nullptr);

/// Runs the DAG's nodes one at a time in `order`, which must be topological.
FactorizationResult execute_in_order(const TaskDag& dag, const std::vector<std::size_t>& order, const BlrMatrix& a,
                                     const ToleranceConfig& cfg);

FactorizationResult execute_forkjoin(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg,
                                     const ExecOptions& opts);

/// Workers repeatedly take the ready task of highest priority, ties broken by
/// lexicographic (k, i, j). Throws std::logic_error when tasks remain but none
/// can become ready.
FactorizationResult execute_taskgraph(const TaskDag& dag, const BlrMatrix& a, const ToleranceConfig& cfg,
                                      const ExecOptions& opts);

/// Dispatch helper; builds the DAG for the task-graph executor.
FactorizationResult execute(Executor e, Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg,
                            const ExecOptions& opts);

}  // namespace blrqr
