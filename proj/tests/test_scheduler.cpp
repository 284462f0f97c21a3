// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <cstring>
#include <set>

#include "blrqr/io.hpp"
#include "blrqr/scheduler.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace blrqr;

namespace {

std::string matrix_bytes(const Matrix& m) {
  std::string out(static_cast<std::size_t>(m.size()) * sizeof(double), '\0');
  std::memcpy(out.data(), m.data(), out.size());
  return out;
}

// R and the economy Q, byte for byte.
std::string result_bytes(const FactorizationResult& f) { return blr1_bytes(f.r) + matrix_bytes(economy_q(f)); }

std::size_t node(const TaskDag& dag, TaskKind kind, Index k, Index i, Index j) {
  const auto at = dag.find(Task{kind, k, i, j});
  REQUIRE(at.has_value());
  return *at;
}

constexpr Algorithm kAlgorithms[] = {Algorithm::BlockedMgs, Algorithm::BlockedHouseholder,
                                     Algorithm::TiledHouseholder};

}  // namespace

TEST_CASE("task priorities and labels") {
  CHECK(task_priority(TaskKind::DiagQR) > task_priority(TaskKind::UpdateQR));
  CHECK(task_priority(TaskKind::UpdateQR) > task_priority(TaskKind::ApplyTrapReflector));
  CHECK(task_priority(TaskKind::UpdateQR) > task_priority(TaskKind::ApplyBlockReflector));
  CHECK(Task{TaskKind::ApplyTrapReflector, 0, 1, 2}.label() == "ApplyTrapReflector(0,1,2)");
}

TEST_CASE("build_tiled_dag p = q = 1") {
  const TaskDag dag = build_tiled_dag(1, 1);
  REQUIRE(dag.nodes.size() == 1);
  CHECK(dag.nodes[0] == Task{TaskKind::DiagQR, 0, -1, -1});
  CHECK(dag.edges.empty());
}

TEST_CASE("build_tiled_dag p = q = 2") {
  const TaskDag dag = build_tiled_dag(2, 2);
  CHECK(dag.nodes.size() == 5);
  const auto d0 = node(dag, TaskKind::DiagQR, 0, -1, -1);
  const auto ab = node(dag, TaskKind::ApplyBlockReflector, 0, -1, 1);
  const auto up = node(dag, TaskKind::UpdateQR, 0, 1, -1);
  const auto tr = node(dag, TaskKind::ApplyTrapReflector, 0, 1, 1);
  const auto d1 = node(dag, TaskKind::DiagQR, 1, -1, -1);
  CHECK(dag.has_edge(d0, ab));
  CHECK(dag.has_edge(d0, up));
  CHECK(dag.has_edge(up, tr));
  CHECK(dag.has_edge(ab, tr));
  CHECK(dag.has_edge(tr, d1));
  CHECK_FALSE(dag.has_edge(ab, up));
  // a chain through every node: the only topological order is loop order
  const std::vector<std::size_t> loop{0, 1, 2, 3, 4};
  CHECK(dag.topological_order() == loop);
  CHECK(dag.acyclic());
}

TEST_CASE("build_tiled_dag p = q = 3 node count and edge rules") {
  const TaskDag dag = build_tiled_dag(3, 3);
  CHECK(dag.nodes.size() == 14);
  for (Index k = 0; k < 3; ++k) {
    for (Index i = k + 1; i + 1 < 3; ++i)
      CHECK(dag.has_edge(node(dag, TaskKind::UpdateQR, k, i, -1), node(dag, TaskKind::UpdateQR, k, i + 1, -1)));
    for (Index i = k + 1; i + 1 < 3; ++i)
      for (Index j = k + 1; j < 3; ++j)
        CHECK(dag.has_edge(node(dag, TaskKind::ApplyTrapReflector, k, i, j),
                           node(dag, TaskKind::ApplyTrapReflector, k, i + 1, j)));
    for (Index j = k + 1; j < 3; ++j)
      CHECK(dag.has_edge(node(dag, TaskKind::DiagQR, k, -1, -1), node(dag, TaskKind::ApplyBlockReflector, k, -1, j)));
  }
  // tile (1,1) is last written in sweep 0 by ApplyTrap(0,1,1)
  CHECK(dag.has_edge(node(dag, TaskKind::ApplyTrapReflector, 0, 1, 1), node(dag, TaskKind::DiagQR, 1, -1, -1)));
  // tile (2,2) feeds the next sweep's trapezoidal update
  CHECK(dag.has_edge(node(dag, TaskKind::ApplyTrapReflector, 0, 2, 2), node(dag, TaskKind::ApplyTrapReflector, 1, 2, 2)));
}

TEST_CASE("tall grids add the extra update chain") {
  // sum over k of (p - k)(q - k)
  CHECK(build_tiled_dag(3, 2).nodes.size() == 3 * 2 + 2 * 1);
  CHECK(build_tiled_dag(5, 3).nodes.size() == 15 + 8 + 3);
  CHECK_THROWS_AS(build_tiled_dag(2, 3), std::invalid_argument);
}

TEST_CASE("DAGs are acyclic and the smaller grid is an induced subgraph") {
  for (Algorithm algo : kAlgorithms) {
    for (Index p = 1; p <= 5; ++p) {
      const TaskDag big = build_dag(algo, p, p);
      CHECK(big.acyclic());
      for (Index p2 = 1; p2 <= p; ++p2) {
        const TaskDag small = build_dag(algo, p2, p2);
        if (algo != Algorithm::TiledHouseholder) continue;  // blocked tasks span whole columns
        std::vector<std::size_t> map;
        for (const Task& t : small.nodes) {
          const auto at = big.find(t);
          REQUIRE(at.has_value());
          map.push_back(*at);
        }
        for (std::size_t u = 0; u < small.nodes.size(); ++u)
          for (std::size_t v = 0; v < small.nodes.size(); ++v)
            CHECK(small.has_edge(u, v) == big.has_edge(map[u], map[v]));
      }
    }
  }
}

TEST_CASE("topological order checks") {
  const TaskDag dag = build_tiled_dag(3, 3);
  std::vector<std::size_t> order = dag.topological_order();
  CHECK(dag.is_topological(order));
  std::swap(order.front(), order.back());
  CHECK_FALSE(dag.is_topological(order));
  CHECK_FALSE(dag.is_topological({0, 1}));
}

TEST_CASE("to_dot lists every node and edge") {
  const TaskDag dag = build_tiled_dag(2, 2);
  const std::string dot = dag.to_dot();
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find("DiagQR(1)") != std::string::npos);
  std::size_t arrows = 0;
  for (std::size_t at = dot.find("->"); at != std::string::npos; at = dot.find("->", at + 1)) ++arrows;
  CHECK(arrows == dag.edges.size());
}

TEST_CASE("execute_sequential on one tile equals the dense kernel") {
  std::mt19937_64 rng(31);
  const Matrix d = test::random_matrix(8, 8, rng);
  const BlrMatrix a = test::dense_blr(d, 8);
  const auto want = qr_compact_wy(d);
  for (Algorithm algo : {Algorithm::BlockedHouseholder, Algorithm::TiledHouseholder}) {
    const FactorizationResult f = execute_sequential(algo, a, ToleranceConfig{});
    CHECK(r_dense(f) == want.r);
  }
}

TEST_CASE("all executors agree bitwise with sequential") {
  const ToleranceConfig cfg{1e-10, 0.5};
  auto [a, dense] = test::random_weak_blr(96, 48, 8, 1, 7);
  for (Algorithm algo : kAlgorithms) {
    CAPTURE(algorithm_name(algo));
    std::vector<Task> trace;
    ScopedFlopCounting counting;
    const std::string want = result_bytes(execute_sequential(algo, a, cfg, &trace));
    const FlopReport want_flops = counting.report();
    CHECK(trace.size() == build_dag(algo, a.block_rows(), a.block_cols()).nodes.size());
    for (Executor e : {Executor::ForkJoin, Executor::TaskGraph}) {
      for (int threads : {1, 2, 4}) {
        CAPTURE(executor_name(e));
        CAPTURE(threads);
        flop_counter().reset();
        ExecOptions opts;
        opts.threads = threads;
        opts.check_conflicts = true;
        CHECK(result_bytes(execute(e, algo, a, cfg, opts)) == want);
        CHECK(counting.report() == want_flops);
      }
    }
  }
}

TEST_CASE("task-graph execution order is topological and runs each task once") {
  auto [a, dense] = test::random_weak_blr(64, 48, 8, 1, 8);
  const TaskDag dag = build_tiled_dag(a.block_rows(), a.block_cols());
  std::vector<Task> trace;
  ExecOptions opts;
  opts.threads = 3;
  opts.trace = &trace;
  (void)execute_taskgraph(dag, a, ToleranceConfig{}, opts);
  std::vector<std::size_t> order;
  for (const Task& t : trace) order.push_back(*dag.find(t));
  CHECK(dag.is_topological(order));
  std::set<std::size_t> unique(order.begin(), order.end());
  CHECK(unique.size() == dag.nodes.size());
}

TEST_CASE("single-threaded task graph follows priorities") {
  auto [a, dense] = test::random_weak_blr(32, 32, 8, 1, 9);
  const TaskDag dag = build_tiled_dag(4, 4);
  std::vector<Task> trace;
  ExecOptions opts;
  opts.trace = &trace;
  (void)execute_taskgraph(dag, a, ToleranceConfig{}, opts);
  // after DiagQR(0) both ApplyBlock(0,j) and UpdateQR(0,1) are ready; the
  // update wins
  REQUIRE(trace.size() >= 2);
  CHECK(trace[1] == Task{TaskKind::UpdateQR, 0, 1, -1});
}

TEST_CASE("any topological order reproduces loop order bitwise") {
  std::mt19937_64 rng(10);
  auto [a, dense] = test::random_weak_blr(48, 48, 8, 1, 10);
  for (Algorithm algo : kAlgorithms) {
    const TaskDag dag = build_dag(algo, a.block_rows(), a.block_cols());
    const std::string want = result_bytes(execute_sequential(algo, a, ToleranceConfig{}));
    for (int trial = 0; trial < 5; ++trial)
      CHECK(result_bytes(execute_in_order(dag, test::random_topological_order(dag, rng), a, ToleranceConfig{})) == want);
  }
  const TaskDag dag = build_tiled_dag(6, 6);
  std::vector<std::size_t> bad = dag.topological_order();
  std::reverse(bad.begin(), bad.end());
  CHECK_THROWS_AS(execute_in_order(dag, bad, a, ToleranceConfig{}), std::invalid_argument);
}

TEST_CASE("cyclic graph is reported as deadlock") {
  auto [a, dense] = test::random_weak_blr(16, 16, 8, 1, 11);
  TaskDag dag = build_tiled_dag(2, 2);
  CHECK_FALSE(dag.edges.empty());
  // close the chain into a cycle
  dag.edges.emplace_back(4, 0);
  dag.successors[4].push_back(0);
  ++dag.ready_count[0];
  CHECK_FALSE(dag.acyclic());
  for (int threads : {1, 2}) {
    ExecOptions opts;
    opts.threads = threads;
    CHECK_THROWS_AS(execute_taskgraph(dag, a, ToleranceConfig{}, opts), std::logic_error);
  }
}

TEST_CASE("mismatched DAG is rejected") {
  auto [a, dense] = test::random_weak_blr(16, 16, 8, 1, 12);
  CHECK_THROWS_AS(execute_taskgraph(build_tiled_dag(3, 3), a, ToleranceConfig{}, ExecOptions{}), std::invalid_argument);
}

TEST_CASE("invalid tolerance is rejected by every executor") {
  auto [a, dense] = test::random_weak_blr(32, 32, 8, 1, 13);
  const ToleranceConfig bad{2.0, 0.5};
  ExecOptions opts;
  opts.threads = 2;
  for (Executor e : {Executor::Sequential, Executor::ForkJoin, Executor::TaskGraph})
    CHECK_THROWS_AS(execute(e, Algorithm::TiledHouseholder, a, bad, opts), std::invalid_argument);
}

TEST_CASE("BLRQR_THREADS overrides the requested count") {
  ::setenv("BLRQR_THREADS", "3", 1);
  CHECK(resolve_threads(1) == 3);
  ::setenv("BLRQR_THREADS", "junk", 1);
  CHECK(resolve_threads(2) == 2);
  ::unsetenv("BLRQR_THREADS");
  CHECK(resolve_threads(5) == 5);
  CHECK_THROWS_AS(resolve_threads(0), std::invalid_argument);
}

TEST_CASE("executor and algorithm names round trip") {
  for (Executor e : {Executor::Sequential, Executor::ForkJoin, Executor::TaskGraph})
    CHECK(parse_executor(executor_name(e)) == e);
  for (Algorithm algo : kAlgorithms) CHECK(parse_algorithm(algorithm_name(algo)) == algo);
  CHECK_FALSE(parse_executor("openmp").has_value());
  CHECK_FALSE(parse_algorithm("cholesky").has_value());
}
