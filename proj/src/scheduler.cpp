// SPDX-License-Identifier: Apache-2.0

#include "blrqr/scheduler.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace blrqr {

std::string executor_name(Executor e) {
  switch (e) {
    case Executor::Sequential: return "seq";
    case Executor::ForkJoin: return "forkjoin";
    case Executor::TaskGraph: return "taskgraph";
  }
  return "?";
}

std::optional<Executor> parse_executor(const std::string& name) {
  if (name == "seq" || name == "sequential") return Executor::Sequential;
  if (name == "forkjoin") return Executor::ForkJoin;
  if (name == "taskgraph") return Executor::TaskGraph;
  return std::nullopt;
}

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::BlockedMgs: return "mgs";
    case Algorithm::BlockedHouseholder: return "blocked-hh";
    case Algorithm::TiledHouseholder: return "tiled-hh";
  }
  return "?";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "mgs") return Algorithm::BlockedMgs;
  if (name == "blocked-hh") return Algorithm::BlockedHouseholder;
  if (name == "tiled-hh") return Algorithm::TiledHouseholder;
  return std::nullopt;
}

std::vector<TaskAccess> task_accesses(Algorithm algo, const Task& t, Index p) {
  using S = TaskAccess::Space;
  std::vector<TaskAccess> out;
  auto add = [&out](S s, Index x, Index y, bool w) { out.push_back(TaskAccess{s, x, y, w}); };
  const Index k = t.k;
  switch (t.kind) {
    case TaskKind::PanelQR:
      if (algo == Algorithm::BlockedHouseholder) {
        for (Index i = k; i < p; ++i) add(S::Tile, i, k, true);
        add(S::Reflector, k, -1, true);
      } else {
        for (Index i = 0; i < p; ++i) add(S::Tile, i, k, false);
        for (Index i = 0; i < p; ++i) add(S::QTile, i, k, true);
        add(S::RTile, k, k, true);
      }
      break;
    case TaskKind::ApplyColumnReflector:
      add(S::Reflector, k, -1, false);
      for (Index i = k; i < p; ++i) add(S::Tile, i, t.j, true);
      break;
    case TaskKind::DiagQR:
      add(S::Tile, k, k, true);
      add(S::Reflector, k, -1, true);
      break;
    case TaskKind::ApplyBlockReflector:
      add(S::Reflector, k, -1, false);
      add(S::Tile, k, t.j, true);
      break;
    case TaskKind::UpdateQR:
      add(S::Tile, k, k, true);
      add(S::Tile, t.i, k, true);
      add(S::TileReflector, t.i, k, true);
      break;
    case TaskKind::ApplyTrapReflector:
      add(S::TileReflector, t.i, k, false);
      add(S::Tile, k, t.j, true);
      add(S::Tile, t.i, t.j, true);
      break;
    case TaskKind::MgsProject:
      for (Index i = 0; i < p; ++i) add(S::QTile, i, k, false);
      for (Index i = 0; i < p; ++i) add(S::Tile, i, t.j, false);
      add(S::RTile, k, t.j, true);
      break;
    case TaskKind::MgsUpdate:
      for (Index i = 0; i < p; ++i) add(S::QTile, i, k, false);
      add(S::RTile, k, t.j, false);
      for (Index i = 0; i < p; ++i) add(S::Tile, i, t.j, true);
      break;
  }
  return out;
}

namespace {

using ResourceKey = std::tuple<int, Index, Index>;

ResourceKey key_of(const TaskAccess& acc) { return {static_cast<int>(acc.space), acc.x, acc.y}; }

// Runs before-first ordering used by the ready queue.
bool runs_before(const Task& a, const Task& b) {
  const int pa = task_priority(a.kind);
  const int pb = task_priority(b.kind);
  if (pa != pb) return pa > pb;
  return a.coords() < b.coords();
}

}  // namespace

std::optional<std::size_t> TaskDag::find(const Task& t) const {
  for (std::size_t n = 0; n < nodes.size(); ++n)
    if (nodes[n] == t) return n;
  return std::nullopt;
}

bool TaskDag::has_edge(std::size_t u, std::size_t v) const {
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
}

std::vector<std::size_t> TaskDag::topological_order() const {
  std::vector<int> pending = ready_count;
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t n = 0; n < nodes.size(); ++n)
    if (pending[n] == 0) ready.push(n);
  std::vector<std::size_t> order;
  order.reserve(nodes.size());
  while (!ready.empty()) {
    const std::size_t n = ready.top();
    ready.pop();
    order.push_back(n);
    for (std::size_t s : successors[n])
      if (--pending[s] == 0) ready.push(s);
  }
  if (order.size() != nodes.size()) throw std::logic_error("TaskDag: graph has a cycle");
  return order;
}

bool TaskDag::acyclic() const {
  try {
    topological_order();
    return true;
  } catch (const std::logic_error&) {
    return false;
  }
}

bool TaskDag::is_topological(const std::vector<std::size_t>& order) const {
  if (order.size() != nodes.size()) return false;
  std::vector<std::size_t> position(nodes.size(), nodes.size());
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    if (order[idx] >= nodes.size() || position[order[idx]] != nodes.size()) return false;
    position[order[idx]] = idx;
  }
  return std::all_of(edges.begin(), edges.end(), [&](const auto& e) { return position[e.first] < position[e.second]; });
}

std::string TaskDag::to_dot() const {
  std::ostringstream os;
  os << "digraph blrqr {\n";
  os << "  // " << algorithm_name(algorithm) << ", " << p << " x " << q << " blocks\n";
  for (std::size_t n = 0; n < nodes.size(); ++n)
    os << "  n" << n << " [label=\"" << nodes[n].label() << "\"];\n";
  for (const auto& [u, v] : edges) os << "  n" << u << " -> n" << v << ";\n";
  os << "}\n";
  return os.str();
}

TaskDag build_dag(Algorithm algo, Index p, Index q) {
  TaskDag dag;
  dag.algorithm = algo;
  dag.p = p;
  dag.q = q;
  for (auto& phase : loop_phases(algo, p, q))
    for (auto& t : phase) dag.nodes.push_back(t);

  struct History {
    std::optional<std::size_t> writer;
    std::vector<std::size_t> readers;  // since the last write
  };
  std::map<ResourceKey, History> history;
  for (std::size_t n = 0; n < dag.nodes.size(); ++n) {
    for (const TaskAccess& acc : task_accesses(algo, dag.nodes[n], p)) {
      History& h = history[key_of(acc)];
      if (h.writer && *h.writer != n) dag.edges.emplace_back(*h.writer, n);
      if (acc.write) {
        for (std::size_t r : h.readers)
          if (r != n) dag.edges.emplace_back(r, n);
        h.writer = n;
        h.readers.clear();
      } else {
        h.readers.push_back(n);
      }
    }
  }
  std::sort(dag.edges.begin(), dag.edges.end());
  dag.edges.erase(std::unique(dag.edges.begin(), dag.edges.end()), dag.edges.end());
  dag.successors.assign(dag.nodes.size(), {});
  dag.ready_count.assign(dag.nodes.size(), 0);
  for (const auto& [u, v] : dag.edges) {
    dag.successors[u].push_back(v);
    ++dag.ready_count[v];
  }
  return dag;
}

TaskDag build_tiled_dag(Index p, Index q) { return build_dag(Algorithm::TiledHouseholder, p, q); }

int resolve_threads(int requested) {
  if (const char* env = std::getenv("BLRQR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0 && v <= 4096) return static_cast<int>(v);
  }
  if (requested < 1) throw std::invalid_argument("thread count must be >= 1");
  return requested;
}

namespace {

bool conflicts_requested(const ExecOptions& opts) {
  if (opts.check_conflicts) return true;
  const char* env = std::getenv("BLRQR_CHECK_CONFLICTS");
  return env != nullptr && *env != '\0' && std::string(env) != "0";
}

// Debug tracker: no block may be written by one running task while another
// running task touches it.
class ConflictTracker {
 public:
  ConflictTracker(Algorithm algo, Index p) : algo_(algo), p_(p) {}

  void begin(const Task& t) {
    std::lock_guard lock(mu_);
    const auto acc = task_accesses(algo_, t, p_);
    for (const auto& a : acc) {
      const Use& u = uses_[key_of(a)];
      if (u.writers > 0 || (a.write && u.readers > 0))
        throw std::logic_error("write-set conflict: " + t.label() + " overlaps a running task");
    }
    for (const auto& a : acc) {
      Use& u = uses_[key_of(a)];
      if (a.write) ++u.writers;
      else ++u.readers;
    }
  }

  void end(const Task& t) {
    std::lock_guard lock(mu_);
    for (const auto& a : task_accesses(algo_, t, p_)) {
      Use& u = uses_[key_of(a)];
      if (a.write) --u.writers;
      else --u.readers;
    }
  }

 private:
  struct Use {
    int readers = 0;
    int writers = 0;
  };
  Algorithm algo_;
  Index p_;
  std::mutex mu_;
  std::map<ResourceKey, Use> uses_;
};

// Runs one task with the optional tracker and trace.
class TaskRunner {
 public:
  TaskRunner(FactorizationWorkspace& ws, const ExecOptions& opts) : ws_(ws), trace_(opts.trace) {
    if (conflicts_requested(opts)) tracker_.emplace(ws.algorithm(), ws.matrix().block_rows());
  }

  void operator()(const Task& t) {
    if (tracker_) tracker_->begin(t);
    if (trace_ != nullptr) {
      std::lock_guard lock(trace_mu_);
      trace_->push_back(t);
    }
    ws_.run(t);
    if (tracker_) tracker_->end(t);
  }

 private:
  FactorizationWorkspace& ws_;
  std::vector<Task>* trace_;
  std::mutex trace_mu_;
  std::optional<ConflictTracker> tracker_;
};

// Persistent pool for fork-join loops; the calling thread takes part.
class WorkerPool {
 public:
  explicit WorkerPool(int threads) {
    for (int t = 1; t < threads; ++t) workers_.emplace_back([this] { work(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) w.join();
  }

  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  // Returns once every index has run (the barrier).
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    {
      std::lock_guard lock(mu_);
      fn_ = &fn;
      count_ = count;
      next_.store(0);
      busy_ = workers_.size();
      error_ = nullptr;
      ++generation_;
    }
    wake_.notify_all();
    drain();
    std::unique_lock lock(mu_);
    done_.wait(lock, [this] { return busy_ == 0; });
    fn_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

 private:
  void drain() {
    for (;;) {
      const std::size_t idx = next_.fetch_add(1);
      if (idx >= count_) return;
      try {
        (*fn_)(idx);
      } catch (...) {
        std::lock_guard lock(mu_);
        if (!error_) error_ = std::current_exception();
        next_.store(count_);
      }
    }
  }

  void work() {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lock(mu_);
        wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
      }
      drain();
      std::lock_guard lock(mu_);
      if (--busy_ == 0) done_.notify_one();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable wake_, done_;
  const std::function<void(std::size_t)>* fn_ = nullptr;
  std::size_t count_ = 0;
  std::atomic<std::size_t> next_{0};
  std::size_t busy_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

}  // namespace

FactorizationResult execute_sequential(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg,
                                       std::vector<Task>* trace) {
  FactorizationWorkspace ws(algo, a, cfg);
  ExecOptions opts;
  opts.trace = trace;
  TaskRunner run(ws, opts);
  for (const auto& phase : ws.phases())
    for (const auto& t : phase) run(t);
  return ws.finish();
}

FactorizationResult execute_in_order(const TaskDag& dag, const std::vector<std::size_t>& order, const BlrMatrix& a,
                                     const ToleranceConfig& cfg) {
  if (!dag.is_topological(order)) throw std::invalid_argument("execute_in_order: order is not topological");
  if (dag.p != a.block_rows() || dag.q != a.block_cols())
    throw std::invalid_argument("execute_in_order: DAG does not match the block grid");
  FactorizationWorkspace ws(dag.algorithm, a, cfg);
  for (std::size_t n : order) ws.run(dag.nodes[n]);
  return ws.finish();
}

FactorizationResult execute_forkjoin(Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg,
                                     const ExecOptions& opts) {
  const int threads = resolve_threads(opts.threads);
  FactorizationWorkspace ws(algo, a, cfg);
  TaskRunner run(ws, opts);
  WorkerPool pool(threads);
  for (const auto& phase : ws.phases()) {
    if (phase.size() == 1) {
      run(phase.front());
      continue;
    }
    pool.parallel_for(phase.size(), [&](std::size_t idx) { run(phase[idx]); });
  }
  return ws.finish();
}

FactorizationResult execute_taskgraph(const TaskDag& dag, const BlrMatrix& a, const ToleranceConfig& cfg,
                                      const ExecOptions& opts) {
  if (dag.p != a.block_rows() || dag.q != a.block_cols())
    throw std::invalid_argument("execute_taskgraph: DAG does not match the block grid");
  if (dag.successors.size() != dag.nodes.size() || dag.ready_count.size() != dag.nodes.size())
    throw std::invalid_argument("execute_taskgraph: malformed DAG");
  const int threads = resolve_threads(opts.threads);
  FactorizationWorkspace ws(dag.algorithm, a, cfg);
  TaskRunner run(ws, opts);

  auto later = [&dag](std::size_t x, std::size_t y) { return runs_before(dag.nodes[y], dag.nodes[x]); };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  std::vector<int> pending = dag.ready_count;
  for (std::size_t n = 0; n < dag.nodes.size(); ++n)
    if (pending[n] == 0) ready.push(n);

  std::mutex mu;
  std::condition_variable cv;
  std::size_t remaining = dag.nodes.size();
  int running = 0;
  std::exception_ptr error;

  auto worker = [&] {
    std::unique_lock lock(mu);
    for (;;) {
      cv.wait(lock, [&] { return error || remaining == 0 || !ready.empty() || running == 0; });
      if (error || remaining == 0) return;
      if (ready.empty()) {
        // running == 0 here: nothing can ever become ready
        std::ostringstream os;
        os << "execute_taskgraph: deadlock with " << remaining << " of " << dag.nodes.size()
           << " tasks unexecuted and none ready";
        error = std::make_exception_ptr(std::logic_error(os.str()));
        cv.notify_all();
        return;
      }
      const std::size_t n = ready.top();
      ready.pop();
      ++running;
      lock.unlock();
      std::exception_ptr failure;
      try {
        run(dag.nodes[n]);
      } catch (...) {
        failure = std::current_exception();
      }
      lock.lock();
      --running;
      if (failure) {
        if (!error) error = failure;
        cv.notify_all();
        return;
      }
      --remaining;
      for (std::size_t s : dag.successors[n])
        if (--pending[s] == 0) ready.push(s);
      cv.notify_all();
    }
  };

  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return ws.finish();
}

FactorizationResult execute(Executor e, Algorithm algo, const BlrMatrix& a, const ToleranceConfig& cfg,
                            const ExecOptions& opts) {
  switch (e) {
    case Executor::Sequential: return execute_sequential(algo, a, cfg, opts.trace);
    case Executor::ForkJoin: return execute_forkjoin(algo, a, cfg, opts);
    case Executor::TaskGraph: return execute_taskgraph(build_dag(algo, a.block_rows(), a.block_cols()), a, cfg, opts);
  }
  throw std::invalid_argument("execute: unknown executor");
}

}  // namespace blrqr
