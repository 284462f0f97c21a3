// SPDX-License-Identifier: Apache-2.0

#include "blrqr/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>

#include "blrqr/generators.hpp"
#include "blrqr/io.hpp"
#include "blrqr/metrics.hpp"
#include "blrqr/scheduler.hpp"

namespace blrqr {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Thrown for bad flag combinations found after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenFlags {
  std::string family = "random";
  Index n = 0;
  Index m = 0;
  Index b = 0;
  Index rank = 1;
  double eps = 1e-10;
  std::optional<double> eta;
  double ell = 0.1;
  std::string admissibility;
  std::uint64_t seed = 1;
};

struct RunFlags {
  std::string algo = "blocked-hh";
  std::string exec = "seq";
  int threads = 1;
  bool kappa = false;
  std::optional<double> max_res;
  std::optional<double> max_orth;
  std::string out;
  std::string csv;
  std::string dump;
};

void add_gen_flags(CLI::App* cmd, GenFlags& g) {
  cmd->add_option("--family", g.family, "random | slp | exp3d")->check(CLI::IsMember({"random", "slp", "exp3d", "exp"}));
  cmd->add_option("--n", g.n, "columns")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--m", g.m, "rows (default: 2n for random, n otherwise)")->check(CLI::PositiveNumber);
  cmd->add_option("--b", g.b, "block size (default: divisor of n nearest 2 sqrt(n))")->check(CLI::PositiveNumber);
  cmd->add_option("--rank", g.rank, "off-diagonal rank of the random family")->check(CLI::NonNegativeNumber);
  cmd->add_option("--eps", g.eps, "compression tolerance")->check(CLI::Range(1e-300, 0.999999));
  cmd->add_option("--eta", g.eta, "admissibility constant (implies strong admissibility)")->check(CLI::PositiveNumber);
  cmd->add_option("--ell", g.ell, "correlation length of the exponential kernel")->check(CLI::PositiveNumber);
  cmd->add_option("--admissibility", g.admissibility, "weak | strong | auto")
      ->check(CLI::IsMember({"weak", "strong", "auto"}));
  cmd->add_option("--seed", g.seed, "generator seed");
}

void add_run_flags(CLI::App* cmd, RunFlags& r) {
  cmd->add_option("--algo", r.algo, "mgs | blocked-hh | tiled-hh")->check(CLI::IsMember({"mgs", "blocked-hh", "tiled-hh"}));
  cmd->add_option("--exec", r.exec, "seq | forkjoin | taskgraph")->check(CLI::IsMember({"seq", "forkjoin", "taskgraph"}));
  cmd->add_option("--threads", r.threads, "worker threads (BLRQR_THREADS overrides)")->check(CLI::PositiveNumber);
  cmd->add_flag("--kappa", r.kappa, "also compute the Frobenius condition number (n <= 2048)");
  cmd->add_option("--max-res", r.max_res, "exit 1 if Res exceeds this");
  cmd->add_option("--max-orth", r.max_orth, "exit 1 if Orth exceeds this");
  cmd->add_option("--out", r.out, "JSON report path (default: stdout)");
  cmd->add_option("--csv", r.csv, "append one CSV row to this file");
  cmd->add_option("--dump", r.dump, "write R as a BLR1 file");
}

GeneratorSpec to_spec(const GenFlags& g) {
  GeneratorSpec s;
  s.family = parse_family(g.family);
  s.n = g.n;
  s.m = g.m > 0 ? g.m : (s.family == Family::RandomBlr ? 2 * g.n : g.n);
  s.b = g.b > 0 ? g.b : default_block_size(g.n);
  s.rank = g.rank;
  s.seed = g.seed;
  s.epsilon = g.eps;
  s.ell = g.ell;
  if (g.eta) s.eta = *g.eta;
  if (g.admissibility == "weak") s.admissibility = Admissibility::Weak;
  else if (g.admissibility == "strong") s.admissibility = Admissibility::Strong;
  else if (g.admissibility == "auto") s.admissibility = Admissibility::Auto;
  else if (g.eta || s.family == Family::ExpKernel3d) s.admissibility = Admissibility::Strong;
  if (s.m % s.b != 0 || s.n % s.b != 0) throw UsageError("block size must divide m and n");
  if (s.m < s.n) throw UsageError("need m >= n");
  return s;
}

json flops_json(const FlopReport& f) {
  json j;
  for (std::size_t k = 0; k < kFlopKindCount; ++k)
    j[std::string(flop_kind_name(static_cast<FlopKind>(k)))] = f.by_kind[k];
  j["total"] = f.total();
  return j;
}

json report_json(const AccuracyReport& rep) {
  json j;
  j["res"] = rep.res;
  j["orth"] = rep.orth;
  j["kappa_f"] = rep.kappa_f ? json(*rep.kappa_f) : json(nullptr);
  j["max_rank"] = rep.max_rank;
  j["flops"] = flops_json(rep.flops);
  j["wall_ms"] = rep.wall_ms;
  j["memory_bytes"] = rep.memory_bytes;
  return j;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

void append_csv(const std::string& path, const json& run) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot write " + path);
  if (fresh)
    f << "family,m,n,b,rank,eps,algo,exec,threads,seed,res,orth,kappa_f,max_rank,flops_total,factorize_ms,memory_bytes\n";
  const auto& rep = run["report"];
  f << run["family"].get<std::string>() << ',' << run["m"] << ',' << run["n"] << ',' << run["b"] << ',' << run["rank"]
    << ',' << run["eps"] << ',' << run["algo"].get<std::string>() << ',' << run["exec"].get<std::string>() << ','
    << run["threads"] << ',' << run["seed"] << ',' << rep["res"] << ',' << rep["orth"] << ','
    << (rep["kappa_f"].is_null() ? std::string() : rep["kappa_f"].dump()) << ',' << rep["max_rank"] << ','
    << rep["flops"]["total"] << ',' << rep["wall_ms"]["factorize"] << ',' << rep["memory_bytes"] << '\n';
}

// Factorizes, measures, reports; shared by bench and verify.
int run_and_report(const BlrMatrix& a, const Matrix& dense, const RunFlags& r, json run, double generate_ms,
                   std::ostream& out, std::ostream& err) {
  const Algorithm algo = *parse_algorithm(r.algo);
  const Executor exec = *parse_executor(r.exec);
  ExecOptions opts;
  opts.threads = resolve_threads(r.threads);
  ToleranceConfig cfg;
  cfg.epsilon = run.value("eps", cfg.epsilon);

  auto t0 = Clock::now();
  FlopReport flops;
  FactorizationResult f;
  {
    ScopedFlopCounting counting;
    f = execute(exec, algo, a, cfg, opts);
    flops = counting.report();
  }
  const double factorize_ms = ms_since(t0);

  t0 = Clock::now();
  AccuracyReport rep = compute_metrics(dense, f, r.kappa);
  rep.flops = flops;
  rep.wall_ms["generate"] = generate_ms;
  rep.wall_ms["factorize"] = factorize_ms;
  rep.wall_ms["metrics"] = ms_since(t0);

  if (!r.dump.empty()) write_blr1(r.dump, f.r);

  run["algo"] = r.algo;
  run["exec"] = r.exec;
  run["threads"] = opts.threads;
  run["rank_deficient"] = f.rank_deficient;
  run["report"] = report_json(rep);
  write_text(r.out, run.dump(2) + "\n", out);
  if (!r.csv.empty()) append_csv(r.csv, run);

  int code = kExitOk;
  if (!std::isfinite(rep.res) || !std::isfinite(rep.orth)) {
    err << "non-finite accuracy figures\n";
    code = kExitFailure;
  }
  if (r.max_res && !(rep.res <= *r.max_res)) {
    err << "Res " << rep.res << " exceeds " << *r.max_res << "\n";
    code = kExitFailure;
  }
  if (r.max_orth && !(rep.orth <= *r.max_orth)) {
    err << "Orth " << rep.orth << " exceeds " << *r.max_orth << "\n";
    code = kExitFailure;
  }
  return code;
}

json spec_json(const GeneratorSpec& s) {
  return json{{"family", family_name(s.family)}, {"m", s.m}, {"n", s.n}, {"b", s.b}, {"rank", s.rank},
              {"eps", s.epsilon}, {"seed", s.seed}, {"eta", s.eta}, {"ell", s.ell}};
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Block low-rank QR factorization benchmarks"};
  app.require_subcommand(1);

  GenFlags bench_gen;
  RunFlags bench_run;
  CLI::App* bench = app.add_subcommand("bench", "generate a matrix, factorize it and report accuracy and cost");
  add_gen_flags(bench, bench_gen);
  add_run_flags(bench, bench_run);

  Index dag_p = 0, dag_q = 0;
  std::string dag_algo = "tiled-hh", dag_emit = "dot", dag_out;
  CLI::App* dag = app.add_subcommand("dag", "print the task dependency graph of a block grid");
  dag->add_option("--p", dag_p, "block rows")->required()->check(CLI::PositiveNumber);
  dag->add_option("--q", dag_q, "block columns (default: p)")->check(CLI::PositiveNumber);
  dag->add_option("--algo", dag_algo, "mgs | blocked-hh | tiled-hh")->check(CLI::IsMember({"mgs", "blocked-hh", "tiled-hh"}));
  dag->add_option("--emit", dag_emit, "dot | json")->check(CLI::IsMember({"dot", "json"}));
  dag->add_option("--out", dag_out, "output path (default: stdout)");

  GenFlags gen_flags;
  std::string gen_out;
  CLI::App* gen = app.add_subcommand("gen", "write a generated matrix as a BLR1 file");
  add_gen_flags(gen, gen_flags);
  gen->add_option("--out", gen_out, "BLR1 output path")->required();

  std::string verify_in;
  RunFlags verify_run;
  double verify_eps = 1e-10;
  CLI::App* verify = app.add_subcommand("verify", "load a BLR1 file, factorize it and report accuracy");
  verify->add_option("--in", verify_in, "BLR1 input path")->required()->check(CLI::ExistingFile);
  verify->add_option("--eps", verify_eps, "truncation tolerance")->check(CLI::Range(1e-300, 0.999999));
  add_run_flags(verify, verify_run);

  std::vector<const char*> argv{"blrqr"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*bench) {
      const GeneratorSpec spec = to_spec(bench_gen);
      const auto t0 = Clock::now();
      GeneratedMatrix g = generate(spec);
      return run_and_report(g.blr, g.dense, bench_run, spec_json(spec), ms_since(t0), out, err);
    }
    if (*dag) {
      if (dag_q == 0) dag_q = dag_p;
      if (dag_q > dag_p) throw UsageError("need p >= q");
      const TaskDag d = build_dag(*parse_algorithm(dag_algo), dag_p, dag_q);
      if (dag_emit == "dot") {
        write_text(dag_out, d.to_dot(), out);
      } else {
        json j{{"algo", dag_algo}, {"p", dag_p}, {"q", dag_q}};
        j["nodes"] = json::array();
        for (const auto& t : d.nodes)
          j["nodes"].push_back({{"kind", task_kind_name(t.kind)}, {"k", t.k}, {"i", t.i}, {"j", t.j}});
        j["edges"] = d.edges;
        write_text(dag_out, j.dump(2) + "\n", out);
      }
      return kExitOk;
    }
    if (*gen) {
      const GeneratorSpec spec = to_spec(gen_flags);
      write_blr1(gen_out, generate(spec).blr);
      return kExitOk;
    }
    if (*verify) {
      const auto t0 = Clock::now();
      const BlrMatrix a = read_blr1(verify_in);
      const Matrix dense = blr_to_dense(a);
      json run{{"input", verify_in}, {"m", a.rows()}, {"n", a.cols()}, {"b", a.block_size()}, {"eps", verify_eps}};
      return run_and_report(a, dense, verify_run, run, ms_since(t0), out, err);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace blrqr
