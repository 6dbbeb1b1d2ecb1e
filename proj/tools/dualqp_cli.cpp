// Command-line front end: solve, oracle, generate and bench.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dualqp/bench.hpp"
#include "dualqp/dual_solver.hpp"
#include "dualqp/error.hpp"
#include "dualqp/oracle.hpp"
#include "dualqp/problem_io.hpp"
#include "dualqp/tuning.hpp"

namespace {

using namespace dualqp;

constexpr int kExitConverged = 0;
constexpr int kExitError = 1;
constexpr int kExitCap = 2;
constexpr int kExitIllPosed = 3;

std::string vec_str(const Vector& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + "]";
}

std::vector<std::size_t> parse_n_list(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(static_cast<std::size_t>(std::stoul(tok)));
  }
  if (out.empty()) throw DimensionError("empty --n-list");
  return out;
}

struct SolveArgs {
  std::string file;
  std::string method = "dfgm";
  double epsilon = 1e-3;
  std::string rho = "auto";
  std::string epsilon_in = "auto";
  std::string recovery = "last";
  std::uint64_t max_outer = 0;
  std::string trace;
  bool explain = false;
  double dual_radius = 1.0;
};

int run_solve(const SolveArgs& a) {
  const QpProblem prob = ingest(read_problem_file(a.file));
  SolverConfig cfg;
  cfg.epsilon = a.epsilon;
  cfg.method = a.method == "dgm" ? Method::kDgm : Method::kDfgm;
  if (a.rho != "auto") cfg.rho = std::stod(a.rho);
  if (a.epsilon_in != "auto") cfg.epsilon_in = std::stod(a.epsilon_in);
  cfg.recovery = a.recovery == "average" ? Recovery::kAverage : Recovery::kLast;
  if (a.max_outer > 0) cfg.max_outer = a.max_outer;
  cfg.dual_radius = a.dual_radius;

  DualSolver solver(prob, cfg);
  if (a.explain) {
    std::cout << explain(prob, solver.constants(), solver.schedule());
    std::cout << "inner stopping     = "
              << (solver.inner_policy().mode == InnerStopMode::kGradientMap
                      ? "gradient map <= sqrt(2 sigma_L eps_in)"
                      : "fixed count k_in")
              << '\n';
    std::cout << "outer limit        = " << solver.outer_limit() << "\n\n";
  }
  while (!solver.done()) solver.step();
  const SolveReport rep = solver.finish();

  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw Error("cannot write trace file " + a.trace);
    write_trace_csv(out, rep.trace);
  }
  const bool last = cfg.recovery == Recovery::kLast;
  std::cout << "status: " << to_string(rep.status) << '\n'
            << "recovery: " << (last ? "last" : "average") << '\n'
            << "objective: " << format_double(last ? rep.primal_obj_last : rep.primal_obj_avg)
            << '\n'
            << "infeasibility: " << format_double(last ? rep.infeas_last : rep.infeas_avg)
            << '\n'
            << "dual_estimate: " << format_double(rep.dual_value_estimate) << '\n'
            << "outer_iters: " << rep.outer_iters << '\n'
            << "inner_iters: " << rep.total_inner_iters << '\n'
            << "matvecs: " << rep.total_matvecs << '\n'
            << "u: " << vec_str(last ? rep.u_last : rep.u_avg) << '\n'
            << "lambda: " << vec_str(rep.lambda_final) << '\n';
  if (rep.inner_cap_hits > 0) {
    std::cerr << "warning: inner solver hit its iteration cap " << rep.inner_cap_hits
              << " time(s)\n";
  }
  if (rep.status == SolveStatus::kInnerFailure) {
    std::cerr << "error: " << rep.failure_message << '\n';
    return kExitError;
  }
  return rep.status == SolveStatus::kConverged ? kExitConverged : kExitCap;
}

int run_oracle(const std::string& file, bool ipm) {
  const QpProblem prob = ingest(read_problem_file(file));
  const OracleSolution s = ipm ? reference_solve(prob) : oracle_solve(prob);
  std::cout << "f_star: " << format_double(s.f_star) << '\n'
            << "u_star: " << vec_str(s.u_star) << '\n'
            << "lambda_star: " << vec_str(s.lambda_star) << '\n'
            << "box_multipliers: " << vec_str(s.box_multipliers) << '\n'
            << "dual_radius: " << format_double(oracle_dual_radius(s)) << '\n'
            << "kkt_residual: " << format_double(s.kkt_residual) << '\n'
            << "unique_multipliers: " << (has_unique_multipliers(prob, s) ? "yes" : "no")
            << '\n';
  return kExitConverged;
}

int run_bench(const std::string& which, BenchSpec spec, const std::string& out_dir) {
  std::vector<BenchRow> rows;
  if (which == "sensitivity") {
    rows = run_sensitivity(spec);
  } else if (which == "eq-timing") {
    rows = run_eq_timing(spec);
  } else if (which == "last-vs-avg") {
    rows = run_last_vs_average(spec);
  } else {
    throw DimensionError("unknown benchmark " + which);
  }
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / (which + ".csv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_summary_csv(out, rows);
  std::cout << "wrote " << rows.size() << " rows to " << path.string() << '\n';
  return kExitConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact dual first-order QP solver"};
  app.require_subcommand(1);

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Solve a problem file");
  solve->add_option("file", sa.file, "Problem JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--method", sa.method)->check(CLI::IsMember({"dgm", "dfgm"}));
  solve->add_option("--epsilon", sa.epsilon)->check(CLI::PositiveNumber);
  solve->add_option("--rho", sa.rho, "auto or a nonnegative value");
  solve->add_option("--epsilon-in", sa.epsilon_in, "auto or a positive value");
  solve->add_option("--recovery", sa.recovery)->check(CLI::IsMember({"last", "average"}));
  solve->add_option("--max-outer", sa.max_outer);
  solve->add_option("--trace", sa.trace, "Per-iteration CSV");
  solve->add_flag("--explain", sa.explain, "Print every derived constant");
  solve->add_option("--dual-radius", sa.dual_radius, "Estimate of ||lambda*||")
      ->check(CLI::PositiveNumber);

  std::string oracle_file;
  bool oracle_ipm = false;
  auto* oracle = app.add_subcommand("oracle", "Reference solution of a small problem");
  oracle->add_option("file", oracle_file)->required()->check(CLI::ExistingFile);
  oracle->add_flag("--ipm", oracle_ipm, "Interior point method instead of enumeration");

  std::size_t gen_n = 5, gen_p = 2;
  std::uint64_t gen_seed = 42;
  std::string gen_family = "strongly_convex_ineq", gen_out;
  auto* generate = app.add_subcommand("generate", "Write a random problem file");
  generate->add_option("--n", gen_n)->check(CLI::PositiveNumber);
  generate->add_option("--p", gen_p)->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen_seed);
  generate->add_option("--family", gen_family)
      ->check(CLI::IsMember({"strongly_convex_ineq", "psd_eq"}));
  generate->add_option("--out", gen_out)->required();

  std::string bench_which, bench_out, n_list;
  BenchSpec spec;
  bool no_wall = false;
  auto* bench = app.add_subcommand("bench", "Run a benchmark experiment");
  bench->add_option("experiment", bench_which)
      ->required()
      ->check(CLI::IsMember({"sensitivity", "eq-timing", "last-vs-avg"}));
  bench->add_option("--seed", spec.seed);
  bench->add_option("--out", bench_out)->required();
  bench->add_option("--n-list", n_list, "Comma-separated dimensions");
  bench->add_option("--instances", spec.instances_per_n);
  bench->add_option("--epsilon", spec.epsilon)->check(CLI::PositiveNumber);
  bench->add_flag("--no-wall-time", no_wall, "Write wall_ns = 0 for byte-stable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitError;
  }

  try {
    if (*solve) {
      if (sa.rho != "auto" && !(std::stod(sa.rho) >= 0.0)) {
        throw DimensionError("--rho must be auto or nonnegative");
      }
      return run_solve(sa);
    }
    if (*oracle) return run_oracle(oracle_file, oracle_ipm);
    if (*generate) {
      std::mt19937_64 rng(gen_seed);
      const QpProblem prob = generate_random_qp(gen_n, gen_p, parse_family(gen_family), rng);
      write_problem_file(gen_out, to_raw(prob));
      return kExitConverged;
    }
    if (*bench) {
      std::map<std::string, std::pair<Family, std::vector<std::size_t>>> defaults = {
          {"sensitivity", {Family::kStronglyConvexIneq, {20}}},
          {"eq-timing", {Family::kPsdEq, {10, 20, 40, 80}}},
          {"last-vs-avg", {Family::kStronglyConvexIneq, {10, 50, 100}}}};
      spec.family = defaults[bench_which].first;
      spec.n_list = n_list.empty() ? defaults[bench_which].second : parse_n_list(n_list);
      spec.record_wall_time = !no_wall;
      return run_bench(bench_which, spec, bench_out);
    }
  } catch (const InfeasibleSpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIllPosed;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIllPosed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
