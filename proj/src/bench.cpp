#include "dualqp/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include "dualqp/error.hpp"
#include "dualqp/problem_io.hpp"

namespace dualqp {

namespace {

std::uint64_t elapsed_ns(std::chrono::steady_clock::time_point t0) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0)
          .count());
}

// Values at the first iteration where the given sequence passed, else at the end.
struct SeriesResult {
  std::uint64_t outer;
  std::uint64_t inner;
  std::uint64_t matvecs;
  double f;
  double infeas;
  bool hit;
};

SeriesResult series_at(const SolveReport& rep, std::optional<std::uint64_t> hit, bool last) {
  if (!hit) {
    return {rep.outer_iters, rep.total_inner_iters, rep.total_matvecs,
            last ? rep.primal_obj_last : rep.primal_obj_avg,
            last ? rep.infeas_last : rep.infeas_avg, false};
  }
  std::uint64_t inner = 0;
  const TraceRow* row = nullptr;
  for (const auto& r : rep.trace) {
    inner += r.inner_iters;
    if (r.k == *hit) {
      row = &r;
      break;
    }
  }
  return {*hit, inner, row->cum_matvecs, last ? row->f_last : row->f_avg,
          last ? row->infeas_last : row->infeas_avg, true};
}

}  // namespace

const char* to_string(Family f) {
  return f == Family::kPsdEq ? "psd_eq" : "strongly_convex_ineq";
}

Family parse_family(const std::string& s) {
  if (s == "psd_eq" || s == "PsdEq") return Family::kPsdEq;
  if (s == "strongly_convex_ineq" || s == "StronglyConvexIneq") {
    return Family::kStronglyConvexIneq;
  }
  throw DimensionError("unknown family " + s);
}

const char* to_string(Method m) { return m == Method::kDgm ? "dgm" : "dfgm"; }
const char* to_string(Recovery r) { return r == Recovery::kLast ? "last" : "average"; }

std::size_t default_rows(std::size_t n) { return std::max<std::size_t>(1, n / 2); }

QpProblem generate_random_qp(std::size_t n, std::size_t p, Family family,
                             std::mt19937_64& rng) {
  if (n < 1 || p < 1) throw DimensionError("generate_random_qp: n and p must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::normal_distribution<double> zeta(0.0, 0.1);

  const std::size_t rank = family == Family::kPsdEq ? std::max<std::size_t>(1, n - std::min(p, n))
                                                    : n;
  Vector a(rank * n);
  for (auto& x : a) x = normal(rng);
  DenseMatrix A(rank, n, std::move(a));
  DenseMatrix Q = add_scaled_gram(family == Family::kPsdEq ? DenseMatrix(n, n)
                                                           : DenseMatrix::identity(n),
                                  A, 1.0);
  // Exact symmetry regardless of summation order.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) Q(j, i) = Q(i, j);
  Vector q(n);
  for (auto& x : q) x = normal(rng);
  Vector gm(p * n);
  for (auto& x : gm) x = normal(rng);
  DenseMatrix G(p, n, std::move(gm));
  Vector u0(n);
  for (auto& x : u0) x = unif(rng);
  Vector g = matvec(G, u0);
  std::vector<ConeKind> cones(p);
  for (std::size_t i = 0; i < p; ++i) {
    if (family == Family::kPsdEq) {
      g[i] = -g[i];
      cones[i] = ConeKind::kZero;
    } else {
      g[i] = -g[i] - std::abs(zeta(rng));
      cones[i] = ConeKind::kNonPos;
    }
  }
  return QpProblem(std::move(Q), std::move(q), std::move(G), std::move(g), std::move(cones),
                   BoxSet{Vector(n, -10.0), Vector(n, 10.0)});
}

std::uint64_t instance_seed(std::uint64_t base, std::size_t n, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

VerifiedInstance make_verified_instance(std::size_t n, std::size_t p, Family family,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t attempt = 1; attempt <= 100; ++attempt) {
    QpProblem prob = generate_random_qp(n, p, family, rng);
    OracleSolution ref;
    try {
      ref = best_reference(prob);
    } catch (const Error&) {
      continue;
    }
    const double scale = 1.0 + norm2(prob.q());
    if (!all_finite(ref.lambda_star) || ref.kkt_residual > 1e-7 * scale) continue;
    if (!has_unique_multipliers(prob, ref)) continue;
    const double radius = std::max(oracle_dual_radius(ref), 1.0);
    return {std::move(prob), std::move(ref), radius, seed, attempt};
  }
  throw Error("could not generate a verified instance");
}

std::uint64_t accounted_matvecs(const DualSolver& solver, const SolveReport& rep) {
  const std::uint64_t per_solve = solver.solve_cost(0);
  const std::uint64_t per_iter = solver.solve_cost(1) - per_solve;
  const std::uint64_t per_eval = solver.evaluation_cost();
  std::uint64_t total = per_solve * rep.final_inner_solves + per_iter * rep.final_inner_iters +
                        per_eval * rep.final_evaluations;
  for (const auto& r : rep.trace) {
    total += per_solve * r.inner_solves + per_iter * r.inner_iters + per_eval * r.evaluations;
  }
  return total;
}

namespace {

struct RunOutput {
  SolveReport rep;
  std::uint64_t wall_ns;
  std::uint64_t predicted;
};

RunOutput run_solver(const QpProblem& prob, const SolverConfig& cfg, bool wall) {
  const auto t0 = std::chrono::steady_clock::now();
  DualSolver solver(prob, cfg);
  while (!solver.done()) solver.step();
  SolveReport rep = solver.finish();
  const std::uint64_t ns = wall ? elapsed_ns(t0) : 0;
  const std::uint64_t predicted = accounted_matvecs(solver, rep);
  return {std::move(rep), ns, predicted};
}

}  // namespace

std::vector<BenchRow> run_sensitivity(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  const std::vector<std::optional<double>> ein = {1e-1, 1e-2, 1e-3, 1e-4, std::nullopt};
  for (std::size_t n : spec.n_list) {
    for (std::size_t i = 0; i < spec.instances_per_n; ++i) {
      const std::uint64_t s = instance_seed(spec.seed, n, i);
      const VerifiedInstance inst = make_verified_instance(n, default_rows(n), spec.family, s);
      for (Method m : {Method::kDgm, Method::kDfgm}) {
        for (const auto& e : ein) {
          SolverConfig cfg;
          cfg.epsilon = spec.epsilon;
          cfg.method = m;
          cfg.epsilon_in = e;
          cfg.dual_radius = inst.dual_radius;
          cfg.stop = StopRule::kBudgetOnly;
          cfg.reference_value = inst.ref.f_star;
          const RunOutput out = run_solver(inst.prob, cfg, spec.record_wall_time);
          for (Recovery r : {Recovery::kLast, Recovery::kAverage}) {
            const bool last = r == Recovery::kLast;
            BenchRow row;
            row.family = spec.family;
            row.n = n;
            row.seed = s;
            row.method = m;
            row.recovery = r;
            row.epsilon_in = e;
            row.outer_iters = out.rep.outer_iters;
            row.inner_iters = out.rep.total_inner_iters;
            row.matvecs = out.rep.total_matvecs;
            row.predicted_matvecs = out.predicted;
            row.wall_ns = out.wall_ns;
            const double f = last ? out.rep.primal_obj_last : out.rep.primal_obj_avg;
            row.final_gap = std::abs(f - inst.ref.f_star);
            row.final_infeas = last ? out.rep.infeas_last : out.rep.infeas_avg;
            row.converged = row.final_gap <= spec.epsilon && row.final_infeas <= spec.epsilon;
            row.k_out = out.rep.schedule.k_out;
            rows.push_back(row);
          }
        }
      }
    }
  }
  return rows;
}

std::vector<BenchRow> run_eq_timing(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  struct Variant {
    Method method;
    std::optional<double> epsilon_in;
  };
  const std::vector<Variant> variants = {{Method::kDgm, spec.epsilon},
                                         {Method::kDfgm, 1e-3},
                                         {Method::kDfgm, std::nullopt}};
  for (std::size_t n : spec.n_list) {
    for (std::size_t i = 0; i < spec.instances_per_n; ++i) {
      const std::uint64_t s = instance_seed(spec.seed, n, i);
      const VerifiedInstance inst = make_verified_instance(n, default_rows(n), Family::kPsdEq, s);
      for (const Variant& v : variants) {
        SolverConfig cfg;
        cfg.epsilon = spec.epsilon;
        cfg.method = v.method;
        cfg.epsilon_in = v.epsilon_in;
        cfg.rho = 1.0 / spec.epsilon;
        cfg.dual_radius = inst.dual_radius;
        cfg.recovery = Recovery::kAverage;
        cfg.track_last_iterate = false;
        cfg.stop = StopRule::kReference;
        cfg.reference_value = inst.ref.f_star;
        // k_out for rho = 1/eps is far below what an eps_in = eps run needs.
        cfg.stop_at_k_out = false;
        cfg.max_outer = 100000;
        const RunOutput out = run_solver(inst.prob, cfg, spec.record_wall_time);
        BenchRow row;
        row.family = Family::kPsdEq;
        row.n = n;
        row.seed = s;
        row.method = v.method;
        row.recovery = Recovery::kAverage;
        row.epsilon_in = v.epsilon_in;
        row.outer_iters = out.rep.outer_iters;
        row.inner_iters = out.rep.total_inner_iters;
        row.matvecs = out.rep.total_matvecs;
        row.predicted_matvecs = out.predicted;
        row.wall_ns = out.wall_ns;
        row.final_gap = std::abs(out.rep.primal_obj_avg - inst.ref.f_star);
        row.final_infeas = out.rep.infeas_avg;
        row.converged = out.rep.status == SolveStatus::kConverged;
        row.k_out = out.rep.schedule.k_out;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<BenchRow> run_last_vs_average(const BenchSpec& spec) {
  std::vector<BenchRow> rows;
  for (std::size_t n : spec.n_list) {
    for (std::size_t i = 0; i < spec.instances_per_n; ++i) {
      const std::uint64_t s = instance_seed(spec.seed, n, i);
      const VerifiedInstance inst =
          make_verified_instance(n, default_rows(n), Family::kStronglyConvexIneq, s);
      for (Method m : {Method::kDgm, Method::kDfgm}) {
        SolverConfig cfg;
        cfg.epsilon = spec.epsilon;
        cfg.method = m;
        cfg.dual_radius = inst.dual_radius;
        cfg.stop = StopRule::kReference;
        cfg.reference_value = inst.ref.f_star;
        cfg.stop_requires_both = true;
        cfg.stop_at_k_out = false;
        SolverConfig probe = cfg;
        probe.stop_at_k_out = true;
        const std::uint64_t k_out = DualSolver(inst.prob, probe).schedule().k_out;
        cfg.max_outer = 5 * k_out;
        const RunOutput out = run_solver(inst.prob, cfg, spec.record_wall_time);
        for (Recovery r : {Recovery::kLast, Recovery::kAverage}) {
          const bool last = r == Recovery::kLast;
          const SeriesResult sr =
              series_at(out.rep, last ? out.rep.first_hit_last : out.rep.first_hit_avg, last);
          BenchRow row;
          row.family = Family::kStronglyConvexIneq;
          row.n = n;
          row.seed = s;
          row.method = m;
          row.recovery = r;
          row.outer_iters = sr.outer;
          row.inner_iters = sr.inner;
          row.matvecs = sr.matvecs;
          row.predicted_matvecs = out.predicted;
          row.wall_ns = out.wall_ns;
          row.final_gap = std::abs(sr.f - inst.ref.f_star);
          row.final_infeas = sr.infeas;
          row.converged = sr.hit;
          row.k_out = k_out;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << kSummaryHeader << '\n';
  for (const auto& r : rows) {
    os << to_string(r.family) << ',' << r.n << ',' << r.seed << ',' << to_string(r.method);
    if (r.epsilon_in) os << ":ein=" << format_double(*r.epsilon_in);
    os << ',' << to_string(r.recovery) << ',' << r.outer_iters << ',' << r.inner_iters << ','
       << r.matvecs << ',' << r.wall_ns << ',' << format_double(r.final_gap) << ','
       << format_double(r.final_infeas) << '\n';
  }
}

}  // namespace dualqp
