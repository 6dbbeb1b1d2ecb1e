#include "dualqp/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "dualqp/error.hpp"

namespace dualqp {

namespace {

constexpr double kInflate = 1.0 + kSafetyInflation;
constexpr double kDeflate = 1.0 - kSafetyInflation;

std::uint64_t to_count(double x) {
  if (!(x >= 0.0)) return 0;
  if (x >= 1.8e19) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(x);
}

double dual_lipschitz_from(double norm_G, double lam_min, double rho) {
  if (norm_G == 0.0) return 0.0;
  const double g2 = norm_G * norm_G;
  const double denom = lam_min + rho * g2;
  if (!(denom > 0.0)) {
    throw InfeasibleSpecError(
        "dual Lipschitz constant undefined: Q is singular and rho = 0; "
        "use an augmented Lagrangian (rho > 0)");
  }
  return g2 / denom;
}

}  // namespace

// Snaps to the nearest integer only when x is within rounding noise of it.
std::uint64_t tolerant_ceil(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return to_count(r);
  return to_count(std::ceil(x));
}

std::uint64_t tolerant_floor(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, std::abs(x))) return to_count(r);
  return to_count(std::floor(x));
}

double pd_threshold(const QpProblem& prob) {
  return kPdThreshold * std::max(1.0, prob.lambda_max_Q());
}

LagrangianCase select_case(const QpProblem& prob) {
  return prob.lambda_min_Q() > pd_threshold(prob) ? LagrangianCase::kOrdinary
                                                  : LagrangianCase::kAugmented;
}

double rho_star(double dual_radius, double epsilon) {
  if (!(epsilon > 0.0)) throw DimensionError("epsilon must be positive");
  if (!(dual_radius > 0.0)) throw DimensionError("dual radius must be positive");
  return 8.0 * dual_radius * dual_radius / epsilon;
}

double dual_lipschitz(const QpProblem& prob, double rho) {
  if (rho < 0.0) throw DimensionError("rho must be nonnegative");
  return dual_lipschitz_from(prob.norm_G() * kInflate, prob.lambda_min_Q() * kDeflate,
                             rho);
}

ProblemConstants compute_constants(const QpProblem& prob, double rho) {
  if (rho < 0.0) throw DimensionError("rho must be nonnegative");
  ProblemConstants c;
  c.rho = rho;
  c.norm_G = prob.norm_G() * kInflate;
  c.lam_min_Q = prob.lambda_min_Q() * kDeflate;
  c.lam_max_Q = prob.lambda_max_Q() * kInflate;
  c.L_L = c.lam_max_Q + rho * c.norm_G * c.norm_G;
  if (rho > 0.0 && prob.p() > 0 && prob.all_zero_cone()) {
    const DenseMatrix h = add_scaled_gram(prob.Q(), prob.G(), rho);
    c.sigma_L = std::max(0.0, sym_eig_extremes(h, /*psd=*/true).lambda_min) * kDeflate;
  } else {
    c.sigma_L = c.lam_min_Q;
  }
  c.sigma_L = std::min(c.sigma_L, c.L_L);
  c.L_d = dual_lipschitz_from(c.norm_G, c.lam_min_Q, rho);
  return c;
}

OuterSchedule outer_schedule(Method method, double epsilon, double dual_radius,
                             double L_d) {
  if (!(epsilon > 0.0)) throw DimensionError("epsilon must be positive");
  if (!(dual_radius > 0.0)) throw DimensionError("dual radius must be positive");
  OuterSchedule s;
  const double budget = 8.0 * L_d * dual_radius * dual_radius / epsilon;
  if (method == Method::kDgm) {
    s.epsilon_in = epsilon / 4.0;
    s.k_out = tolerant_ceil(budget);
  } else {
    s.epsilon_in = L_d > 0.0 ? epsilon * std::sqrt(epsilon) /
                                   (8.0 * dual_radius * std::sqrt(2.0 * L_d))
                             : epsilon / 4.0;
    s.k_out = tolerant_ceil(std::sqrt(budget));
  }
  s.k_out = std::max<std::uint64_t>(s.k_out, 1);
  return s;
}

std::uint64_t inner_complexity(double L_L, double sigma_L, double diameter,
                               double epsilon_in) {
  if (!std::isfinite(diameter)) {
    throw InfeasibleSpecError("inner complexity needs a bounded box (D_U is infinite)");
  }
  if (!(epsilon_in > 0.0)) throw DimensionError("epsilon_in must be positive");
  const double d2 = diameter * diameter;
  double k;
  if (sigma_L <= 0.0) {
    k = std::sqrt(2.0 * L_L * d2 / epsilon_in);
  } else {
    k = std::sqrt(L_L / sigma_L) * std::max(0.0, std::log(L_L * d2 / epsilon_in)) + 1.0;
  }
  return std::max<std::uint64_t>(tolerant_ceil(k), 1);
}

std::uint64_t total_complexity(double norm_G, double diameter, double sigma_L,
                               double dual_radius, double epsilon) {
  if (sigma_L <= 0.0) {
    return tolerant_floor(24.0 * norm_G * diameter * dual_radius / epsilon);
  }
  const double lg = std::log(8.0 * norm_G * diameter * dual_radius / epsilon);
  return tolerant_floor(16.0 * norm_G * dual_radius / std::sqrt(sigma_L * epsilon) *
                        std::max(0.0, lg));
}

Schedule make_schedule(const QpProblem& prob, const ProblemConstants& c,
                       Method method, double epsilon, double dual_radius) {
  Schedule s;
  s.epsilon = epsilon;
  s.method = method;
  s.rho = c.rho;
  s.dual_radius = dual_radius;
  s.lagrangian_case = c.rho > 0.0 ? LagrangianCase::kAugmented : LagrangianCase::kOrdinary;
  const OuterSchedule o = outer_schedule(method, epsilon, dual_radius, c.L_d);
  s.epsilon_in = o.epsilon_in;
  s.k_out = o.k_out;

  const double d_u = prob.box().diameter();
  if (std::isfinite(d_u)) {
    s.k_in_estimate = inner_complexity(c.L_L, c.sigma_L, d_u, s.epsilon_in);
    s.k_total_estimate = total_complexity(c.norm_G, d_u, c.sigma_L, dual_radius, epsilon);
  } else if (c.sigma_L <= 0.0) {
    throw InfeasibleSpecError(
        "inner objective is not strongly convex and the box is unbounded; "
        "D_U is needed for the inner iteration count");
  }
  s.k_total_approximate = c.lam_max_Q < c.norm_G * c.norm_G;
  if (s.lagrangian_case == LagrangianCase::kAugmented) {
    const double star = rho_star(dual_radius, epsilon);
    s.rho_deviates = std::abs(c.rho - star) > 1e-12 * star;
  }
  return s;
}

std::string explain(const QpProblem& prob, const ProblemConstants& c,
                    const Schedule& s) {
  std::ostringstream os;
  os.precision(6);
  auto line = [&os](const char* name, double v, const std::string& how) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-18s = %-14.6g", name, v);
    os << buf << "  " << how << '\n';
  };
  os << "problem: n = " << prob.n() << ", p = " << prob.p()
     << (prob.all_zero_cone() ? " (equality rows only)" : " (has inequality rows)")
     << '\n';
  line("lambda_min(Q)", c.lam_min_Q, "symmetric eigensolver, deflated by 1e-6");
  line("lambda_max(Q)", c.lam_max_Q, "symmetric eigensolver, inflated by 1e-6");
  line("||G||", c.norm_G, "power iteration on G'G, inflated by 1e-6");
  line("tau_pd", pd_threshold(prob), "1e-7 * max(1, lambda_max(Q))");
  os << "case: "
     << (s.lagrangian_case == LagrangianCase::kOrdinary
             ? "ordinary Lagrangian (lambda_min(Q) > tau_pd, rho = 0)"
             : "augmented Lagrangian (Q singular, rho > 0)")
     << '\n';
  if (s.lagrangian_case == LagrangianCase::kAugmented) {
    line("rho", c.rho,
         s.rho_deviates ? "user supplied; differs from 8 R_d^2 / eps"
                        : "8 R_d^2 / eps");
  }
  line("R_d (estimate)", s.dual_radius, "guarantees hold only if this bounds ||lambda*||");
  line("L_L", c.L_L, "lambda_max(Q) + rho ||G||^2");
  line("sigma_L", c.sigma_L,
       prob.p() > 0 && prob.all_zero_cone() && c.rho > 0.0
           ? "lambda_min(Q + rho G'G)"
           : "lambda_min(Q)");
  line("L_d", c.L_d, "||G||^2 / (lambda_min(Q) + rho ||G||^2)");
  line("epsilon", s.epsilon, "target accuracy");
  line("epsilon_in", s.epsilon_in,
       s.method == Method::kDgm ? "eps / 4" : "eps^1.5 / (8 R_d sqrt(2 L_d))");
  os << "k_out              = " << s.k_out << "  "
     << (s.method == Method::kDgm ? "ceil(8 L_d R_d^2 / eps)"
                                  : "ceil(sqrt(8 L_d R_d^2 / eps))")
     << '\n';
  line("D_U", prob.box().diameter(), "||ub - lb||");
  if (s.k_in_estimate) {
    os << "k_in               = " << *s.k_in_estimate << "  "
       << (c.sigma_L > 0.0 ? "ceil(sqrt(L_L/sigma_L) log(L_L D_U^2 / eps_in) + 1)"
                           : "ceil(sqrt(2 L_L D_U^2 / eps_in))")
       << '\n';
  } else {
    os << "k_in               = n/a  (unbounded box)\n";
  }
  if (s.k_total_estimate) {
    os << "k_total            = " << *s.k_total_estimate << "  "
       << (c.sigma_L > 0.0 ? "floor(16 ||G|| R_d / sqrt(sigma_L eps) log(8 ||G|| D_U R_d / eps))"
                           : "floor(24 ||G|| D_U R_d / eps)")
       << (s.k_total_approximate ? "  [approximate: lambda_max(Q) < ||G||^2]" : "")
       << '\n';
  }
  return os.str();
}

}  // namespace dualqp
