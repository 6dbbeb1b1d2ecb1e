#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "dualqp/qp_model.hpp"

namespace dualqp {

enum class Method { kDgm, kDfgm };

enum class LagrangianCase {
  kOrdinary,   // Q positive definite, rho = 0
  kAugmented,  // Q only semidefinite, rho > 0
};

/// Relative threshold separating "Q positive definite" from "Q singular".
inline constexpr double kPdThreshold = 1e-7;

/// Spectral constants for one value of rho. Every entry that comes from an
/// estimate is already inflated (or deflated) by kSafetyInflation.
struct ProblemConstants {
  double norm_G = 0.0;
  double lam_min_Q = 0.0;
  double lam_max_Q = 0.0;
  double L_L = 0.0;      // lambda_max(Q) + rho ||G||^2
  double sigma_L = 0.0;  // strong convexity of the inner objective
  double L_d = 0.0;      // ||G||^2 / (lambda_min(Q) + rho ||G||^2)
  double rho = 0.0;
};

/// Ordinary Lagrangian iff lambda_min(Q) > kPdThreshold * max(1, lambda_max(Q)).
LagrangianCase select_case(const QpProblem& prob);
double pd_threshold(const QpProblem& prob);

/// 8 R_d^2 / epsilon.
double rho_star(double dual_radius, double epsilon);

/// Lipschitz constant of the dual gradient. Throws when lambda_min(Q) + rho
/// ||G||^2 vanishes with G != 0 (a PSD Q needs rho > 0).
double dual_lipschitz(const QpProblem& prob, double rho);

ProblemConstants compute_constants(const QpProblem& prob, double rho);

struct OuterSchedule {
  double epsilon_in = 0.0;
  std::uint64_t k_out = 1;
};

/// Outer budget and inner accuracy that make the dual bound at k_out <= eps.
OuterSchedule outer_schedule(Method method, double epsilon, double dual_radius,
                             double L_d);

/// Inner iterations needed for accuracy eps_in. Requires a finite diameter.
std::uint64_t inner_complexity(double L_L, double sigma_L, double diameter,
                               double epsilon_in);

/// Predicted number of projections onto U for the whole solve.
std::uint64_t total_complexity(double norm_G, double diameter, double sigma_L,
                               double dual_radius, double epsilon);

struct Schedule {
  double epsilon = 0.0;
  double epsilon_in = 0.0;
  std::uint64_t k_out = 1;
  double rho = 0.0;
  /// Absent when the box is unbounded and sigma_L > 0.
  std::optional<std::uint64_t> k_in_estimate;
  std::optional<std::uint64_t> k_total_estimate;
  Method method = Method::kDfgm;
  LagrangianCase lagrangian_case = LagrangianCase::kOrdinary;
  double dual_radius = 1.0;
  /// lambda_max(Q) < ||G||^2, so the total-complexity formula is indicative only.
  bool k_total_approximate = false;
  /// rho was supplied by the user and differs from 8 R_d^2 / eps.
  bool rho_deviates = false;
};

/// Throws InfeasibleSpecError if sigma_L == 0 and the box is unbounded.
Schedule make_schedule(const QpProblem& prob, const ProblemConstants& c,
                       Method method, double epsilon, double dual_radius);

/// Human-readable derivation of every constant, for `solve --explain`.
std::string explain(const QpProblem& prob, const ProblemConstants& c,
                    const Schedule& s);

/// ceil(x) that ignores rounding noise just above an integer.
std::uint64_t tolerant_ceil(double x);
std::uint64_t tolerant_floor(double x);

}  // namespace dualqp
