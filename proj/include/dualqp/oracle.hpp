#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dualqp/qp_model.hpp"

namespace dualqp {

/// Box face state of one coordinate at a candidate point.
enum class BoxState : std::int8_t { kLower = -1, kFree = 0, kUpper = 1 };

/// Reference optimum with multipliers under the convention
///   Q u + q + G'lambda + nu_ub - nu_lb = 0,
/// lambda >= 0 on inequality rows, nu >= 0. box_multipliers = nu_ub - nu_lb.
struct OracleSolution {
  Vector u_star;
  Vector lambda_star;
  Vector box_multipliers;
  double f_star = 0.0;
  std::vector<BoxState> box_state;
  std::vector<bool> row_active;  // Zero rows are always active
  double kkt_residual = 0.0;
  std::uint64_t candidates = 0;  // assignments (oracle) or iterations (IPM)
  std::uint64_t singular = 0;    // assignments skipped for a singular system
};

/// Number of active-set assignments the enumeration would visit.
double oracle_assignment_count(const QpProblem& prob);

/// Exhaustive active-set enumeration for small problems (n <= 12, p <= 10).
/// Throws InfeasibleSpecError when no KKT point exists.
OracleSolution oracle_solve(const QpProblem& prob);

/// Primal-dual interior point method with Mehrotra correction. Used as the
/// reference where enumeration is too expensive.
OracleSolution reference_solve(const QpProblem& prob);

/// Enumeration when at most `max_assignments` candidates, otherwise IPM.
OracleSolution best_reference(const QpProblem& prob, double max_assignments = 2e5);

/// ||lambda* - lambda0||; lambda0 empty means the origin.
double oracle_dual_radius(const OracleSolution& sol, std::span<const double> lambda0 = {});

/// Stationarity residual of (u, lambda, nu) under the convention above.
double kkt_residual(const QpProblem& prob, std::span<const double> u,
                    std::span<const double> lambda, std::span<const double> box_mult);

/// Linear independence of the active constraint gradients, which makes the
/// multiplier vector unique.
bool has_unique_multipliers(const QpProblem& prob, const OracleSolution& sol,
                            double active_tol = 1e-7);

}  // namespace dualqp
