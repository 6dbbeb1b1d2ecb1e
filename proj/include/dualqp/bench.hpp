#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dualqp/dual_solver.hpp"
#include "dualqp/oracle.hpp"
#include "dualqp/qp_model.hpp"

namespace dualqp {

enum class Family {
  kStronglyConvexIneq,  // Q = A'A + I, inequality rows
  kPsdEq,               // Q = A'A with rank(A) = n - p, equality rows
};

const char* to_string(Family f);
Family parse_family(const std::string& s);
const char* to_string(Method m);
const char* to_string(Recovery r);

/// Random instance with a strictly feasible interior point u0 in [-1, 1]^n
/// and box [-10, 10]^n. Gaussian entries are scaled by 1/sqrt(n) so the
/// spectra stay O(1) as n grows.
QpProblem generate_random_qp(std::size_t n, std::size_t p, Family family,
                             std::mt19937_64& rng);

/// Row count used by the benchmarks for a given n.
std::size_t default_rows(std::size_t n);

struct VerifiedInstance {
  QpProblem prob;
  OracleSolution ref;
  double dual_radius;   // max(||lambda*||, 1), used for schedules
  std::uint64_t seed;
  std::size_t attempts; // draws needed to pass verification
};

/// Draws from `seed` until an instance has a reference optimum with unique
/// multipliers.
VerifiedInstance make_verified_instance(std::size_t n, std::size_t p, Family family,
                                        std::uint64_t seed);

/// Deterministic per-instance seed.
std::uint64_t instance_seed(std::uint64_t base, std::size_t n, std::size_t index);

struct BenchSpec {
  Family family = Family::kStronglyConvexIneq;
  std::vector<std::size_t> n_list;
  std::size_t instances_per_n = 10;
  std::uint64_t seed = 42;
  double epsilon = 0.01;
  bool record_wall_time = true;
};

struct BenchRow {
  Family family = Family::kStronglyConvexIneq;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  Method method = Method::kDfgm;
  Recovery recovery = Recovery::kAverage;
  std::optional<double> epsilon_in;  // unset: theory value
  std::uint64_t outer_iters = 0;
  std::uint64_t inner_iters = 0;
  std::uint64_t matvecs = 0;
  std::uint64_t wall_ns = 0;
  double final_gap = 0.0;
  double final_infeas = 0.0;
  bool converged = false;
  std::uint64_t k_out = 0;
  // Accounting check: matvecs predicted from solve and evaluation counts.
  std::uint64_t predicted_matvecs = 0;
};

/// Final |F - F*| at the theory k_out for eps_in in {1e-1, ..., 1e-4, theory}.
std::vector<BenchRow> run_sensitivity(const BenchSpec& spec);
/// Equality-constrained PSD family, rho = 1/eps, stop on the average iterate.
std::vector<BenchRow> run_eq_timing(const BenchSpec& spec);
/// Outer iterations for DGM/DFGM x last/average on inequality QPs.
std::vector<BenchRow> run_last_vs_average(const BenchSpec& spec);

inline constexpr const char* kSummaryHeader =
    "family,n,seed,method,recovery,outer_iters,inner_iters,matvecs,wall_ns,final_gap,"
    "final_infeas";

/// Method column is "dgm"/"dfgm", suffixed ":ein=<value>" for a fixed eps_in.
void write_summary_csv(std::ostream& os, const std::vector<BenchRow>& rows);

/// Predicted matvecs for a finished solve from its trace and finalization counts.
std::uint64_t accounted_matvecs(const DualSolver& solver, const SolveReport& rep);

}  // namespace dualqp
