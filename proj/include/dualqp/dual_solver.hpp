#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualqp/inner_fom.hpp"
#include "dualqp/linalg.hpp"
#include "dualqp/qp_model.hpp"
#include "dualqp/tuning.hpp"

namespace dualqp {

enum class Recovery { kLast, kAverage };

enum class StopRule {
  kSurrogate,   // dist <= eps and |F - dual estimate| <= eps (1 + |F|)
  kReference,   // |F - F*| <= eps and dist <= eps, F* supplied
  kBudgetOnly,  // never stop early
};

enum class InnerPolicyChoice { kAuto, kFixedCount, kGradientMap };

enum class SolveStatus { kConverged, kMaxIterations, kInnerFailure };

const char* to_string(SolveStatus s);

struct SolverConfig {
  double epsilon = 1e-3;
  Method method = Method::kDfgm;
  /// Unset: 0 for positive definite Q, 8 R_d^2 / eps otherwise.
  std::optional<double> rho;
  /// Unset: theory value for the method.
  std::optional<double> epsilon_in;
  Recovery recovery = Recovery::kLast;
  /// Upper bound on outer iterations, applied on top of k_out.
  std::optional<std::uint64_t> max_outer;
  /// When false the k_out budget is not enforced; max_outer must be set.
  bool stop_at_k_out = true;
  /// Estimate of ||lambda* - lambda^0||. Guarantees need it to be an upper bound.
  double dual_radius = 1.0;
  StopRule stop = StopRule::kSurrogate;
  std::optional<double> reference_value;
  /// Stop only when both the last and the average iterate pass.
  bool stop_requires_both = false;
  /// DFGM: solve at every lambda^k to monitor the last iterate.
  bool track_last_iterate = true;
  /// DGM: replace a budget-limited final lambda by one ascent step from the
  /// dual average.
  bool dgm_redefinition = true;
  InnerPolicyChoice inner_policy = InnerPolicyChoice::kAuto;
  std::optional<MomentumVariant> momentum;
  std::optional<std::uint64_t> k_in_override;
  /// Empty means lambda^0 = 0.
  Vector lambda0;
};

/// Per-row multiplier domain: R_+ on inequality rows when rho = 0, R elsewhere.
class DualCone {
 public:
  DualCone(const QpProblem& prob, double rho);
  explicit DualCone(std::vector<bool> nonneg) : nonneg_(std::move(nonneg)) {}

  void project(std::span<double> v) const;
  bool contains(std::span<const double> v) const;
  bool nonneg(std::size_t i) const { return nonneg_[i]; }

 private:
  std::vector<bool> nonneg_;
};

/// G u + g - s(u, mu).
Vector inexact_dual_gradient(std::span<const double> u_bar,
                             std::span<const double> mu, const QpProblem& prob,
                             double rho);

struct DualState {
  Vector lambda;       // lambda^k
  Vector lambda_prev;  // lambda^{k-1}
  Vector mu;           // mu^{k+1}
  ThetaSequence theta; // theta for the next iteration
  std::uint64_t k = 0;
  Vector u_warm;       // latest step-1 inner solution
  Vector avg_num;      // sum theta_j u^j
  Vector avg_Gu;       // sum theta_j G u^j
  Vector avg_Qu;       // sum theta_j Q u^j
  double S = 0.0;      // sum theta_j
  Vector lambda_sum;   // lambda^0 + ... + lambda^k
};

/// lambda = P(mu + grad / (2 L_d)); mu' = lambda + beta (lambda - lambda_prev).
/// Only the dual variables and theta are touched.
void dfom_outer_step(DualState& s, std::span<const double> grad_bar, double L_d,
                     Method method, const DualCone& cone);

/// sum theta_j u^j / sum theta_j.
Vector recover_average(const DualState& s);

// Computable bounds that the trace reports next to the measured values.
double dual_gap_bound(Method method, double L_d, double R_d, double epsilon_in,
                      std::uint64_t k);
double average_infeasibility_bound(Method method, double L_d, double R_d,
                                   double epsilon_in, std::uint64_t k);
double multiplier_drift_bound(double R_d, double epsilon_in, double L_d,
                              std::uint64_t k);
struct LastIterateBounds {
  double infeasibility;
  double suboptimality;
};
LastIterateBounds last_iterate_bounds(double L_d, double R_d, double epsilon,
                                      double epsilon_in);
struct Interval {
  double lo;
  double hi;
};
/// Range of F(u_avg) - F* guaranteed at k_out.
Interval average_suboptimality_interval(Method method, double epsilon);

struct TraceRow {
  std::uint64_t k = 0;
  double dual_val = 0.0;
  double f_last = 0.0;  // NaN when the last iterate is not tracked
  double f_avg = 0.0;
  double infeas_last = 0.0;
  double infeas_avg = 0.0;
  std::uint64_t inner_iters = 0;
  std::uint64_t cum_matvecs = 0;
  std::uint64_t inner_solves = 0;
  std::uint64_t evaluations = 0;  // G u and Q u products at one point
  std::uint64_t matvecs = 0;
  double dual_gap_bound = 0.0;
  double avg_infeas_bound = 0.0;
  double drift_bound = 0.0;
  double lambda_norm = 0.0;
};

enum class StopReason { kCriterion, kIterationLimit, kInnerFailure };

struct SolveReport {
  Vector u_last;
  Vector u_avg;
  Vector lambda_final;
  double primal_obj_last = 0.0;
  double primal_obj_avg = 0.0;
  double infeas_last = 0.0;
  double infeas_avg = 0.0;
  double dual_value_estimate = 0.0;
  std::uint64_t outer_iters = 0;
  std::uint64_t total_inner_iters = 0;
  std::uint64_t total_matvecs = 0;
  SolveStatus status = SolveStatus::kMaxIterations;
  StopReason stop_reason = StopReason::kIterationLimit;
  std::string failure_message;
  std::vector<TraceRow> trace;

  ProblemConstants constants;
  Schedule schedule;
  InnerStopPolicy inner_policy;
  MomentumVariant momentum = MomentumVariant::kFgm;
  std::optional<std::uint64_t> first_hit_last;
  std::optional<std::uint64_t> first_hit_avg;
  bool redefined = false;
  std::uint64_t inner_cap_hits = 0;
  // Work done after the last trace row (recovery and redefinition).
  std::uint64_t final_inner_solves = 0;
  std::uint64_t final_inner_iters = 0;
  std::uint64_t final_evaluations = 0;
  std::uint64_t final_matvecs = 0;
};

/// Outer DFOM loop, exposed step by step so tests can inspect every lambda^k.
class DualSolver {
 public:
  DualSolver(const QpProblem& prob, SolverConfig config);

  const ProblemConstants& constants() const { return constants_; }
  const Schedule& schedule() const { return schedule_; }
  const InnerStopPolicy& inner_policy() const { return policy_; }
  const DualState& state() const { return state_; }
  const SolverConfig& config() const { return config_; }
  const DualCone& dual_cone() const { return cone_; }
  const std::vector<TraceRow>& trace() const { return trace_; }
  std::uint64_t outer_limit() const { return limit_; }
  std::uint64_t matvecs() const { return counter_.value(); }
  /// Matvec cost of one solve with `iters` steps, and of one evaluation.
  std::uint64_t solve_cost(std::uint64_t iters) const;
  std::uint64_t evaluation_cost() const;

  /// One outer iteration. Returns true when the stop rule fired.
  bool step();
  bool done() const { return stopped_ || state_.k >= limit_; }

  /// Approximate minimizer of L_rho(., mu) at the configured inner accuracy.
  /// Uses its own counter; the solver state is untouched.
  Vector inner_solution(std::span<const double> mu, std::span<const double> warm) const;
  /// DGM final point from the current dual average (state untouched).
  Vector redefined_dual_point() const;

  SolveReport finish();

 private:
  struct Evaluation {
    Vector Gu;
    Vector Qu;
    double f = 0.0;
    double infeas = 0.0;
  };
  struct Work {
    std::uint64_t solves = 0;
    std::uint64_t inner = 0;
    std::uint64_t evals = 0;
    std::uint64_t cap_hits = 0;
  };

  InnerResult solve_at(std::span<const double> mu, std::span<const double> warm,
                       MatvecCounter* counter, Work& work) const;
  Evaluation evaluate(std::span<const double> u, MatvecCounter* counter, Work& work) const;
  double lagrangian_from(const Evaluation& e, std::span<const double> mu) const;
  Vector gradient_from(const Evaluation& e, std::span<const double> mu) const;
  bool passes(double f, double infeas) const;
  Vector redefine(MatvecCounter* counter, Work& work, Vector& warm) const;

  const QpProblem* prob_;
  SolverConfig config_;
  ProblemConstants constants_;
  Schedule schedule_;
  InnerStopPolicy policy_;
  MomentumVariant momentum_;
  DualCone cone_;
  double step_L_d_;
  std::uint64_t limit_;
  mutable LagrangianSubproblem sub_;
  MatvecCounter counter_;
  DualState state_;
  std::vector<TraceRow> trace_;

  // Last iterate at lambda^k, when known.
  bool have_last_ = false;
  Vector u_last_;
  Evaluation eval_last_;
  double dual_best_;
  bool stopped_ = false;
  bool failed_ = false;
  std::string failure_;
  std::uint64_t cap_hits_ = 0;
  std::optional<std::uint64_t> hit_last_;
  std::optional<std::uint64_t> hit_avg_;
};

SolveReport solve(const QpProblem& prob, const SolverConfig& config);

/// ubar(lambda): fresh inner solve at lambda with the solver's settings.
Vector recover_last(std::span<const double> lambda_final, const QpProblem& prob,
                    const SolverConfig& config);

}  // namespace dualqp
