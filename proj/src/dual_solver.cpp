#include "dualqp/dual_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualqp/error.hpp"

namespace dualqp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged:
      return "converged";
    case SolveStatus::kMaxIterations:
      return "max_iterations";
    case SolveStatus::kInnerFailure:
      return "inner_failure";
  }
  return "unknown";
}

DualCone::DualCone(const QpProblem& prob, double rho) : nonneg_(prob.p(), false) {
  if (rho == 0.0) {
    for (std::size_t i = 0; i < prob.p(); ++i) {
      nonneg_[i] = prob.cones()[i] == ConeKind::kNonPos;
    }
  }
}

void DualCone::project(std::span<double> v) const {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (nonneg_[i] && v[i] < 0.0) v[i] = 0.0;
}

bool DualCone::contains(std::span<const double> v) const {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (nonneg_[i] && !(v[i] >= 0.0)) return false;
  return true;
}

Vector inexact_dual_gradient(std::span<const double> u_bar, std::span<const double> mu,
                             const QpProblem& prob, double rho) {
  Vector r = matvec(prob.G(), u_bar);
  const Vector s = slack(u_bar, mu, prob, rho);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += prob.g()[i] - s[i];
  return r;
}

void dfom_outer_step(DualState& s, std::span<const double> grad_bar, double L_d,
                     Method method, const DualCone& cone) {
  if (!(L_d > 0.0)) throw DimensionError("dfom_outer_step: L_d must be positive");
  s.lambda_prev = s.lambda;
  s.lambda = s.mu;
  axpy(0.5 / L_d, grad_bar, s.lambda);
  cone.project(s.lambda);
  if (!all_finite(s.lambda)) throw NumericalError("non-finite multiplier");
  const double beta = method == Method::kDgm ? 0.0 : s.theta.beta();
  for (std::size_t i = 0; i < s.mu.size(); ++i) {
    s.mu[i] = s.lambda[i] + beta * (s.lambda[i] - s.lambda_prev[i]);
  }
  if (method == Method::kDfgm) s.theta.advance();
  ++s.k;
  if (s.lambda_sum.size() != s.lambda.size()) s.lambda_sum.assign(s.lambda.size(), 0.0);
  axpy(1.0, s.lambda, s.lambda_sum);
}

Vector recover_average(const DualState& s) {
  if (!(s.S > 0.0)) throw Error("recover_average: no primal iterate yet");
  Vector u = s.avg_num;
  for (auto& x : u) x /= s.S;
  return u;
}

double dual_gap_bound(Method method, double L_d, double R_d, double epsilon_in,
                      std::uint64_t k) {
  const double p = method == Method::kDgm ? 1.0 : 2.0;
  const double k1 = static_cast<double>(k) + 1.0;
  return 4.0 * L_d * R_d * R_d / std::pow(k1, p) + 2.0 * std::pow(k1, p - 1.0) * epsilon_in;
}

double average_infeasibility_bound(Method method, double L_d, double R_d,
                                   double epsilon_in, std::uint64_t k) {
  if (method == Method::kDgm) {
    if (k == 0) return std::numeric_limits<double>::infinity();
    const double kk = static_cast<double>(k);
    return 4.0 * L_d * R_d / kk + 2.0 * std::sqrt(L_d * epsilon_in / kk);
  }
  const double k1 = static_cast<double>(k) + 1.0;
  return 8.0 * L_d * R_d / (k1 * k1) + 8.0 * std::sqrt(L_d * epsilon_in / k1);
}

double multiplier_drift_bound(double R_d, double epsilon_in, double L_d,
                              std::uint64_t k) {
  if (epsilon_in == 0.0 || k == 0) return R_d;
  if (!(L_d > 0.0)) return std::numeric_limits<double>::infinity();
  return R_d + std::sqrt(static_cast<double>(k) * epsilon_in / L_d);
}

LastIterateBounds last_iterate_bounds(double L_d, double R_d, double epsilon,
                                      double epsilon_in) {
  const double m = std::max(std::sqrt(L_d * epsilon) / std::sqrt(2.0),
                            std::pow(L_d, 0.25) * std::pow(epsilon, 0.75) /
                                std::sqrt(3.0 * R_d));
  const double tail = std::sqrt(2.0 * L_d * epsilon);
  return {m + tail, 4.0 * R_d * m + 4.0 * R_d * tail + epsilon_in};
}

Interval average_suboptimality_interval(Method method, double epsilon) {
  if (method == Method::kDgm) return {-epsilon, epsilon / 4.0};
  return {-3.0 * epsilon, 1.25 * epsilon};
}

// --------------------------------------------------------------------------

DualSolver::DualSolver(const QpProblem& prob, SolverConfig config)
    : prob_(&prob),
      config_(std::move(config)),
      cone_(std::vector<bool>(prob.p(), false)),
      sub_(prob, 0.0) {
  const SolverConfig& c = config_;
  if (!(c.epsilon > 0.0)) throw DimensionError("epsilon must be positive");
  if (!(c.dual_radius > 0.0)) throw DimensionError("dual radius estimate must be positive");
  if (c.stop == StopRule::kReference && !c.reference_value) {
    throw DimensionError("reference stopping needs a reference objective value");
  }
  const double rho = c.rho ? *c.rho
                     : select_case(prob) == LagrangianCase::kOrdinary
                         ? 0.0
                         : rho_star(c.dual_radius, c.epsilon);
  if (rho < 0.0) throw DimensionError("rho must be nonnegative");
  constants_ = compute_constants(prob, rho);
  schedule_ = make_schedule(prob, constants_, c.method, c.epsilon, c.dual_radius);
  if (c.epsilon_in) {
    if (!(*c.epsilon_in > 0.0)) throw DimensionError("epsilon_in must be positive");
    schedule_.epsilon_in = *c.epsilon_in;
    if (schedule_.k_in_estimate) {
      schedule_.k_in_estimate = inner_complexity(constants_.L_L, constants_.sigma_L,
                                                 prob.box().diameter(), schedule_.epsilon_in);
    }
  }
  cone_ = DualCone(prob, rho);
  sub_ = LagrangianSubproblem(prob, rho);
  step_L_d_ = constants_.L_d > 0.0 ? constants_.L_d : 1.0;

  const double L = constants_.L_L;
  const bool strong = constants_.sigma_L > kPdThreshold * std::max(1.0, L);
  InnerPolicyChoice choice = c.inner_policy;
  if (choice == InnerPolicyChoice::kAuto) {
    choice = strong ? InnerPolicyChoice::kGradientMap : InnerPolicyChoice::kFixedCount;
  }
  policy_.epsilon_in = schedule_.epsilon_in;
  if (choice == InnerPolicyChoice::kFixedCount) {
    policy_.mode = InnerStopMode::kFixedCount;
    if (c.k_in_override) {
      policy_.k_in = *c.k_in_override;
    } else if (schedule_.k_in_estimate) {
      policy_.k_in = *schedule_.k_in_estimate;
    } else {
      throw InfeasibleSpecError("fixed inner iteration count needs a bounded box");
    }
    policy_.cap = policy_.k_in;
  } else {
    if (!(constants_.sigma_L > 0.0)) {
      throw DimensionError("gradient-map inner stopping needs sigma_L > 0");
    }
    policy_.mode = InnerStopMode::kGradientMap;
    const std::uint64_t k_in =
        c.k_in_override ? *c.k_in_override : schedule_.k_in_estimate.value_or(0);
    policy_.k_in = k_in;
    policy_.cap = k_in > 0 ? std::min<std::uint64_t>(50 * k_in, 1000000) : 1000000;
  }
  momentum_ = c.momentum ? *c.momentum
                         : (strong ? MomentumVariant::kFgmSigma : MomentumVariant::kFgm);
  if (momentum_ == MomentumVariant::kFgmSigma && !(constants_.sigma_L > 0.0)) {
    throw DimensionError("FGM_sigma needs sigma_L > 0");
  }

  limit_ = c.stop_at_k_out ? schedule_.k_out : std::numeric_limits<std::uint64_t>::max();
  if (c.max_outer) {
    if (*c.max_outer == 0) throw DimensionError("max_outer must be at least 1");
    limit_ = std::min(limit_, *c.max_outer);
  } else if (!c.stop_at_k_out) {
    throw DimensionError("an outer iteration cap is required when k_out is not enforced");
  }

  const std::size_t n = prob.n();
  const std::size_t p = prob.p();
  Vector lambda0 = c.lambda0.empty() ? Vector(p, 0.0) : c.lambda0;
  if (lambda0.size() != p) throw DimensionError("lambda0 must have length p");
  cone_.project(lambda0);
  state_.lambda = lambda0;
  state_.lambda_prev = lambda0;
  state_.mu = lambda0;
  state_.lambda_sum = lambda0;
  state_.u_warm.assign(n, 0.0);
  prob.box().project(state_.u_warm);
  state_.avg_num.assign(n, 0.0);
  state_.avg_Gu.assign(p, 0.0);
  state_.avg_Qu.assign(n, 0.0);
  dual_best_ = -std::numeric_limits<double>::infinity();
}

std::uint64_t DualSolver::solve_cost(std::uint64_t iters) const {
  return sub_.matvecs_per_solve() + iters * sub_.matvecs_per_iteration();
}

std::uint64_t DualSolver::evaluation_cost() const { return prob_->p() > 0 ? 2 : 1; }

InnerResult DualSolver::solve_at(std::span<const double> mu, std::span<const double> warm,
                                 MatvecCounter* counter, Work& work) const {
  sub_.set_multiplier(mu, counter);
  const double L = constants_.L_L > 0.0 ? constants_.L_L : 1.0;
  InnerResult r = run_fom(
      [&](std::span<const double> y, std::span<double> out) { sub_.gradient(y, out, counter); },
      Vector(warm.begin(), warm.end()), prob_->box(), L, constants_.sigma_L, momentum_,
      policy_);
  ++work.solves;
  work.inner += r.iterations;
  if (r.cap_hit) ++work.cap_hits;
  return r;
}

DualSolver::Evaluation DualSolver::evaluate(std::span<const double> u,
                                            MatvecCounter* counter, Work& work) const {
  Evaluation e;
  e.Gu = matvec(prob_->G(), u, counter);
  e.Qu = matvec(prob_->Q(), u, counter);
  e.f = 0.5 * dot(u, e.Qu) + dot(prob_->q(), u);
  Vector r = e.Gu;
  axpy(1.0, prob_->g(), r);
  e.infeas = dist_cone(r, prob_->cones());
  ++work.evals;
  return e;
}

double DualSolver::lagrangian_from(const Evaluation& e, std::span<const double> mu) const {
  const double rho = constants_.rho;
  Vector w = e.Gu;
  axpy(1.0, prob_->g(), w);
  if (rho == 0.0) return e.f + dot(mu, w);
  axpy(1.0 / rho, mu, w);
  const double d = dist_cone(w, prob_->cones());
  return e.f + 0.5 * rho * d * d - dot(mu, mu) / (2.0 * rho);
}

Vector DualSolver::gradient_from(const Evaluation& e, std::span<const double> mu) const {
  const double rho = constants_.rho;
  Vector r = e.Gu;
  axpy(1.0, prob_->g(), r);
  if (rho == 0.0) return r;
  Vector w = r;
  axpy(1.0 / rho, mu, w);
  const Vector s = project_cone(w, prob_->cones());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= s[i];
  return r;
}

bool DualSolver::passes(double f, double infeas) const {
  const double eps = config_.epsilon;
  const bool reference = config_.stop == StopRule::kReference ||
                         (config_.stop == StopRule::kBudgetOnly && config_.reference_value);
  if (reference) return std::abs(f - *config_.reference_value) <= eps && infeas <= eps;
  return infeas <= eps && std::abs(f - dual_best_) <= eps * (1.0 + std::abs(f));
}

bool DualSolver::step() {
  if (done()) return stopped_;
  const std::uint64_t mv0 = counter_.value();
  Work work;
  const Method method = config_.method;
  const std::size_t p = prob_->p();
  TraceRow row;
  try {
    Vector ubar;
    Evaluation ev;
    if (method == Method::kDgm && have_last_) {
      // mu^k = lambda^{k-1}: the recovery solve of the previous step is step 1.
      ubar = u_last_;
      ev = eval_last_;
    } else {
      ubar = solve_at(state_.mu, state_.u_warm, &counter_, work).u;
      ev = evaluate(ubar, &counter_, work);
    }
    const Vector mu_k = state_.mu;
    const Vector grad = gradient_from(ev, mu_k);
    const double dual_mu = lagrangian_from(ev, mu_k);
    dual_best_ = std::max(dual_best_, dual_mu);

    const double weight = method == Method::kDgm ? 1.0 : state_.theta.theta();
    axpy(weight, ubar, state_.avg_num);
    axpy(weight, ev.Gu, state_.avg_Gu);
    axpy(weight, ev.Qu, state_.avg_Qu);
    state_.S += weight;
    state_.u_warm = ubar;

    dfom_outer_step(state_, grad, step_L_d_, method, cone_);

    have_last_ = false;
    row.dual_val = dual_mu;
    if (method == Method::kDgm || config_.track_last_iterate) {
      u_last_ = solve_at(state_.lambda, ubar, &counter_, work).u;
      eval_last_ = evaluate(u_last_, &counter_, work);
      have_last_ = true;
      row.dual_val = lagrangian_from(eval_last_, state_.lambda);
      dual_best_ = std::max(dual_best_, row.dual_val);
    }
  } catch (const NumericalError& e) {
    failed_ = true;
    stopped_ = true;
    failure_ = e.what();
    return false;
  }
  cap_hits_ += work.cap_hits;

  const std::uint64_t k = state_.k;
  row.k = k;
  row.f_last = have_last_ ? eval_last_.f : kNaN;
  row.infeas_last = have_last_ ? eval_last_.infeas : kNaN;
  {
    const double inv = 1.0 / state_.S;
    const Vector u = recover_average(state_);
    double f = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j)
      f += u[j] * (0.5 * inv * state_.avg_Qu[j] + prob_->q()[j]);
    Vector r(p);
    for (std::size_t i = 0; i < p; ++i) r[i] = inv * state_.avg_Gu[i] + prob_->g()[i];
    row.f_avg = f;
    row.infeas_avg = dist_cone(r, prob_->cones());
  }
  row.inner_iters = work.inner;
  row.inner_solves = work.solves;
  row.evaluations = work.evals;
  row.matvecs = counter_.value() - mv0;
  row.cum_matvecs = counter_.value();
  const double L_d = constants_.L_d;
  const double R = config_.dual_radius;
  row.dual_gap_bound = dual_gap_bound(method, L_d, R, schedule_.epsilon_in, k);
  row.avg_infeas_bound = average_infeasibility_bound(method, L_d, R, schedule_.epsilon_in, k);
  row.drift_bound = multiplier_drift_bound(R, schedule_.epsilon_in, L_d, k);
  row.lambda_norm = norm2(state_.lambda);
  trace_.push_back(row);

  const bool last_ok = have_last_ && passes(row.f_last, row.infeas_last);
  const bool avg_ok = passes(row.f_avg, row.infeas_avg);
  if (last_ok && !hit_last_) hit_last_ = k;
  if (avg_ok && !hit_avg_) hit_avg_ = k;
  if (config_.stop != StopRule::kBudgetOnly) {
    const bool fire = config_.stop_requires_both
                          ? (last_ok && avg_ok)
                          : (config_.recovery == Recovery::kLast ? last_ok : avg_ok);
    if (fire) stopped_ = true;
  }
  return stopped_;
}

Vector DualSolver::redefine(MatvecCounter* counter, Work& work, Vector& warm) const {
  Vector hat = state_.lambda_sum;
  const double inv = 1.0 / (static_cast<double>(state_.k) + 1.0);
  for (auto& x : hat) x *= inv;
  warm = solve_at(hat, warm, counter, work).u;
  const Evaluation ev = evaluate(warm, counter, work);
  const Vector grad = gradient_from(ev, hat);
  axpy(0.5 / step_L_d_, grad, hat);
  cone_.project(hat);
  return hat;
}

Vector DualSolver::redefined_dual_point() const {
  MatvecCounter scratch;
  Work work;
  Vector warm = have_last_ ? u_last_ : state_.u_warm;
  return redefine(&scratch, work, warm);
}

Vector DualSolver::inner_solution(std::span<const double> mu,
                                  std::span<const double> warm) const {
  MatvecCounter scratch;
  Work work;
  return solve_at(mu, warm, &scratch, work).u;
}

SolveReport DualSolver::finish() {
  if (state_.k == 0 && !failed_) throw Error("finish called before any outer iteration");
  SolveReport rep;
  const std::uint64_t mv0 = counter_.value();
  Work work;
  const Method method = config_.method;
  rep.lambda_final = state_.lambda;
  Evaluation ev;
  if (!failed_) {
    try {
      if (!stopped_ && method == Method::kDgm && config_.dgm_redefinition) {
        Vector warm = have_last_ ? u_last_ : state_.u_warm;
        rep.lambda_final = redefine(&counter_, work, warm);
        rep.u_last = solve_at(rep.lambda_final, warm, &counter_, work).u;
        ev = evaluate(rep.u_last, &counter_, work);
        dual_best_ = std::max(dual_best_, lagrangian_from(ev, rep.lambda_final));
        rep.redefined = true;
      } else if (have_last_) {
        rep.u_last = u_last_;
        ev = eval_last_;
      } else {
        rep.u_last = solve_at(state_.lambda, state_.u_warm, &counter_, work).u;
        ev = evaluate(rep.u_last, &counter_, work);
        dual_best_ = std::max(dual_best_, lagrangian_from(ev, state_.lambda));
      }
    } catch (const NumericalError& e) {
      failed_ = true;
      failure_ = e.what();
    }
  }
  cap_hits_ += work.cap_hits;

  rep.u_avg = state_.S > 0.0 ? recover_average(state_) : state_.u_warm;
  if (!failed_) {
    rep.primal_obj_last = ev.f;
    rep.infeas_last = ev.infeas;
  } else {
    rep.u_last = state_.u_warm;
    rep.primal_obj_last = objective(*prob_, rep.u_last);
    rep.infeas_last = infeasibility(*prob_, rep.u_last);
  }
  if (failed_ || trace_.empty()) {
    rep.primal_obj_avg = objective(*prob_, rep.u_avg);
    rep.infeas_avg = infeasibility(*prob_, rep.u_avg);
  } else {
    rep.primal_obj_avg = trace_.back().f_avg;
    rep.infeas_avg = trace_.back().infeas_avg;
  }
  rep.dual_value_estimate = dual_best_;
  rep.outer_iters = state_.k;
  rep.trace = trace_;
  for (const auto& r : trace_) rep.total_inner_iters += r.inner_iters;
  rep.total_inner_iters += work.inner;
  rep.final_inner_solves = work.solves;
  rep.final_inner_iters = work.inner;
  rep.final_evaluations = work.evals;
  rep.final_matvecs = counter_.value() - mv0;
  rep.total_matvecs = counter_.value();
  rep.constants = constants_;
  rep.schedule = schedule_;
  rep.inner_policy = policy_;
  rep.momentum = momentum_;
  rep.first_hit_last = hit_last_;
  rep.first_hit_avg = hit_avg_;
  rep.inner_cap_hits = cap_hits_;

  if (failed_) {
    rep.status = SolveStatus::kInnerFailure;
    rep.stop_reason = StopReason::kInnerFailure;
    rep.failure_message = failure_;
  } else {
    const bool last_ok = passes(rep.primal_obj_last, rep.infeas_last);
    const bool avg_ok = passes(rep.primal_obj_avg, rep.infeas_avg);
    const bool ok = config_.stop_requires_both
                        ? (last_ok && avg_ok)
                        : (config_.recovery == Recovery::kLast ? last_ok : avg_ok);
    rep.status = ok ? SolveStatus::kConverged : SolveStatus::kMaxIterations;
    rep.stop_reason = stopped_ ? StopReason::kCriterion : StopReason::kIterationLimit;
  }
  global_matvec_counter().add(counter_.value());
  return rep;
}

SolveReport solve(const QpProblem& prob, const SolverConfig& config) {
  DualSolver solver(prob, config);
  while (!solver.done()) solver.step();
  return solver.finish();
}

Vector recover_last(std::span<const double> lambda_final, const QpProblem& prob,
                    const SolverConfig& config) {
  DualSolver solver(prob, config);
  Vector warm(prob.n(), 0.0);
  prob.box().project(warm);
  return solver.inner_solution(lambda_final, warm);
}

}  // namespace dualqp
