#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <span>

#include "dualqp/error.hpp"
#include "dualqp/linalg.hpp"
#include "dualqp/qp_model.hpp"

namespace dualqp {

enum class MomentumVariant { kGm, kFgm, kFgmSigma };

/// theta_1 = 1, theta_{k+1} = (1 + sqrt(1 + 4 theta_k^2)) / 2.
class ThetaSequence {
 public:
  static double next(double theta) {
    return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * theta * theta));
  }

  double theta() const { return theta_; }
  double following() const { return next(theta_); }
  std::uint64_t k() const { return k_; }
  /// theta_1 + ... + theta_k.
  double sum() const { return sum_; }
  /// (theta_k - 1) / theta_{k+1}
  double beta() const { return (theta_ - 1.0) / following(); }

  void advance() {
    theta_ = following();
    sum_ += theta_;
    ++k_;
  }

 private:
  double theta_ = 1.0;
  double sum_ = 1.0;
  std::uint64_t k_ = 1;
};

class MomentumRule {
 public:
  /// FGM_sigma needs 0 < sigma <= L.
  MomentumRule(MomentumVariant variant, double L, double sigma);

  MomentumVariant variant() const { return variant_; }
  /// beta_k for the current k.
  double beta() const;
  void advance();

 private:
  MomentumVariant variant_;
  ThetaSequence theta_;
  double fixed_beta_ = 0.0;
};

/// x^0 = y^1 = x0 on construction.
struct InnerState {
  Vector x;
  Vector x_prev;
  Vector y;
  std::uint64_t k = 0;
  double L_phi = 0.0;
  double sigma_phi = 0.0;

  InnerState(Vector x0, double L, double sigma)
      : x(x0), x_prev(x0), y(std::move(x0)), L_phi(L), sigma_phi(sigma) {}
};

/// Scratch buffers so hot loops do not allocate.
struct FomWorkspace {
  Vector grad;
  Vector x_next;
  explicit FomWorkspace(std::size_t n) : grad(n), x_next(n) {}
};

/// One FOM step. grad_fn(y, out) writes the gradient at y. Returns the
/// gradient-mapping norm L ||y^k - x^k|| of the step just taken.
template <class GradFn>
double fom_step(InnerState& s, MomentumRule& rule, GradFn&& grad_fn,
                const BoxSet& box, FomWorkspace& ws) {
  if (!(s.L_phi > 0.0)) throw DimensionError("fom_step: L_phi must be positive");
  grad_fn(std::span<const double>(s.y), std::span<double>(ws.grad));
  if (!all_finite(ws.grad)) throw NumericalError("fom_step: non-finite gradient");
  const std::size_t n = s.y.size();
  const double inv_l = 1.0 / s.L_phi;
  double gm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double v = s.y[i] - inv_l * ws.grad[i];
    v = v < box.lb[i] ? box.lb[i] : (v > box.ub[i] ? box.ub[i] : v);
    ws.x_next[i] = v;
    const double d = s.y[i] - v;
    gm2 += d * d;
  }
  ++s.k;
  const double beta = rule.beta();
  rule.advance();
  s.x_prev.swap(s.x);
  s.x.swap(ws.x_next);
  for (std::size_t i = 0; i < n; ++i) s.y[i] = s.x[i] + beta * (s.x[i] - s.x_prev[i]);
  return s.L_phi * std::sqrt(gm2);
}

template <class GradFn>
double fom_step(InnerState& s, MomentumRule& rule, GradFn&& grad_fn,
                const BoxSet& box) {
  FomWorkspace ws(s.x.size());
  return fom_step(s, rule, grad_fn, box, ws);
}

/// L ||x - [x - grad(x)/L]_U||.
template <class GradFn>
double gradient_map_norm(std::span<const double> x, GradFn&& grad_fn, double L,
                         const BoxSet& box) {
  if (!(L > 0.0)) throw DimensionError("gradient_map_norm: L must be positive");
  Vector g(x.size());
  grad_fn(x, std::span<double>(g));
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = x[i] - g[i] / L;
    v = v < box.lb[i] ? box.lb[i] : (v > box.ub[i] ? box.ub[i] : v);
    s += (x[i] - v) * (x[i] - v);
  }
  return L * std::sqrt(s);
}

enum class InnerStopMode { kFixedCount, kGradientMap };

struct InnerStopPolicy {
  InnerStopMode mode = InnerStopMode::kGradientMap;
  std::uint64_t k_in = 1;        // FixedCount: exact number of steps
  double epsilon_in = 0.0;       // GradientMap: target accuracy
  std::uint64_t cap = 1000000;   // GradientMap: hard limit on steps

  /// sqrt(2 sigma eps_in): gradient-map level that certifies eps_in accuracy.
  double threshold(double sigma) const { return std::sqrt(2.0 * sigma * epsilon_in); }
};

struct InnerResult {
  Vector u;
  /// Gradient evaluations performed (one per FOM step).
  std::uint64_t iterations = 0;
  bool cap_hit = false;
  double last_gradient_map = 0.0;
};

/// Runs FOM from x0. With GradientMap the check at y^k precedes the
/// momentum step and returns x^k, so a stationary start stops after one
/// gradient evaluation.
template <class GradFn>
InnerResult run_fom(GradFn&& grad_fn, Vector x0, const BoxSet& box, double L,
                    double sigma, MomentumVariant variant,
                    const InnerStopPolicy& policy) {
  box.project(x0);
  InnerState s(std::move(x0), L, sigma);
  MomentumRule rule(variant, L, sigma);
  FomWorkspace ws(s.x.size());
  InnerResult r;
  if (policy.mode == InnerStopMode::kFixedCount) {
    for (std::uint64_t k = 0; k < policy.k_in; ++k) {
      r.last_gradient_map = fom_step(s, rule, grad_fn, box, ws);
    }
  } else {
    if (!(sigma > 0.0)) {
      throw DimensionError("gradient-map stopping needs a strongly convex objective");
    }
    const double thr = policy.threshold(sigma);
    r.cap_hit = true;
    while (s.k < policy.cap) {
      r.last_gradient_map = fom_step(s, rule, grad_fn, box, ws);
      if (r.last_gradient_map <= thr) {
        r.cap_hit = false;
        break;
      }
    }
  }
  r.iterations = s.k;
  r.u = std::move(s.x);
  return r;
}

/// phi(u) = L_rho(u, mu) as a function of u, with the matvec-saving
/// gradient paths:
///   rho = 0:                  c = q + G'mu once, then Qy + c
///   rho > 0, equality rows:   H = Q + rho G'G once per object,
///                             c = q + G'(mu + rho g) once, then Hy + c
///   rho > 0, inequality rows: Qy, Gy and G'(.) every step
class LagrangianSubproblem {
 public:
  LagrangianSubproblem(const QpProblem& prob, double rho);

  /// Fixes mu. Costs matvecs_per_solve() products.
  void set_multiplier(std::span<const double> mu, MatvecCounter* counter);
  void gradient(std::span<const double> y, std::span<double> out,
                MatvecCounter* counter) const;
  /// Uncounted evaluation of L_rho(u, mu), for tests and diagnostics.
  double value(std::span<const double> u) const;

  const QpProblem& problem() const { return *prob_; }
  double rho() const { return rho_; }
  const Vector& multiplier() const { return mu_; }
  std::uint64_t matvecs_per_iteration() const;
  std::uint64_t matvecs_per_solve() const;

 private:
  const QpProblem* prob_;
  double rho_;
  bool penalized_rows_;  // rho > 0 with at least one inequality row
  std::shared_ptr<const DenseMatrix> hessian_;
  Vector mu_;
  Vector c_;
  mutable Vector w_;
  mutable Vector t_;
};

}  // namespace dualqp
