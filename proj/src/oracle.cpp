#include "dualqp/oracle.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualqp/error.hpp"

namespace dualqp {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

Index ix(std::size_t i) { return static_cast<Index>(i); }

struct Candidate {
  Vector u;
  Vector lambda;
  Vector box_mult;
  double f = 0.0;
  std::vector<BoxState> box_state;
  std::vector<bool> row_active;
};

// Lexicographic key of an assignment: box states then row activity.
bool key_less(const Candidate& a, const Candidate& b) {
  for (std::size_t i = 0; i < a.box_state.size(); ++i) {
    if (a.box_state[i] != b.box_state[i]) return a.box_state[i] < b.box_state[i];
  }
  for (std::size_t i = 0; i < a.row_active.size(); ++i) {
    if (a.row_active[i] != b.row_active[i]) return b.row_active[i];
  }
  return false;
}

bool better(const Candidate& a, const Candidate& b) {
  const double tol = 1e-12 * (1.0 + std::abs(b.f));
  if (a.f < b.f - tol) return true;
  if (a.f > b.f + tol) return false;
  const double na = norm2(a.u);
  const double nb = norm2(b.u);
  if (na < nb - 1e-12 * (1.0 + nb)) return true;
  if (na > nb + 1e-12 * (1.0 + nb)) return false;
  return key_less(a, b);
}

// Solves the equality-constrained KKT system for one assignment. Returns
// false if the system is singular or the candidate fails a check.
bool solve_assignment(const QpProblem& prob, const std::vector<BoxState>& bs,
                      const std::vector<bool>& act, Candidate& out, bool& singular) {
  singular = false;
  const std::size_t n = prob.n();
  const std::size_t p = prob.p();
  const auto& Q = prob.Q();
  const auto& G = prob.G();
  const auto& box = prob.box();
  std::vector<std::size_t> free_idx;
  Vector u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (bs[i] == BoxState::kFree) {
      free_idx.push_back(i);
    } else {
      const double b = bs[i] == BoxState::kLower ? box.lb[i] : box.ub[i];
      if (!std::isfinite(b)) return false;
      u[i] = b;
    }
  }
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < p; ++r)
    if (act[r]) rows.push_back(r);
  const std::size_t nf = free_idx.size();
  const std::size_t na = rows.size();
  const std::size_t m = nf + na;
  if (m > 0) {
    MatrixXd K = MatrixXd::Zero(ix(m), ix(m));
    VectorXd rhs(ix(m));
    for (std::size_t a = 0; a < nf; ++a) {
      const std::size_t i = free_idx[a];
      double r = -prob.q()[i];
      for (std::size_t j = 0; j < n; ++j)
        if (bs[j] != BoxState::kFree) r -= Q(i, j) * u[j];
      rhs(ix(a)) = r;
      for (std::size_t b = 0; b < nf; ++b) K(ix(a), ix(b)) = Q(i, free_idx[b]);
      for (std::size_t c = 0; c < na; ++c) {
        K(ix(a), ix(nf + c)) = G(rows[c], i);
        K(ix(nf + c), ix(a)) = G(rows[c], i);
      }
    }
    for (std::size_t c = 0; c < na; ++c) {
      double r = -prob.g()[rows[c]];
      for (std::size_t j = 0; j < n; ++j)
        if (bs[j] != BoxState::kFree) r -= G(rows[c], j) * u[j];
      rhs(ix(nf + c)) = r;
    }
    Eigen::FullPivLU<MatrixXd> lu(K);
    lu.setThreshold(1e-11);
    if (lu.rank() < ix(m)) {
      singular = true;
      return false;
    }
    const VectorXd sol = lu.solve(rhs);
    for (std::size_t a = 0; a < nf; ++a) u[free_idx[a]] = sol(ix(a));
    out.lambda.assign(p, 0.0);
    for (std::size_t c = 0; c < na; ++c) out.lambda[rows[c]] = sol(ix(nf + c));
  } else {
    out.lambda.assign(p, 0.0);
  }

  const double scale = 1.0 + norm2(prob.q()) + norm2(prob.g());
  const double feas_tol = 1e-10 * scale;
  const double sign_tol = 1e-9 * scale;
  for (std::size_t i : free_idx) {
    if (u[i] < box.lb[i] - feas_tol || u[i] > box.ub[i] + feas_tol) return false;
    u[i] = std::clamp(u[i], box.lb[i], box.ub[i]);
  }
  const Vector gu = matvec(G, u);
  for (std::size_t r = 0; r < p; ++r) {
    if (prob.cones()[r] == ConeKind::kNonPos) {
      if (!act[r] && gu[r] + prob.g()[r] > feas_tol) return false;
      if (act[r] && out.lambda[r] < -sign_tol) return false;
    }
  }
  // nu_ub - nu_lb = -(Qu + q + G'lambda) on fixed coordinates.
  const Vector qu = matvec(Q, u);
  const Vector gtl = matvec_transposed(G, out.lambda);
  out.box_mult.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (bs[i] == BoxState::kFree) continue;
    const double nu = -(qu[i] + prob.q()[i] + gtl[i]);
    if (bs[i] == BoxState::kUpper && nu < -sign_tol) return false;
    if (bs[i] == BoxState::kLower && nu > sign_tol) return false;
    out.box_mult[i] = nu;
  }
  for (std::size_t r = 0; r < p; ++r)
    if (prob.cones()[r] == ConeKind::kNonPos && out.lambda[r] < 0.0) out.lambda[r] = 0.0;
  out.u = std::move(u);
  out.f = 0.5 * dot(out.u, qu) + dot(prob.q(), out.u);
  out.box_state = bs;
  out.row_active = act;
  return true;
}

OracleSolution to_solution(const QpProblem& prob, Candidate&& c) {
  OracleSolution s;
  s.u_star = std::move(c.u);
  s.lambda_star = std::move(c.lambda);
  s.box_multipliers = std::move(c.box_mult);
  s.f_star = objective(prob, s.u_star);
  s.box_state = std::move(c.box_state);
  s.row_active = std::move(c.row_active);
  s.kkt_residual = kkt_residual(prob, s.u_star, s.lambda_star, s.box_multipliers);
  return s;
}

}  // namespace

double kkt_residual(const QpProblem& prob, std::span<const double> u,
                    std::span<const double> lambda, std::span<const double> box_mult) {
  Vector r = matvec(prob.Q(), u);
  const Vector gtl = matvec_transposed(prob.G(), lambda);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += prob.q()[i] + gtl[i] + box_mult[i];
  return norm2(r);
}

double oracle_assignment_count(const QpProblem& prob) {
  std::size_t nonpos = 0;
  for (auto c : prob.cones())
    if (c == ConeKind::kNonPos) ++nonpos;
  return std::pow(3.0, static_cast<double>(prob.n())) *
         std::pow(2.0, static_cast<double>(nonpos));
}

OracleSolution oracle_solve(const QpProblem& prob) {
  const std::size_t n = prob.n();
  const std::size_t p = prob.p();
  if (n > 12 || p > 10) {
    throw DimensionError("oracle_solve: enumeration limited to n <= 12 and p <= 10");
  }
  std::vector<std::size_t> nonpos;
  for (std::size_t r = 0; r < p; ++r)
    if (prob.cones()[r] == ConeKind::kNonPos) nonpos.push_back(r);

  std::vector<BoxState> bs(n, BoxState::kLower);
  std::vector<bool> act(p, true);
  bool have = false;
  Candidate best;
  Candidate cand;
  std::uint64_t tried = 0;
  std::uint64_t singular_count = 0;
  const std::uint64_t row_masks = std::uint64_t{1} << nonpos.size();
  while (true) {
    for (std::uint64_t mask = 0; mask < row_masks; ++mask) {
      for (std::size_t b = 0; b < nonpos.size(); ++b) act[nonpos[b]] = (mask >> b) & 1U;
      ++tried;
      bool singular = false;
      if (solve_assignment(prob, bs, act, cand, singular)) {
        if (!have || better(cand, best)) {
          best = cand;
          have = true;
        }
      }
      if (singular) ++singular_count;
    }
    // Next box assignment, mixed radix over {Lower, Free, Upper}.
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (bs[i] != BoxState::kUpper) {
        bs[i] = static_cast<BoxState>(static_cast<int>(bs[i]) + 1);
        break;
      }
      bs[i] = BoxState::kLower;
    }
    if (i == n) break;
  }
  if (!have) {
    throw InfeasibleSpecError("oracle: no assignment yields a KKT point (" +
                              std::to_string(singular_count) + " singular systems)");
  }
  OracleSolution s = to_solution(prob, std::move(best));
  s.candidates = tried;
  s.singular = singular_count;
  return s;
}

OracleSolution reference_solve(const QpProblem& prob) {
  const std::size_t n = prob.n();
  const std::size_t p = prob.p();
  const auto& box = prob.box();
  // Equalities A u = b, inequalities C u <= d.
  std::vector<std::size_t> eq_rows;
  std::vector<std::size_t> in_rows;
  for (std::size_t r = 0; r < p; ++r)
    (prob.cones()[r] == ConeKind::kZero ? eq_rows : in_rows).push_back(r);
  struct Ineq {
    int kind;  // 0 row, 1 upper bound, 2 lower bound
    std::size_t idx;
  };
  std::vector<Ineq> ineqs;
  for (std::size_t r : in_rows) ineqs.push_back({0, r});
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isfinite(box.ub[i])) ineqs.push_back({1, i});
    if (std::isfinite(box.lb[i])) ineqs.push_back({2, i});
  }
  const Index nn = ix(n);
  const Index me = ix(eq_rows.size());
  const Index mi = ix(ineqs.size());
  MatrixXd Q(nn, nn);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) Q(ix(i), ix(j)) = prob.Q()(i, j);
  VectorXd q(nn);
  for (std::size_t i = 0; i < n; ++i) q(ix(i)) = prob.q()[i];
  MatrixXd A(me, nn);
  VectorXd b(me);
  for (Index e = 0; e < me; ++e) {
    const std::size_t r = eq_rows[static_cast<std::size_t>(e)];
    for (std::size_t j = 0; j < n; ++j) A(e, ix(j)) = prob.G()(r, j);
    b(e) = -prob.g()[r];
  }
  MatrixXd C = MatrixXd::Zero(mi, nn);
  VectorXd d(mi);
  for (Index c = 0; c < mi; ++c) {
    const Ineq& in = ineqs[static_cast<std::size_t>(c)];
    if (in.kind == 0) {
      for (std::size_t j = 0; j < n; ++j) C(c, ix(j)) = prob.G()(in.idx, j);
      d(c) = -prob.g()[in.idx];
    } else if (in.kind == 1) {
      C(c, ix(in.idx)) = 1.0;
      d(c) = box.ub[in.idx];
    } else {
      C(c, ix(in.idx)) = -1.0;
      d(c) = -box.lb[in.idx];
    }
  }

  VectorXd u = VectorXd::Zero(nn);
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = box.lb[i];
    const double hi = box.ub[i];
    if (std::isfinite(lo) && std::isfinite(hi)) u(ix(i)) = 0.5 * (lo + hi);
    else if (std::isfinite(lo)) u(ix(i)) = lo + 1.0;
    else if (std::isfinite(hi)) u(ix(i)) = hi - 1.0;
  }
  VectorXd y = VectorXd::Zero(me);
  VectorXd s = (d - C * u).cwiseMax(1.0);
  VectorXd z = VectorXd::Ones(mi);

  const double scale = 1.0 + q.norm() + b.norm() + (mi > 0 ? d.lpNorm<Eigen::Infinity>() : 0.0);
  const Index m = nn + me;
  std::uint64_t iter = 0;
  bool converged = false;
  auto max_step = [](const VectorXd& v, const VectorXd& dv) {
    double a = 1.0;
    for (Index i = 0; i < v.size(); ++i)
      if (dv(i) < 0.0) a = std::min(a, -v(i) / dv(i));
    return a;
  };
  for (; iter < 200; ++iter) {
    const VectorXd rd = Q * u + q + A.transpose() * y + C.transpose() * z;
    const VectorXd re = A * u - b;
    const VectorXd ri = C * u + s - d;
    const double mu = mi > 0 ? s.dot(z) / static_cast<double>(mi) : 0.0;
    const double res = std::max({rd.norm(), re.norm(), ri.norm()});
    if (res <= 1e-12 * scale && mu <= 1e-14 * scale) {
      converged = true;
      break;
    }
    const VectorXd w = z.cwiseQuotient(s);
    MatrixXd K = MatrixXd::Zero(m, m);
    K.topLeftCorner(nn, nn) = Q + C.transpose() * w.asDiagonal() * C;
    K.topRightCorner(nn, me) = A.transpose();
    K.bottomLeftCorner(me, nn) = A;
    const Eigen::FullPivLU<MatrixXd> lu(K);
    auto newton = [&](const VectorXd& rsz, VectorXd& du, VectorXd& dy, VectorXd& ds,
                      VectorXd& dz) {
      VectorXd rhs(m);
      rhs.head(nn) = -rd - C.transpose() * (w.cwiseProduct(ri) - rsz.cwiseQuotient(s));
      rhs.tail(me) = -re;
      const VectorXd sol = lu.solve(rhs);
      du = sol.head(nn);
      dy = sol.tail(me);
      dz = w.cwiseProduct(C * du + ri) - rsz.cwiseQuotient(s);
      ds = -(rsz + s.cwiseProduct(dz)).cwiseQuotient(z);
    };
    VectorXd du, dy, ds, dz;
    const VectorXd sz = s.cwiseProduct(z);
    newton(sz, du, dy, ds, dz);
    double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    double sigma = 0.0;
    if (mi > 0) {
      const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(mi);
      sigma = std::pow(mu_aff / std::max(mu, 1e-300), 3.0);
      const VectorXd rsz = sz + ds.cwiseProduct(dz) - VectorXd::Constant(mi, sigma * mu);
      newton(rsz, du, dy, ds, dz);
    }
    const double a = std::min(1.0, 0.99 * std::min(max_step(s, ds), max_step(z, dz)));
    u += a * du;
    y += a * dy;
    s += a * ds;
    z += a * dz;
  }
  if (!converged) {
    const VectorXd rd = Q * u + q + A.transpose() * y + C.transpose() * z;
    const double res = std::max({rd.norm(), (A * u - b).norm(), (C * u + s - d).norm()});
    if (!(res <= 1e-8 * scale)) {
      throw ConvergenceError("reference_solve: interior point method did not converge", res);
    }
  }

  Candidate c;
  c.u.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) c.u[i] = std::clamp(u(ix(i)), box.lb[i], box.ub[i]);
  c.lambda.assign(p, 0.0);
  for (Index e = 0; e < me; ++e) c.lambda[eq_rows[static_cast<std::size_t>(e)]] = y(e);
  c.box_mult.assign(n, 0.0);
  c.box_state.assign(n, BoxState::kFree);
  c.row_active.assign(p, false);
  for (std::size_t r : eq_rows) c.row_active[r] = true;
  const double act_tol = 1e-8 * scale;
  for (Index k = 0; k < mi; ++k) {
    const Ineq& in = ineqs[static_cast<std::size_t>(k)];
    const double zk = z(k);
    const bool active = s(k) <= act_tol && zk >= s(k);
    if (in.kind == 0) {
      c.lambda[in.idx] = zk;
      c.row_active[in.idx] = active;
    } else if (in.kind == 1) {
      c.box_mult[in.idx] += zk;
      if (active) c.box_state[in.idx] = BoxState::kUpper;
    } else {
      c.box_mult[in.idx] -= zk;
      if (active) c.box_state[in.idx] = BoxState::kLower;
    }
  }
  OracleSolution sol = to_solution(prob, std::move(c));
  sol.candidates = iter;
  return sol;
}

OracleSolution best_reference(const QpProblem& prob, double max_assignments) {
  if (prob.n() <= 12 && prob.p() <= 10 && oracle_assignment_count(prob) <= max_assignments) {
    return oracle_solve(prob);
  }
  return reference_solve(prob);
}

double oracle_dual_radius(const OracleSolution& sol, std::span<const double> lambda0) {
  if (lambda0.empty()) return norm2(sol.lambda_star);
  return distance(sol.lambda_star, lambda0);
}

bool has_unique_multipliers(const QpProblem& prob, const OracleSolution& sol,
                            double active_tol) {
  const std::size_t n = prob.n();
  const std::size_t p = prob.p();
  const Vector gu = matvec(prob.G(), sol.u_star);
  std::vector<Vector> grads;
  for (std::size_t r = 0; r < p; ++r) {
    const double v = gu[r] + prob.g()[r];
    if (prob.cones()[r] == ConeKind::kZero || std::abs(v) <= active_tol) {
      auto row = prob.G().row(r);
      grads.emplace_back(row.begin(), row.end());
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double x = sol.u_star[i];
    const auto& box = prob.box();
    if (std::abs(x - box.lb[i]) <= active_tol || std::abs(x - box.ub[i]) <= active_tol) {
      Vector e(n, 0.0);
      e[i] = 1.0;
      grads.push_back(std::move(e));
    }
  }
  if (grads.empty()) return true;
  if (grads.size() > n) return false;
  MatrixXd M(ix(grads.size()), ix(n));
  for (std::size_t a = 0; a < grads.size(); ++a)
    for (std::size_t j = 0; j < n; ++j) M(ix(a), ix(j)) = grads[a][j];
  const Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  return smin > 1e-6 * std::max(1.0, smax);
}

}  // namespace dualqp
