#include "dualqp/qp_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dualqp/error.hpp"

namespace dualqp {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

bool any_nan(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
}

// Power iteration can stall on matrices with clustered top singular values;
// the eigen route on G G' (or G'G) is exact enough for a cached constant.
double robust_spectral_norm(const DenseMatrix& g) {
  try {
    return spectral_norm(g);
  } catch (const ConvergenceError&) {
    const DenseMatrix gram = g.rows() <= g.cols()
                                 ? add_scaled_gram(DenseMatrix(g.rows(), g.rows()),
                                                   g.transposed(), 1.0)
                                 : add_scaled_gram(DenseMatrix(g.cols(), g.cols()),
                                                   g, 1.0);
    return std::sqrt(std::max(0.0, sym_eig_extremes(gram).lambda_max));
  }
}

}  // namespace

bool BoxSet::bounded() const {
  for (std::size_t i = 0; i < lb.size(); ++i)
    if (!std::isfinite(lb[i]) || !std::isfinite(ub[i])) return false;
  return true;
}

double BoxSet::diameter() const {
  if (!bounded()) return std::numeric_limits<double>::infinity();
  return distance(ub, lb);
}

void BoxSet::project(std::span<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lb[i], ub[i]);
}

bool BoxSet::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= lb[i] && x[i] <= ub[i])) return false;
  return true;
}

QpProblem::QpProblem(DenseMatrix Q, Vector q, DenseMatrix G, Vector g,
                     std::vector<ConeKind> cones, BoxSet box)
    : Q_(std::move(Q)),
      q_(std::move(q)),
      G_(std::move(G)),
      g_(std::move(g)),
      cones_(std::move(cones)),
      box_(std::move(box)) {
  const std::size_t n = q_.size();
  require(n >= 1, "problem dimension must be at least 1");
  require(Q_.rows() == n && Q_.cols() == n, "Q must be n x n");
  require(G_.rows() == g_.size(), "G rows must match length of g");
  require(g_.empty() || G_.cols() == n, "G must have n columns");
  require(cones_.size() == g_.size(), "one cone tag per constraint row");
  require(box_.lb.size() == n && box_.ub.size() == n, "box bounds must have length n");
  if (!all_finite(q_) || !all_finite(g_)) {
    throw InfeasibleSpecError("q and g must be finite");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(box_.lb[i]) || std::isnan(box_.ub[i])) {
      throw InfeasibleSpecError("NaN in box bounds");
    }
    if (box_.lb[i] > box_.ub[i] || box_.lb[i] == std::numeric_limits<double>::infinity() ||
        box_.ub[i] == -std::numeric_limits<double>::infinity()) {
      throw InfeasibleSpecError("empty box in coordinate " + std::to_string(i));
    }
  }
  if (G_.rows() == 0) G_ = DenseMatrix(0, n);

  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(Q_(i, j) - Q_(j, i)));
  if (asym > 1e-12 * std::max(1.0, Q_.frobenius_norm())) {
    throw InfeasibleSpecError("Q is not symmetric");
  }
  const EigenExtremes ext = sym_eig_extremes(Q_, /*psd=*/true);
  if (ext.lambda_min < -kEigTolerance * std::max(1.0, std::abs(ext.lambda_max))) {
    throw InfeasibleSpecError("Q is not positive semidefinite (lambda_min = " +
                              std::to_string(ext.lambda_min) + ")");
  }
  lambda_min_Q_ = std::max(0.0, ext.lambda_min);
  lambda_max_Q_ = std::max(0.0, ext.lambda_max);
  norm_G_ = G_.empty() ? 0.0 : robust_spectral_norm(G_);
}

bool QpProblem::all_zero_cone() const {
  return std::all_of(cones_.begin(), cones_.end(),
                     [](ConeKind c) { return c == ConeKind::kZero; });
}

bool QpProblem::has_nonpos_rows() const { return !all_zero_cone(); }

QpProblem ingest(const RawProblem& raw) {
  const std::size_t n = raw.n;
  const std::size_t p = raw.p_raw();
  require(n >= 1, "n must be at least 1");
  require(raw.Q.size() == n * n, "Q must hold n*n entries");
  require(raw.q.size() == n, "q must hold n entries");
  require(raw.G_raw.size() == p * n, "G_raw must hold p_raw*n entries");
  require(raw.lbA.size() == p && raw.ubA.size() == p, "lbA/ubA must hold p_raw entries");
  require(raw.lb.size() == n && raw.ub.size() == n, "lb/ub must hold n entries");
  for (auto v : {std::span<const double>(raw.Q), std::span<const double>(raw.q),
                 std::span<const double>(raw.G_raw), std::span<const double>(raw.g_raw),
                 std::span<const double>(raw.lbA), std::span<const double>(raw.ubA),
                 std::span<const double>(raw.lb), std::span<const double>(raw.ub)}) {
    if (any_nan(v)) throw InfeasibleSpecError("NaN in problem data");
  }
  if (!all_finite(raw.Q) || !all_finite(raw.q) || !all_finite(raw.G_raw) ||
      !all_finite(raw.g_raw)) {
    throw InfeasibleSpecError("Q, q, G_raw and g_raw must be finite");
  }

  Vector rows;
  Vector g;
  std::vector<ConeKind> cones;
  auto push_row = [&](std::size_t i, double sign, double offset, ConeKind kind) {
    for (std::size_t j = 0; j < n; ++j) rows.push_back(sign * raw.G_raw[i * n + j]);
    g.push_back(sign * raw.g_raw[i] + offset);
    cones.push_back(kind);
  };
  for (std::size_t i = 0; i < p; ++i) {
    const double lo = raw.lbA[i];
    const double hi = raw.ubA[i];
    if (lo > hi) {
      throw InfeasibleSpecError("constraint row " + std::to_string(i) + ": lbA > ubA");
    }
    if (lo == hi) {
      if (!std::isfinite(hi)) {
        throw InfeasibleSpecError("constraint row " + std::to_string(i) +
                                  ": infinite equality bound");
      }
      push_row(i, 1.0, -hi, ConeKind::kZero);
      continue;
    }
    if (std::isfinite(hi)) push_row(i, 1.0, -hi, ConeKind::kNonPos);
    if (std::isfinite(lo)) push_row(i, -1.0, lo, ConeKind::kNonPos);
  }
  const std::size_t rows_out = g.size();
  return QpProblem(DenseMatrix(n, n, raw.Q), raw.q, DenseMatrix(rows_out, n, std::move(rows)),
                   std::move(g), std::move(cones), BoxSet{raw.lb, raw.ub});
}

Vector project_cone(std::span<const double> v, std::span<const ConeKind> cones) {
  if (v.size() != cones.size()) throw DimensionError("project_cone: dimension mismatch");
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = cones[i] == ConeKind::kZero ? 0.0 : std::min(v[i], 0.0);
  }
  return out;
}

double dist_cone(std::span<const double> v, std::span<const ConeKind> cones) {
  if (v.size() != cones.size()) throw DimensionError("dist_cone: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = cones[i] == ConeKind::kZero ? v[i] : std::max(v[i], 0.0);
    s += r * r;
  }
  return std::sqrt(s);
}

double objective(const QpProblem& prob, std::span<const double> u) {
  const Vector qu = matvec(prob.Q(), u);
  return 0.5 * dot(u, qu) + dot(prob.q(), u);
}

double infeasibility(const QpProblem& prob, std::span<const double> u) {
  Vector r = matvec(prob.G(), u);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] += prob.g()[i];
  return dist_cone(r, prob.cones());
}

namespace {

Vector shifted_residual(std::span<const double> u, std::span<const double> lambda,
                        const QpProblem& prob, double rho) {
  if (lambda.size() != prob.p()) throw DimensionError("multiplier length must be p");
  if (rho < 0.0) throw DimensionError("rho must be nonnegative");
  Vector w = matvec(prob.G(), u);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] += prob.g()[i];
    if (rho > 0.0) w[i] += lambda[i] / rho;
  }
  return w;
}

}  // namespace

Vector slack(std::span<const double> u, std::span<const double> lambda,
             const QpProblem& prob, double rho) {
  if (rho == 0.0) return Vector(prob.p(), 0.0);
  return project_cone(shifted_residual(u, lambda, prob, rho), prob.cones());
}

double lagrangian_value(std::span<const double> u, std::span<const double> lambda,
                        const QpProblem& prob, double rho) {
  const Vector w = shifted_residual(u, lambda, prob, rho);
  const double f = objective(prob, u);
  if (rho == 0.0) return f + dot(lambda, w);
  const double d = dist_cone(w, prob.cones());
  return f + 0.5 * rho * d * d - dot(lambda, lambda) / (2.0 * rho);
}

Vector lagrangian_grad(std::span<const double> u, std::span<const double> lambda,
                       const QpProblem& prob, double rho) {
  Vector grad = matvec(prob.Q(), u);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += prob.q()[i];
  // rho * (w - P_K(w)) equals lambda + rho * (Gu + g - s).
  Vector w = shifted_residual(u, lambda, prob, rho);
  Vector mult(prob.p());
  if (rho == 0.0) {
    mult.assign(lambda.begin(), lambda.end());
  } else {
    const Vector pw = project_cone(w, prob.cones());
    for (std::size_t i = 0; i < mult.size(); ++i) mult[i] = rho * (w[i] - pw[i]);
  }
  const Vector gt = matvec_transposed(prob.G(), mult);
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += gt[i];
  return grad;
}

}  // namespace dualqp
