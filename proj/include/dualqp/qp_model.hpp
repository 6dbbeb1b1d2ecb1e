#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dualqp/linalg.hpp"

namespace dualqp {

/// Constraint sense of one row of G u + g.
enum class ConeKind {
  kZero,    // G_i u + g_i = 0
  kNonPos,  // G_i u + g_i <= 0
};

struct BoxSet {
  Vector lb;  // may hold -inf
  Vector ub;  // may hold +inf

  std::size_t size() const { return lb.size(); }
  bool bounded() const;
  /// Euclidean diameter ||ub - lb||; +inf when any side is unbounded.
  double diameter() const;
  void project(std::span<double> x) const;
  bool contains(std::span<const double> x) const;
};

/// Two-sided user form lbA <= G_raw u + g_raw <= ubA, lb <= u <= ub.
struct RawProblem {
  std::size_t n = 0;
  Vector Q;      // n*n, row-major
  Vector q;      // n
  Vector G_raw;  // p_raw*n, row-major
  Vector g_raw;  // p_raw
  Vector lbA;    // p_raw
  Vector ubA;    // p_raw
  Vector lb;     // n
  Vector ub;     // n

  std::size_t p_raw() const { return g_raw.size(); }
};

/// min 1/2 u'Qu + q'u  s.t.  G u + g in K,  u in box.
///
/// Immutable once built. The eigen-extremes of Q and ||G|| are computed at
/// construction, since every schedule needs them.
class QpProblem {
 public:
  QpProblem(DenseMatrix Q, Vector q, DenseMatrix G, Vector g,
            std::vector<ConeKind> cones, BoxSet box);

  std::size_t n() const { return q_.size(); }
  std::size_t p() const { return g_.size(); }
  const DenseMatrix& Q() const { return Q_; }
  const Vector& q() const { return q_; }
  const DenseMatrix& G() const { return G_; }
  const Vector& g() const { return g_; }
  const std::vector<ConeKind>& cones() const { return cones_; }
  const BoxSet& box() const { return box_; }

  bool all_zero_cone() const;
  bool has_nonpos_rows() const;

  double lambda_min_Q() const { return lambda_min_Q_; }
  double lambda_max_Q() const { return lambda_max_Q_; }
  /// Spectral norm of G, before any safety inflation; 0 when p == 0.
  double norm_G() const { return norm_G_; }

 private:
  DenseMatrix Q_;
  Vector q_;
  DenseMatrix G_;
  Vector g_;
  std::vector<ConeKind> cones_;
  BoxSet box_;
  double lambda_min_Q_ = 0.0;
  double lambda_max_Q_ = 0.0;
  double norm_G_ = 0.0;
};

/// Normalizes two-sided rows into (G, g, K). Equal bounds give one Zero row;
/// otherwise each finite side gives one NonPos row.
QpProblem ingest(const RawProblem& raw);

/// Componentwise projection onto K: Zero rows -> 0, NonPos rows -> min(v, 0).
Vector project_cone(std::span<const double> v, std::span<const ConeKind> cones);
double dist_cone(std::span<const double> v, std::span<const ConeKind> cones);

/// F(u) = 1/2 u'Qu + q'u.
double objective(const QpProblem& prob, std::span<const double> u);
/// dist_K(G u + g).
double infeasibility(const QpProblem& prob, std::span<const double> u);

/// argmin over s in K of the augmented term; zero for rho == 0.
Vector slack(std::span<const double> u, std::span<const double> lambda,
             const QpProblem& prob, double rho);

/// Ordinary (rho = 0) or augmented (rho > 0) Lagrangian value.
double lagrangian_value(std::span<const double> u,
                        std::span<const double> lambda, const QpProblem& prob,
                        double rho);

/// Gradient in u: Qu + q + G'(lambda + rho * (Gu + g - s)).
Vector lagrangian_grad(std::span<const double> u,
                       std::span<const double> lambda, const QpProblem& prob,
                       double rho);

}  // namespace dualqp
