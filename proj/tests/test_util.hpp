#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dualqp/qp_model.hpp"

namespace dualqp::testing {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline BoxSet uniform_box(std::size_t n, double lo, double hi) {
  return BoxSet{Vector(n, lo), Vector(n, hi)};
}

inline QpProblem make_problem(std::size_t n, Vector Q, Vector q, Vector G, Vector g,
                              std::vector<ConeKind> cones, BoxSet box) {
  const std::size_t p = g.size();
  return QpProblem(DenseMatrix(n, n, std::move(Q)), std::move(q),
                   DenseMatrix(p, n, std::move(G)), std::move(g), std::move(cones),
                   std::move(box));
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

inline Vector random_in_box(const BoxSet& box, std::mt19937_64& rng) {
  Vector v(box.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uniform_real_distribution<double> ud(box.lb[i], box.ub[i]);
    v[i] = ud(rng);
  }
  return v;
}

}  // namespace dualqp::testing
