#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dualqp/bench.hpp"
#include "dualqp/error.hpp"
#include "dualqp/oracle.hpp"
#include "test_util.hpp"

namespace dualqp {
namespace {

using testing::make_problem;
using testing::uniform_box;

TEST(Oracle, ScalarUnconstrained) {
  const QpProblem p = make_problem(1, {2}, {-2}, {}, {}, {}, uniform_box(1, -10, 10));
  const OracleSolution s = oracle_solve(p);
  EXPECT_NEAR(s.u_star[0], 1.0, 1e-14);
  EXPECT_NEAR(s.f_star, -1.0, 1e-14);
  EXPECT_EQ(s.box_state[0], BoxState::kFree);
  EXPECT_EQ(s.candidates, 3u);
}

TEST(Oracle, EqualityConstrainedPair) {
  // min 1/2 ||u||^2  s.t.  u1 + u2 - 1 = 0.
  const QpProblem p = make_problem(2, {1, 0, 0, 1}, {0, 0}, {1, 1}, {-1}, {ConeKind::kZero},
                                   uniform_box(2, -10, 10));
  const OracleSolution s = oracle_solve(p);
  EXPECT_NEAR(s.u_star[0], 0.5, 1e-14);
  EXPECT_NEAR(s.u_star[1], 0.5, 1e-14);
  EXPECT_NEAR(s.f_star, 0.25, 1e-14);
  EXPECT_NEAR(s.lambda_star[0], -0.5, 1e-14);
  EXPECT_TRUE(s.row_active[0]);
}

TEST(Oracle, ActiveInequality) {
  // min u^2 - 4u  s.t.  u - 1 <= 0: unconstrained u = 2 is cut off.
  const QpProblem p = make_problem(1, {2}, {-4}, {1}, {-1}, {ConeKind::kNonPos},
                                   uniform_box(1, -10, 10));
  const OracleSolution s = oracle_solve(p);
  EXPECT_NEAR(s.u_star[0], 1.0, 1e-14);
  EXPECT_NEAR(s.lambda_star[0], 2.0, 1e-14);
  EXPECT_NEAR(s.f_star, -3.0, 1e-14);
  EXPECT_TRUE(s.row_active[0]);
}

TEST(Oracle, ActiveBoxFace) {
  const QpProblem p = make_problem(1, {1}, {-5}, {}, {}, {}, uniform_box(1, -2, 3));
  const OracleSolution s = oracle_solve(p);
  EXPECT_EQ(s.u_star[0], 3.0);
  EXPECT_EQ(s.box_state[0], BoxState::kUpper);
  // Q u + q + nu_ub - nu_lb = 0: 3 - 5 + 2 = 0.
  EXPECT_NEAR(s.box_multipliers[0], 2.0, 1e-14);
}

TEST(Oracle, RejectsLargeAndInfeasible) {
  const QpProblem big(DenseMatrix::identity(13), Vector(13, 0.0), DenseMatrix(0, 13), {}, {},
                      uniform_box(13, -1, 1));
  EXPECT_THROW(oracle_solve(big), DimensionError);
  // u <= -2 inside [-1, 1].
  const QpProblem empty = make_problem(1, {1}, {0}, {1}, {2}, {ConeKind::kNonPos},
                                       uniform_box(1, -1, 1));
  EXPECT_THROW(oracle_solve(empty), InfeasibleSpecError);
}

TEST(Oracle, DualRadius) {
  OracleSolution s;
  s.lambda_star = {0};
  EXPECT_EQ(oracle_dual_radius(s), 0.0);
  s.lambda_star = {2};
  EXPECT_EQ(oracle_dual_radius(s), 2.0);
  s.lambda_star = {3, 4};
  EXPECT_EQ(oracle_dual_radius(s), 5.0);
  EXPECT_EQ(oracle_dual_radius(s, Vector{3, 0}), 4.0);
}

TEST(Oracle, TieBreakPrefersSmallerNorm) {
  // Q = 0, q = 0: the free assignment is singular, so both faces tie at F = 0.
  const QpProblem p = make_problem(1, {0}, {0}, {}, {}, {}, uniform_box(1, -1, 2));
  const OracleSolution s = oracle_solve(p);
  EXPECT_EQ(s.f_star, 0.0);
  EXPECT_EQ(s.u_star[0], -1.0);
}

// Sign, complementarity, feasibility and stationarity of one solution.
void expect_kkt(const QpProblem& p, const OracleSolution& s, double tol) {
  const double scale = 1.0 + norm2(p.q());
  EXPECT_LE(kkt_residual(p, s.u_star, s.lambda_star, s.box_multipliers), tol * scale);
  EXPECT_LE(s.kkt_residual, tol * scale);
  EXPECT_LE(infeasibility(p, s.u_star), 1e-10 * scale);
  EXPECT_TRUE(p.box().contains(s.u_star));
  const Vector gu = matvec(p.G(), s.u_star);
  for (std::size_t r = 0; r < p.p(); ++r) {
    if (p.cones()[r] != ConeKind::kNonPos) continue;
    EXPECT_GE(s.lambda_star[r], -1e-10);
    EXPECT_LE(std::abs(s.lambda_star[r] * (gu[r] + p.g()[r])), tol * scale);
  }
  for (std::size_t i = 0; i < p.n(); ++i) {
    const double nu = s.box_multipliers[i];
    const double up = p.box().ub[i] - s.u_star[i];
    const double lo = s.u_star[i] - p.box().lb[i];
    if (nu > 0) {
      EXPECT_LE(nu * up, tol * scale);
    }
    if (nu < 0) {
      EXPECT_LE(-nu * lo, tol * scale);
    }
  }
}

TEST(Oracle, KktInvariantsOnRandomInstances) {
  for (Family fam : {Family::kStronglyConvexIneq, Family::kPsdEq}) {
    std::mt19937_64 rng(fam == Family::kPsdEq ? 1 : 2);
    for (int t = 0; t < 40; ++t) {
      const std::size_t n = 2 + t % 5;
      const std::size_t p = 1 + t % 4;
      const QpProblem prob = generate_random_qp(n, std::min(p, n), fam, rng);
      const OracleSolution s = oracle_solve(prob);
      expect_kkt(prob, s, 1e-9);
    }
  }
}

TEST(Oracle, InteriorPointAgreesWithEnumeration) {
  int compared = 0;
  for (int t = 0; t < 200; ++t) {
    const Family fam = t % 2 ? Family::kPsdEq : Family::kStronglyConvexIneq;
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(t));
    const std::size_t n = 2 + t % 5;
    const std::size_t p = std::min<std::size_t>(1 + t % 4, n);
    const QpProblem prob = generate_random_qp(n, p, fam, rng);
    const OracleSolution a = oracle_solve(prob);
    const OracleSolution b = reference_solve(prob);
    EXPECT_NEAR(a.f_star, b.f_star, 1e-7) << "instance " << t;
    EXPECT_LE(b.kkt_residual, 1e-7 * (1.0 + norm2(prob.q()))) << "instance " << t;
    ++compared;
  }
  EXPECT_EQ(compared, 200);
}

TEST(Oracle, BestReferenceSwitchesOnSize) {
  std::mt19937_64 rng(5);
  const QpProblem small = generate_random_qp(4, 2, Family::kStronglyConvexIneq, rng);
  EXPECT_EQ(best_reference(small).candidates, static_cast<std::uint64_t>(81 * 4));
  const QpProblem large = generate_random_qp(30, 15, Family::kStronglyConvexIneq, rng);
  const OracleSolution s = best_reference(large);
  EXPECT_LT(s.candidates, 200u);  // IPM iterations
  EXPECT_LE(s.kkt_residual, 1e-7 * (1.0 + norm2(large.q())));
  EXPECT_LE(infeasibility(large, s.u_star), 1e-7);
}

TEST(Oracle, UniqueMultiplierCheck) {
  // Two copies of the same active row: multipliers are not unique.
  const QpProblem dup = make_problem(1, {2}, {-4}, {1, 1}, {-1, -1},
                                     {ConeKind::kNonPos, ConeKind::kNonPos},
                                     uniform_box(1, -10, 10));
  EXPECT_FALSE(has_unique_multipliers(dup, oracle_solve(dup)));
  const QpProblem one = make_problem(1, {2}, {-4}, {1}, {-1}, {ConeKind::kNonPos},
                                     uniform_box(1, -10, 10));
  EXPECT_TRUE(has_unique_multipliers(one, oracle_solve(one)));
}

}  // namespace
}  // namespace dualqp
