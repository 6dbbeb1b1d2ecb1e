#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dualqp/error.hpp"
#include "dualqp/inner_fom.hpp"
#include "dualqp/oracle.hpp"
#include "dualqp/qp_model.hpp"
#include "test_util.hpp"

namespace dualqp {
namespace {

using testing::kInf;
using testing::make_problem;
using testing::random_in_box;
using testing::random_vector;
using testing::uniform_box;

// Gradient of 1/2 x'Qx + q'x for a dense row-major Q.
struct QuadGrad {
  const Vector* Q;
  const Vector* q;
  void operator()(std::span<const double> y, std::span<double> out) const {
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
      double v = (*q)[i];
      for (std::size_t j = 0; j < n; ++j) v += (*Q)[i * n + j] * y[j];
      out[i] = v;
    }
  }
};

double quad_value(const Vector& Q, const Vector& q, const Vector& x) {
  const std::size_t n = x.size();
  double f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) r += Q[i * n + j] * x[j];
    f += 0.5 * x[i] * r + q[i] * x[i];
  }
  return f;
}

TEST(FomStep, GmSolvesScalarQuadraticInOneStep) {
  // phi(u) = u^2 - 2u, L = 2.
  const Vector Q{2}, q{-2};
  InnerState s(Vector{0}, 2.0, 2.0);
  MomentumRule rule(MomentumVariant::kGm, 2.0, 0.0);
  fom_step(s, rule, QuadGrad{&Q, &q}, uniform_box(1, -10, 10));
  EXPECT_EQ(s.x[0], 1.0);
  EXPECT_EQ(s.k, 1u);
}

TEST(FomStep, RejectsBadInput) {
  const Vector Q{1}, q{NAN};
  InnerState s(Vector{0}, 1.0, 0.0);
  MomentumRule rule(MomentumVariant::kGm, 1.0, 0.0);
  EXPECT_THROW(fom_step(s, rule, QuadGrad{&Q, &q}, uniform_box(1, -1, 1)), NumericalError);
  InnerState z(Vector{0}, 0.0, 0.0);
  const Vector q0{0};
  EXPECT_THROW(fom_step(z, rule, QuadGrad{&Q, &q0}, uniform_box(1, -1, 1)), DimensionError);
  EXPECT_THROW(MomentumRule(MomentumVariant::kFgmSigma, 1.0, 0.0), DimensionError);
}

TEST(Theta, FirstValues) {
  ThetaSequence t;
  EXPECT_EQ(t.theta(), 1.0);
  EXPECT_NEAR(t.following(), (1.0 + std::sqrt(5.0)) / 2.0, 1e-15);
  EXPECT_EQ(t.beta(), 0.0);
  t.advance();
  EXPECT_NEAR(t.theta(), 1.61803398875, 1e-10);
  EXPECT_NEAR(t.following(), 2.19353, 1e-5);
  // 0.6180340 / 2.1935271 = 0.2817535.
  EXPECT_NEAR(t.beta(), 0.2817535, 1e-7);
  // Same numbers from the closed-form recurrence, evaluated by hand.
  const double th2 = 0.5 * (1.0 + std::sqrt(5.0));
  const double th3 = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * th2 * th2));
  EXPECT_DOUBLE_EQ(t.beta(), (th2 - 1.0) / th3);
}

TEST(Theta, IdentitiesUpToTenThousand) {
  ThetaSequence t;
  for (std::uint64_t k = 1; k <= 10000; ++k) {
    ASSERT_EQ(t.k(), k);
    const double kk = static_cast<double>(k);
    ASSERT_GE(t.theta(), (kk + 1.0) / 2.0);
    ASSERT_LE(t.theta(), kk);
    ASSERT_NEAR(t.sum(), t.theta() * t.theta(), 1e-9 * t.sum());
    t.advance();
  }
}

TEST(MomentumRule, Betas) {
  MomentumRule gm(MomentumVariant::kGm, 4.0, 1.0);
  MomentumRule fs(MomentumVariant::kFgmSigma, 4.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(gm.beta(), 0.0);
    EXPECT_DOUBLE_EQ(fs.beta(), 1.0 / 3.0);
    gm.advance();
    fs.advance();
  }
}

TEST(RunFom, ScalarUnconstrainedQuadratic) {
  const Vector Q{1}, q{-1};
  InnerStopPolicy pol;
  pol.mode = InnerStopMode::kGradientMap;
  pol.epsilon_in = 1e-8;
  const InnerResult r = run_fom(QuadGrad{&Q, &q}, Vector{0}, uniform_box(1, -kInf, kInf), 1.0,
                                1.0, MomentumVariant::kGm, pol);
  EXPECT_NEAR(r.u[0], 1.0, 1e-4);
  EXPECT_FALSE(r.cap_hit);
}

TEST(RunFom, WarmStartAtMinimizerStopsImmediately) {
  const Vector Q{2, 0, 0, 3}, q{-2, 3};
  InnerStopPolicy pol;
  pol.epsilon_in = 1e-10;
  const InnerResult r = run_fom(QuadGrad{&Q, &q}, Vector{1, -1}, uniform_box(2, -5, 5), 3.0,
                                2.0, MomentumVariant::kFgmSigma, pol);
  // One gradient evaluation certifies the start point.
  EXPECT_EQ(r.iterations, 1u);
  EXPECT_EQ(r.last_gradient_map, 0.0);
  EXPECT_EQ(r.u, (Vector{1, -1}));
}

TEST(RunFom, FgmSigmaBeatsGmOnIllConditioned) {
  const Vector Q{1, 0, 0, 100}, q{-1, -100};
  InnerStopPolicy pol;
  pol.epsilon_in = 1e-6;
  const BoxSet box = uniform_box(2, 0, 10);
  const InnerResult gm = run_fom(QuadGrad{&Q, &q}, Vector{0, 0}, box, 100.0, 1.0,
                                 MomentumVariant::kGm, pol);
  const InnerResult fs = run_fom(QuadGrad{&Q, &q}, Vector{0, 0}, box, 100.0, 1.0,
                                 MomentumVariant::kFgmSigma, pol);
  EXPECT_FALSE(gm.cap_hit);
  EXPECT_FALSE(fs.cap_hit);
  EXPECT_LT(fs.iterations, gm.iterations);
  // Both certify eps_in through the strong convexity bound.
  for (const auto* r : {&gm, &fs}) {
    EXPECT_LE(quad_value(Q, q, r->u) - quad_value(Q, q, Vector{1, 1}), 1e-6);
  }
}

TEST(RunFom, FixedCountRunsExactly) {
  const Vector Q{1, 0, 0, 2}, q{0.3, -1};
  InnerStopPolicy pol;
  pol.mode = InnerStopMode::kFixedCount;
  pol.k_in = 17;
  const InnerResult r = run_fom(QuadGrad{&Q, &q}, Vector{4, 4}, uniform_box(2, -5, 5), 2.0, 0.0,
                                MomentumVariant::kFgm, pol);
  EXPECT_EQ(r.iterations, 17u);
}

TEST(RunFom, CapIsReported) {
  const Vector Q{1, 0, 0, 1000}, q{-1, 0};
  InnerStopPolicy pol;
  pol.epsilon_in = 1e-14;
  pol.cap = 5;
  const InnerResult r = run_fom(QuadGrad{&Q, &q}, Vector{9, 9}, uniform_box(2, -10, 10),
                                1000.0, 1.0, MomentumVariant::kGm, pol);
  EXPECT_TRUE(r.cap_hit);
  EXPECT_EQ(r.iterations, 5u);
  EXPECT_THROW(run_fom(QuadGrad{&Q, &q}, Vector{9, 9}, uniform_box(2, -10, 10), 1000.0, 0.0,
                       MomentumVariant::kGm, pol),
               DimensionError);
}

TEST(GradientMap, Examples) {
  const Vector Q{1, 0, 0, 1}, q{-1, 2};
  const QuadGrad g{&Q, &q};
  EXPECT_EQ(gradient_map_norm(Vector{1, -2}, g, 1.0, uniform_box(2, -5, 5)), 0.0);
  // Unconstrained: equals the gradient norm.
  EXPECT_DOUBLE_EQ(gradient_map_norm(Vector{4, 2}, g, 3.0, uniform_box(2, -kInf, kInf)),
                   std::sqrt(9.0 + 16.0));
  // phi = u^2 / 2 on [1, 2] at x = 1: the projection clamps back to 1.
  const Vector Q1{1}, q1{0};
  EXPECT_EQ(gradient_map_norm(Vector{1}, QuadGrad{&Q1, &q1}, 1.0, uniform_box(1, 1, 2)), 0.0);
}

struct BoxQp {
  Vector Q;
  Vector q;
  BoxSet box;
  double L;
  double sigma;
  double phi_star;
  Vector x_star;
};

// Q = A'A / n (+ shift I), box [-1, 1]^n; optimum from enumeration.
BoxQp random_box_qp(std::size_t n, double shift, std::size_t rank, std::mt19937_64& rng) {
  BoxQp b;
  const Vector a = random_vector(rank * n, rng);
  b.Q.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < rank; ++k) b.Q[i * n + j] += a[k * n + i] * a[k * n + j];
      b.Q[i * n + j] /= static_cast<double>(n);
      if (i == j) b.Q[i * n + j] += shift;
    }
  b.q = random_vector(n, rng, 2.0);
  b.box = uniform_box(n, -1, 1);
  const QpProblem prob(DenseMatrix(n, n, b.Q), b.q, DenseMatrix(0, n), {}, {}, b.box);
  b.L = prob.lambda_max_Q() * (1.0 + kSafetyInflation);
  b.sigma = prob.lambda_min_Q() * (1.0 - kSafetyInflation);
  const OracleSolution sol = oracle_solve(prob);
  b.phi_star = sol.f_star;
  b.x_star = sol.u_star;
  return b;
}

// Every iterate in the box, GM monotone, and the three rate envelopes.
void check_envelopes(MomentumVariant variant, bool strongly_convex) {
  std::mt19937_64 rng(variant == MomentumVariant::kGm ? 101 : 202);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t n = 6;
    const BoxQp b = strongly_convex ? random_box_qp(n, 0.05, n, rng)
                                    : random_box_qp(n, 0.0, n - 2, rng);
    const Vector x0 = random_in_box(b.box, rng);
    const double R = distance(x0, b.x_star);
    const double sigma = strongly_convex ? b.sigma : 0.0;
    InnerState s(x0, b.L, sigma);
    MomentumRule rule(variant, b.L, sigma);
    const QuadGrad g{&b.Q, &b.q};
    double prev = quad_value(b.Q, b.q, x0);
    for (std::uint64_t k = 1; k <= 500; ++k) {
      fom_step(s, rule, g, b.box);
      ASSERT_TRUE(b.box.contains(s.x)) << "k=" << k;
      const double gap = quad_value(b.Q, b.q, s.x) - b.phi_star;
      const double k1 = static_cast<double>(k) + 1.0;
      double env = 0.0;
      switch (variant) {
        case MomentumVariant::kGm:
          env = 2.0 * b.L * R * R / k1;
          break;
        case MomentumVariant::kFgm:
          env = 2.0 * b.L * R * R / (k1 * k1);
          break;
        case MomentumVariant::kFgmSigma:
          env = std::pow(1.0 - std::sqrt(sigma / b.L), static_cast<double>(k) - 1.0) * b.L * R * R;
          break;
      }
      ASSERT_LE(gap, env + 1e-12) << "instance " << inst << " k=" << k;
      ASSERT_GE(gap, -1e-9) << "instance " << inst << " k=" << k;
      if (variant == MomentumVariant::kGm) {
        const double cur = quad_value(b.Q, b.q, s.x);
        ASSERT_LE(cur, prev + 1e-12);
        prev = cur;
      }
    }
  }
}

TEST(RateEnvelope, GradientMethodEnvelope) { check_envelopes(MomentumVariant::kGm, false); }
TEST(RateEnvelope, FastGradientEnvelope) { check_envelopes(MomentumVariant::kFgm, false); }
TEST(RateEnvelope, StronglyConvexEnvelope) { check_envelopes(MomentumVariant::kFgmSigma, true); }

TEST(Subproblem, GradientPathsMatchLagrangianGradient) {
  std::mt19937_64 rng(33);
  using K = ConeKind;
  const std::vector<std::vector<K>> cone_sets{{K::kZero, K::kZero}, {K::kNonPos, K::kZero}};
  for (const auto& cones : cone_sets) {
    for (double rho : {0.0, 0.7, 12.0}) {
      const QpProblem p = make_problem(3, {2, 0.5, 0, 0.5, 1, 0, 0, 0, 1.5},
                                       random_vector(3, rng), random_vector(6, rng),
                                       random_vector(2, rng), cones, uniform_box(3, -4, 4));
      LagrangianSubproblem sub(p, rho);
      for (int t = 0; t < 10; ++t) {
        const Vector mu = random_vector(2, rng, 3.0);
        const Vector y = random_vector(3, rng, 2.0);
        MatvecCounter c;
        sub.set_multiplier(mu, &c);
        EXPECT_EQ(c.value(), sub.matvecs_per_solve());
        Vector out(3);
        sub.gradient(y, out, &c);
        EXPECT_EQ(c.value(), sub.matvecs_per_solve() + sub.matvecs_per_iteration());
        const Vector ref = lagrangian_grad(y, mu, p, rho);
        for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], ref[i], 1e-10 * (1 + std::abs(ref[i])));
        EXPECT_DOUBLE_EQ(sub.value(y), lagrangian_value(y, mu, p, rho));
      }
      const bool ineq_penalty = rho > 0.0 && cones[0] == K::kNonPos;
      EXPECT_EQ(sub.matvecs_per_iteration(), ineq_penalty ? 3u : 1u);
      EXPECT_EQ(sub.matvecs_per_solve(), ineq_penalty ? 0u : 1u);
    }
  }
}

TEST(Subproblem, NoRowsCostsOneProductPerStep) {
  const QpProblem p = make_problem(2, {1, 0, 0, 1}, {1, 1}, {}, {}, {}, uniform_box(2, -1, 1));
  LagrangianSubproblem sub(p, 0.0);
  MatvecCounter c;
  sub.set_multiplier(Vector{}, &c);
  Vector out(2);
  sub.gradient(Vector{0.5, 0.5}, out, &c);
  EXPECT_EQ(c.value(), 1u);
  EXPECT_EQ(out, (Vector{1.5, 1.5}));
}

TEST(Subproblem, SelfAssignmentKeepsMultiplier) {
  const QpProblem p = make_problem(1, {1}, {0}, {1}, {0}, {ConeKind::kZero},
                                   uniform_box(1, -1, 1));
  LagrangianSubproblem sub(p, 0.0);
  sub.set_multiplier(Vector{2.5}, nullptr);
  sub.set_multiplier(sub.multiplier(), nullptr);
  EXPECT_EQ(sub.multiplier(), (Vector{2.5}));
}

}  // namespace
}  // namespace dualqp
