#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dualqp/error.hpp"
#include "dualqp/linalg.hpp"

namespace dualqp {
namespace {

DenseMatrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vector e(r * c);
  for (auto& x : e) x = nd(rng);
  return DenseMatrix(r, c, std::move(e));
}

// Plain triple loop, written independently of matvec_into.
Vector naive_product(const DenseMatrix& a, const Vector& x) {
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a.entries()[i * a.cols() + j] * x[j];
  return y;
}

TEST(DenseMatrix, RejectsWrongSizeAndNonFinite) {
  EXPECT_THROW(DenseMatrix(2, 2, {1, 2, 3}), DimensionError);
  EXPECT_THROW(DenseMatrix(1, 2, {1, NAN}), InfeasibleSpecError);
  EXPECT_THROW(DenseMatrix(1, 1, {INFINITY}), InfeasibleSpecError);
}

TEST(Matvec, IdentityReturnsInput) {
  EXPECT_EQ(matvec(DenseMatrix::identity(2), Vector{3, 4}), (Vector{3, 4}));
}

TEST(Matvec, ZeroMatrixGivesZero) {
  EXPECT_EQ(matvec(DenseMatrix(2, 2), Vector{5, 7}), (Vector{0, 0}));
}

TEST(Matvec, SmallProductMatchesNaiveLoop) {
  const DenseMatrix a(2, 2, {1, 2, 3, 4});
  const Vector x{1, 1};
  EXPECT_EQ(matvec(a, x), (Vector{3, 7}));
  EXPECT_EQ(matvec(a, x), naive_product(a, x));
}

TEST(Matvec, RandomProductsMatchNaiveLoop) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix a = random_matrix(3 + t % 5, 2 + t % 7, rng);
    Vector x(a.cols());
    for (auto& v : x) v = std::normal_distribution<double>()(rng);
    const Vector y = matvec(a, x);
    const Vector z = naive_product(a, x);
    for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], z[i], 1e-12);
    const Vector w = matvec_transposed(a, y);
    const Vector w2 = naive_product(a.transposed(), y);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(w[i], w2[i], 1e-12);
  }
}

TEST(Matvec, DimensionMismatchThrows) {
  EXPECT_THROW(matvec(DenseMatrix(2, 3), Vector{1, 2}), DimensionError);
  EXPECT_THROW(matvec_transposed(DenseMatrix(2, 3), Vector{1, 2, 3}), DimensionError);
}

TEST(MatvecCounter, CountsEachProductExactly) {
  MatvecCounter c;
  const DenseMatrix a(2, 2, {1, 2, 3, 4});
  for (int k = 1; k <= 25; ++k) {
    matvec(a, Vector{1, 1}, &c);
    EXPECT_EQ(c.value(), static_cast<std::uint64_t>(k));
  }
  matvec_transposed(a, Vector{1, 1}, &c);
  EXPECT_EQ(c.value(), 26u);
}

TEST(MatvecCounter, EmptyProductsAreNotCounted) {
  MatvecCounter c;
  matvec(DenseMatrix(0, 3), Vector{1, 2, 3}, &c);
  EXPECT_EQ(c.value(), 0u);
}

TEST(SpectralNorm, Diagonal) { EXPECT_NEAR(spectral_norm(DenseMatrix::diagonal(Vector{3, 4})), 4.0, 4e-8); }

TEST(SpectralNorm, ZeroMatrix) { EXPECT_EQ(spectral_norm(DenseMatrix(2, 2)), 0.0); }

TEST(SpectralNorm, GoldenRatio) {
  // A'A = [[1,1],[1,2]]: largest root of t^2 - 3t + 1 is (3 + sqrt 5) / 2.
  const double expected = std::sqrt((3.0 + std::sqrt(5.0)) / 2.0);
  EXPECT_NEAR(expected, 1.6180339887, 1e-10);
  EXPECT_NEAR(spectral_norm(DenseMatrix(2, 2, {1, 1, 0, 1})), expected, 1e-8 * expected);
}

TEST(SpectralNorm, BoundsEveryUnitVectorImage) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix a = random_matrix(4 + t % 6, 3 + t % 5, rng);
    const double s = spectral_norm(a);
    for (int k = 0; k < 20; ++k) {
      Vector x(a.cols());
      for (auto& v : x) v = nd(rng);
      const double nx = norm2(x);
      for (auto& v : x) v /= nx;
      EXPECT_LE(norm2(matvec(a, x)), s * (1.0 + 1e-8));
    }
  }
}

TEST(SpectralNorm, SquareMatchesLargestEigenvalueOfGram) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 20; ++t) {
    const DenseMatrix a = random_matrix(5 + t % 4, 5 + t % 4, rng);
    const double s = spectral_norm(a);
    const DenseMatrix gram = add_scaled_gram(DenseMatrix(a.cols(), a.cols()), a, 1.0);
    EXPECT_NEAR(sym_eig_extremes(gram).lambda_max, s * s, 1e-6 * s * s);
  }
}

TEST(SymEigExtremes, Diagonal) {
  const auto e = sym_eig_extremes(DenseMatrix::diagonal(Vector{1, 5}));
  EXPECT_NEAR(e.lambda_min, 1.0, 1e-12);
  EXPECT_NEAR(e.lambda_max, 5.0, 1e-12);
}

TEST(SymEigExtremes, Identity) {
  const auto e = sym_eig_extremes(DenseMatrix::identity(3));
  EXPECT_NEAR(e.lambda_min, 1.0, 1e-12);
  EXPECT_NEAR(e.lambda_max, 1.0, 1e-12);
}

TEST(SymEigExtremes, TwoByTwoRoots) {
  // t^2 - 4t + 3 = 0.
  const double disc = std::sqrt(16.0 - 12.0);
  const auto e = sym_eig_extremes(DenseMatrix(2, 2, {2, 1, 1, 2}));
  EXPECT_NEAR(e.lambda_min, (4.0 - disc) / 2.0, 1e-12);
  EXPECT_NEAR(e.lambda_max, (4.0 + disc) / 2.0, 1e-12);
}

TEST(SymEigExtremes, ClampsNearZeroOnlyWhenPsd) {
  const DenseMatrix s = DenseMatrix::diagonal(Vector{1e-13, 2});
  EXPECT_EQ(sym_eig_extremes(s, true).lambda_min, 0.0);
  EXPECT_GT(sym_eig_extremes(s, false).lambda_min, 0.0);
}

TEST(SymEigExtremes, RejectsAsymmetric) {
  EXPECT_THROW(sym_eig_extremes(DenseMatrix(2, 2, {1, 2, 0, 1})), DimensionError);
}

TEST(SymEigExtremes, IllConditionedSmallestEigenvalue) {
  const auto e = sym_eig_extremes(DenseMatrix::diagonal(Vector{1e-9, 1, 1e3}));
  EXPECT_NEAR(e.lambda_min, 1e-9, 1e-17);
}

TEST(GlobalCounter, AcceptsConcurrentlySafeAdds) {
  const auto before = global_matvec_counter().value();
  global_matvec_counter().add(3);
  EXPECT_EQ(global_matvec_counter().value(), before + 3);
}

}  // namespace
}  // namespace dualqp
