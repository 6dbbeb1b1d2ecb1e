#include "dualqp/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dualqp/error.hpp"

namespace dualqp {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), entries_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows * cols) {
    throw DimensionError("matrix entries: expected " +
                         std::to_string(rows * cols) + ", got " +
                         std::to_string(entries_.size()));
  }
  if (!all_finite(entries_)) {
    throw InfeasibleSpecError("matrix has non-finite entries");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double DenseMatrix::frobenius_norm() const { return norm2(entries_); }

MatvecCounter& global_matvec_counter() {
  static MatvecCounter counter;
  return counter;
}

void matvec_into(const DenseMatrix& a, std::span<const double> x,
                 std::span<double> out, MatvecCounter* counter) {
  if (x.size() != a.cols() || out.size() != a.rows()) {
    throw DimensionError("matvec: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " times vector of length " +
                         std::to_string(x.size()));
  }
  const std::size_t n = a.cols();
  const double* p = a.entries().data();
  for (std::size_t i = 0; i < a.rows(); ++i, p += n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += p[j] * x[j];
    out[i] = s;
  }
  if (counter != nullptr && !a.empty()) counter->add();
}

Vector matvec(const DenseMatrix& a, std::span<const double> x,
              MatvecCounter* counter) {
  Vector out(a.rows());
  matvec_into(a, x, out, counter);
  return out;
}

void matvec_transposed_into(const DenseMatrix& a, std::span<const double> y,
                            std::span<double> out, MatvecCounter* counter) {
  if (y.size() != a.rows() || out.size() != a.cols()) {
    throw DimensionError("transposed matvec: dimension mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n = a.cols();
  const double* p = a.entries().data();
  for (std::size_t i = 0; i < a.rows(); ++i, p += n) {
    const double yi = y[i];
    if (yi == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) out[j] += p[j] * yi;
  }
  if (counter != nullptr && !a.empty()) counter->add();
}

Vector matvec_transposed(const DenseMatrix& a, std::span<const double> y,
                         MatvecCounter* counter) {
  Vector out(a.cols());
  matvec_transposed_into(a, y, out, counter);
  return out;
}

DenseMatrix add_scaled_gram(const DenseMatrix& a, const DenseMatrix& b,
                            double scale) {
  if (a.rows() != a.cols() || b.cols() != a.cols()) {
    throw DimensionError("add_scaled_gram: dimension mismatch");
  }
  DenseMatrix out = a;
  const std::size_t n = a.cols();
  for (std::size_t r = 0; r < b.rows(); ++r) {
    auto row = b.row(r);
    for (std::size_t i = 0; i < n; ++i) {
      const double bi = scale * row[i];
      if (bi == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) += bi * row[j];
    }
  }
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

double spectral_norm(const DenseMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw DimensionError("spectral_norm of an empty matrix");
  }
  const std::size_t n = a.cols();
  // Fixed seed: the estimate must be reproducible run to run.
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  Vector v(n);
  for (auto& x : v) x = unif(rng);
  double nv = norm2(v);
  for (auto& x : v) x /= nv;

  Vector av(a.rows());
  Vector w(n);
  const auto cap = static_cast<std::int64_t>(
      std::ceil(10.0 * static_cast<double>(n) * std::log(1.0 / kEigTolerance)));
  double estimate = 0.0;  // estimate of ||A||^2
  for (std::int64_t it = 0; it < cap; ++it) {
    matvec_into(a, v, av);
    const double next = dot(av, av);
    if (next == 0.0 && it == 0) {
      // v may be orthogonal to the row space only for A = 0 with this start.
      if (a.frobenius_norm() == 0.0) return 0.0;
    }
    matvec_transposed_into(a, av, w);
    const double nw = norm2(w);
    if (nw == 0.0) return std::sqrt(next);
    for (std::size_t j = 0; j < n; ++j) v[j] = w[j] / nw;
    if (it > 0 && std::abs(next - estimate) <= kEigTolerance * 1e-1 * next) {
      return std::sqrt(next);
    }
    estimate = next;
  }
  throw ConvergenceError("spectral_norm: power iteration did not converge",
                         std::sqrt(estimate));
}

EigenExtremes sym_eig_extremes(const DenseMatrix& s, bool psd) {
  if (s.rows() != s.cols()) throw DimensionError("sym_eig_extremes: not square");
  const std::size_t n = s.rows();
  if (n == 0) throw DimensionError("sym_eig_extremes: empty matrix");
  Eigen::MatrixXd m(n, n);
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double d = s(i, j) - s(j, i);
      asym += d * d;
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          0.5 * (s(i, j) + s(j, i));
    }
  if (std::sqrt(asym) > 1e-12 * std::max(1.0, s.frobenius_norm())) {
    throw DimensionError("sym_eig_extremes: matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceError("sym_eig_extremes: eigensolver failed", 0.0);
  }
  const auto& ev = solver.eigenvalues();
  EigenExtremes out{ev(0), ev(static_cast<Eigen::Index>(n) - 1)};
  if (psd && std::abs(out.lambda_min) <=
                 kEigTolerance * std::max(1.0, std::abs(out.lambda_max))) {
    out.lambda_min = 0.0;
  }
  return out;
}

}  // namespace dualqp
