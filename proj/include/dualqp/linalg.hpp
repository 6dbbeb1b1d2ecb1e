#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dualqp {

using Vector = std::vector<double>;

/// Relative accuracy requested from the eigenvalue / norm estimators.
inline constexpr double kEigTolerance = 1e-8;
/// Inflation applied to every Lipschitz constant derived from an estimate.
inline constexpr double kSafetyInflation = 1e-6;

/// Dense row-major matrix. Entries are always finite.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t i, std::size_t j) const {
    return entries_[i * cols_ + j];
  }
  double& operator()(std::size_t i, std::size_t j) {
    return entries_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * cols_, cols_};
  }
  std::span<const double> entries() const { return entries_; }

  DenseMatrix transposed() const;
  double frobenius_norm() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

/// Counts matrix-vector products. Safe to share between threads.
class MatvecCounter {
 public:
  MatvecCounter() = default;
  MatvecCounter(const MatvecCounter&) = delete;
  MatvecCounter& operator=(const MatvecCounter&) = delete;

  void add(std::uint64_t n = 1) { count_.fetch_add(n, std::memory_order_relaxed); }
  std::uint64_t value() const { return count_.load(std::memory_order_relaxed); }

 private:
  std::atomic<std::uint64_t> count_{0};
};

/// Process-wide total. Solvers fold their per-instance counts into it when
/// they finish, so hot loops never touch a shared cache line.
MatvecCounter& global_matvec_counter();

// Products. Each call of dimension >= 1 bumps `counter` (if given) by one.
Vector matvec(const DenseMatrix& a, std::span<const double> x,
              MatvecCounter* counter = nullptr);
void matvec_into(const DenseMatrix& a, std::span<const double> x,
                 std::span<double> out, MatvecCounter* counter = nullptr);
Vector matvec_transposed(const DenseMatrix& a, std::span<const double> y,
                         MatvecCounter* counter = nullptr);
void matvec_transposed_into(const DenseMatrix& a, std::span<const double> y,
                            std::span<double> out,
                            MatvecCounter* counter = nullptr);

/// a + scale * b^T b. Used once per solve to form the penalized Hessian.
DenseMatrix add_scaled_gram(const DenseMatrix& a, const DenseMatrix& b,
                            double scale);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double distance(std::span<const double> a, std::span<const double> b);

/// Largest singular value by power iteration on A^T A. Throws
/// ConvergenceError (carrying the last estimate) when the cap is hit.
double spectral_norm(const DenseMatrix& a);

struct EigenExtremes {
  double lambda_min;
  double lambda_max;
};

/// Extreme eigenvalues of a symmetric matrix. With `psd` set, a lambda_min
/// within tolerance of zero is reported as exactly zero.
EigenExtremes sym_eig_extremes(const DenseMatrix& s, bool psd = false);

bool all_finite(std::span<const double> v);

}  // namespace dualqp
