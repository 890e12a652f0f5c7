#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace qsa {

/// Exact ratio of integers, kept in lowest terms. Carried alongside doubles
/// by rational-grid piecewise-constant coefficients so concatenation can be
/// shown to stay inside the rational class.
struct Rational {
  long long num = 0;
  long long den = 1;

  Rational() = default;
  Rational(long long n, long long d) : num(n), den(d) {
    if (den == 0) throw std::invalid_argument("rational: zero denominator");
    if (den < 0) {
      num = -num;
      den = -den;
    }
    const long long g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational&) const = default;
  bool operator<(const Rational& o) const { return num * o.den < o.num * den; }
};

/// Symmetric positive definite d x d matrix with its principal square root
/// and inverse square root precomputed through a symmetric eigendecomposition.
class SpdMatrix {
 public:
  SpdMatrix(std::size_t dim, std::vector<double> row_major);

  static SpdMatrix identity(std::size_t dim);
  static SpdMatrix scalar(double a) { return SpdMatrix(1, {a}); }
  static SpdMatrix diagonal(std::span<const double> diag);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }
  const std::vector<double>& data() const { return data_; }
  const std::vector<double>& sqrt() const { return sqrt_; }
  const std::vector<double>& inv_sqrt() const { return inv_sqrt_; }
  double min_eigenvalue() const { return min_eig_; }

  /// y = M^(1/2) x
  void apply_sqrt(std::span<const double> x, std::span<double> y) const;
  /// y = M^(-1/2) x
  void apply_inv_sqrt(std::span<const double> x, std::span<double> y) const;

  bool same_values(const SpdMatrix& o, double tol = 0.0) const;

 private:
  std::size_t dim_;
  std::vector<double> data_;
  std::vector<double> sqrt_;
  std::vector<double> inv_sqrt_;
  double min_eig_ = 0.0;
};

/// Principal square root and inverse square root of a symmetric matrix given
/// row-major, with eigenvalues floored at `eig_floor`. Returns the number of
/// eigenvalues that had to be floored (0 for genuinely SPD input).
std::size_t symmetric_sqrt_floored(std::size_t dim, std::span<const double> m,
                                   double eig_floor, std::span<double> sqrt_out,
                                   std::span<double> inv_sqrt_out);

}  // namespace qsa
