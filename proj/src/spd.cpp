#include "qsa/spd.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace qsa {

namespace {

using EMat = Eigen::MatrixXd;

EMat to_eigen(std::size_t d, std::span<const double> m) {
  EMat out(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) = m[i * d + j];
  return out;
}

void from_eigen(const EMat& m, std::span<double> out) {
  const auto d = static_cast<std::size_t>(m.rows());
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out[i * d + j] = m(i, j);
}

}  // namespace

SpdMatrix::SpdMatrix(std::size_t dim, std::vector<double> row_major)
    : dim_(dim), data_(std::move(row_major)) {
  if (dim_ < 1) throw std::invalid_argument("spd: dimension must be >= 1");
  if (data_.size() != dim_ * dim_) throw std::invalid_argument("spd: bad data size");
  double scale = 0.0;
  for (double v : data_) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i + 1; j < dim_; ++j)
      if (std::abs(data_[i * dim_ + j] - data_[j * dim_ + i]) >
          1e-12 * std::max(1.0, scale))
        throw std::invalid_argument("spd: matrix not symmetric");

  if (dim_ == 1) {
    min_eig_ = data_[0];
    if (!(min_eig_ > 0.0)) throw std::invalid_argument("spd: matrix not positive definite");
    sqrt_ = {std::sqrt(data_[0])};
    inv_sqrt_ = {1.0 / sqrt_[0]};
    return;
  }

  Eigen::SelfAdjointEigenSolver<EMat> es;
  if (dim_ <= 3)
    es.computeDirect(to_eigen(dim_, data_));
  else
    es.compute(to_eigen(dim_, data_));
  min_eig_ = es.eigenvalues().minCoeff();
  if (!(min_eig_ > 0.0)) throw std::invalid_argument("spd: matrix not positive definite");
  const EMat v = es.eigenvectors();
  const auto ev = es.eigenvalues();
  EMat s = v * ev.cwiseSqrt().asDiagonal() * v.transpose();
  EMat si = v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  sqrt_.assign(dim_ * dim_, 0.0);
  inv_sqrt_.assign(dim_ * dim_, 0.0);
  from_eigen(s, sqrt_);
  from_eigen(si, inv_sqrt_);
}

SpdMatrix SpdMatrix::identity(std::size_t dim) {
  std::vector<double> m(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m[i * dim + i] = 1.0;
  return SpdMatrix(dim, std::move(m));
}

SpdMatrix SpdMatrix::diagonal(std::span<const double> diag) {
  const std::size_t d = diag.size();
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = diag[i];
  return SpdMatrix(d, std::move(m));
}

void SpdMatrix::apply_sqrt(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += sqrt_[i * dim_ + j] * x[j];
    y[i] = s;
  }
}

void SpdMatrix::apply_inv_sqrt(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += inv_sqrt_[i * dim_ + j] * x[j];
    y[i] = s;
  }
}

bool SpdMatrix::same_values(const SpdMatrix& o, double tol) const {
  if (o.dim_ != dim_) return false;
  for (std::size_t v = 0; v < data_.size(); ++v)
    if (std::abs(data_[v] - o.data_[v]) > tol) return false;
  return true;
}

std::size_t symmetric_sqrt_floored(std::size_t dim, std::span<const double> m,
                                   double eig_floor, std::span<double> sqrt_out,
                                   std::span<double> inv_sqrt_out) {
  if (dim == 1) {
    const bool floored = m[0] < eig_floor;
    const double v = std::max(m[0], eig_floor);
    sqrt_out[0] = std::sqrt(v);
    inv_sqrt_out[0] = 1.0 / sqrt_out[0];
    return floored ? 1 : 0;
  }
  Eigen::SelfAdjointEigenSolver<EMat> es;
  if (dim <= 3)
    es.computeDirect(to_eigen(dim, m));
  else
    es.compute(to_eigen(dim, m));
  Eigen::VectorXd ev = es.eigenvalues();
  std::size_t floored = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < eig_floor) {
      ev[i] = eig_floor;
      ++floored;
    }
  }
  const EMat v = es.eigenvectors();
  from_eigen(v * ev.cwiseSqrt().asDiagonal() * v.transpose(), sqrt_out);
  from_eigen(v * ev.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose(),
             inv_sqrt_out);
  return floored;
}

}  // namespace qsa
