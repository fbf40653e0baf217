#pragma once

// Colored Gaussian noise: symmetric eigendecomposition, SPD square roots,
// sample covariance from training samples, whitening and sampling.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <random>
#include <utility>

#include <Eigen/Dense>

#include "uos/error.hpp"
#include "uos/geometry.hpp"
#include "uos/rng.hpp"

namespace uos {

enum class Regime { Known, UnknownCovariance, UnknownStatistics };

constexpr std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Known: return "known";
    case Regime::UnknownCovariance: return "unknown-cov";
    case Regime::UnknownStatistics: return "unknown-stats";
  }
  return "?";
}

/// Minimum eigenvalue relative to the maximum below which a covariance is
/// treated as singular.
inline constexpr double kSpdTolerance = 1e-12;
inline constexpr double kSymmetryTolerance = 1e-8;

template <typename Scalar>
struct SymmetricEigen {
  VectorX<Scalar> eigenvalues;   // nonincreasing
  MatrixX<Scalar> eigenvectors;  // columns match eigenvalues
};

template <typename Scalar>
SymmetricEigen<Scalar> eig_sym(const MatrixX<Scalar>& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "matrix is not square");
  if (a.size() > 0 && (a - a.transpose()).cwiseAbs().maxCoeff() >= Scalar(kSymmetryTolerance))
    throw Error(ErrorCode::NotSymmetric, "matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> solver(a);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCode::ConvergenceError, "symmetric eigensolver failed");
  // Eigen returns ascending order
  SymmetricEigen<Scalar> out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

namespace detail {

template <typename Scalar>
void require_spd(const VectorX<Scalar>& eigenvalues) {
  const Scalar top = eigenvalues(0);
  const Scalar bottom = eigenvalues(eigenvalues.size() - 1);
  if (!(top > 0) || !(bottom > 0))
    throw Error(ErrorCode::NotPositiveDefinite, "matrix is not positive definite");
  if (bottom <= Scalar(kSpdTolerance) * top)
    throw Error(ErrorCode::NearSingular, "covariance is numerically singular");
}

template <typename Scalar>
MatrixX<Scalar> spectral_function(const SymmetricEigen<Scalar>& e, const VectorX<Scalar>& values) {
  MatrixX<Scalar> out = e.eigenvectors * values.asDiagonal() * e.eigenvectors.transpose();
  return (out + out.transpose()) / Scalar(2);
}

/// FNV-1a over the raw bytes of the matrix.
template <typename Scalar>
std::uint64_t fingerprint(const MatrixX<Scalar>& a) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* p, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::int64_t dims[2] = {a.rows(), a.cols()};
  mix(dims, sizeof(dims));
  mix(a.data(), sizeof(Scalar) * static_cast<std::size_t>(a.size()));
  return h;
}

}  // namespace detail

/// Symmetric inverse square root of an SPD matrix plus a fingerprint of the
/// matrix it was built from.
template <typename Scalar>
struct Whitener {
  MatrixX<Scalar> inv_sqrt;
  std::uint64_t source_hash = 0;

  Eigen::Index dim() const noexcept { return inv_sqrt.rows(); }
};

template <typename Scalar>
Whitener<Scalar> inverse_sqrt(const MatrixX<Scalar>& a) {
  const auto e = eig_sym(a);
  detail::require_spd(e.eigenvalues);
  const VectorX<Scalar> scale = e.eigenvalues.cwiseSqrt().cwiseInverse();
  return {detail::spectral_function(e, scale), detail::fingerprint(a)};
}

/// Symmetric square root Q diag(sqrt(lambda)) Q^T.
template <typename Scalar>
MatrixX<Scalar> sqrt_spd(const MatrixX<Scalar>& a) {
  const auto e = eig_sym(a);
  detail::require_spd(e.eigenvalues);
  return detail::spectral_function(e, VectorX<Scalar>(e.eigenvalues.cwiseSqrt()));
}

/// (1/N0) Xi Xi^T for an m x N0 matrix of training samples; requires N0 > m.
template <typename Scalar>
MatrixX<Scalar> sample_covariance(const MatrixX<Scalar>& training_samples) {
  const Eigen::Index m = training_samples.rows();
  const Eigen::Index n0 = training_samples.cols();
  if (n0 <= m) throw Error(ErrorCode::TooFewSamples, "need N0 > m training samples");
  MatrixX<Scalar> sigma(m, m);
  sigma.setZero();
  sigma.template selfadjointView<Eigen::Lower>().rankUpdate(training_samples, Scalar(1) / Scalar(n0));
  return sigma.template selfadjointView<Eigen::Lower>();
}

template <typename Scalar>
VectorX<Scalar> whiten(const Whitener<Scalar>& w, const VectorX<Scalar>& v) {
  if (v.size() != w.dim()) throw Error(ErrorCode::DimensionMismatch, "vector length != whitener dim");
  return w.inv_sqrt * v;
}

/// Noise-knowledge regime handed to the detectors.
template <typename Scalar>
class NoiseModel {
 public:
  static NoiseModel known(Scalar sigma2, MatrixX<Scalar> covariance) {
    if (!(sigma2 > 0)) throw Error(ErrorCode::DomainError, "sigma^2 must be positive");
    const auto e = eig_sym(covariance);  // symmetry check
    detail::require_spd(e.eigenvalues);
    NoiseModel out(Regime::Known, sigma2);
    out.covariance_ = std::move(covariance);
    return out;
  }

  static NoiseModel unknown_covariance(Scalar sigma2, MatrixX<Scalar> training_samples) {
    if (!(sigma2 > 0)) throw Error(ErrorCode::DomainError, "sigma^2 must be positive");
    return with_samples(Regime::UnknownCovariance, sigma2, std::move(training_samples));
  }

  static NoiseModel unknown_statistics(MatrixX<Scalar> training_samples) {
    return with_samples(Regime::UnknownStatistics, Scalar(0), std::move(training_samples));
  }

  Regime regime() const noexcept { return regime_; }
  /// Meaningful for Known and UnknownCovariance only.
  Scalar sigma2() const noexcept { return sigma2_; }
  const std::optional<MatrixX<Scalar>>& covariance() const noexcept { return covariance_; }
  const std::optional<MatrixX<Scalar>>& training_samples() const noexcept { return training_; }
  Eigen::Index training_count() const noexcept { return training_ ? training_->cols() : 0; }
  Eigen::Index ambient_dim() const noexcept {
    return covariance_ ? covariance_->rows() : training_->rows();
  }

  /// R for the Known regime, the sample covariance otherwise.
  MatrixX<Scalar> whitening_source() const {
    return covariance_ ? *covariance_ : sample_covariance(*training_);
  }

 private:
  NoiseModel(Regime regime, Scalar sigma2) : regime_(regime), sigma2_(sigma2) {}

  static NoiseModel with_samples(Regime regime, Scalar sigma2, MatrixX<Scalar> samples) {
    if (samples.cols() <= samples.rows())
      throw Error(ErrorCode::TooFewSamples, "need N0 > m training samples");
    NoiseModel out(regime, sigma2);
    out.training_ = std::move(samples);
    return out;
  }

  Regime regime_;
  Scalar sigma2_;
  std::optional<MatrixX<Scalar>> covariance_;
  std::optional<MatrixX<Scalar>> training_;
};

/// Precomputed sigma * R^{1/2} for repeated N(0, sigma^2 R) draws.
template <typename Scalar>
class NoiseSource {
 public:
  NoiseSource(Scalar sigma2, const MatrixX<Scalar>& covariance)
      : scale_(std::sqrt(sigma2) * sqrt_spd(covariance)) {
    if (sigma2 < 0) throw Error(ErrorCode::DomainError, "sigma^2 must be non-negative");
  }

  VectorX<Scalar> operator()(Rng& rng) const {
    return scale_ * standard_normal<Scalar>(scale_.rows(), 1, rng);
  }

  /// m x count matrix of independent draws.
  MatrixX<Scalar> draw(Eigen::Index count, Rng& rng) const {
    return scale_ * standard_normal<Scalar>(scale_.rows(), count, rng);
  }

  Eigen::Index dim() const noexcept { return scale_.rows(); }

 private:
  MatrixX<Scalar> scale_;
};

/// sigma R^{1/2} g with g ~ N(0, I).
template <typename Scalar>
VectorX<Scalar> sample_noise(Scalar sigma2, const MatrixX<Scalar>& covariance, Rng& rng) {
  return NoiseSource<Scalar>(sigma2, covariance)(rng);
}

/// Haar-random orthogonal matrix (QR of a Gaussian with the R-diagonal sign fix).
template <typename Scalar>
MatrixX<Scalar> random_orthogonal(Eigen::Index m, Rng& rng) {
  const MatrixX<Scalar> g = standard_normal<Scalar>(m, m, rng);
  Eigen::HouseholderQR<MatrixX<Scalar>> qr(g);
  MatrixX<Scalar> q = qr.householderQ();
  const MatrixX<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  return q;
}

/// Q diag(lambda) Q^T with Q Haar-random and lambda log-uniformly spaced on
/// [1, condition_target].
template <typename Scalar>
MatrixX<Scalar> random_spd_covariance(Eigen::Index m, Scalar condition_target, Rng& rng) {
  if (m < 1 || !(condition_target >= 1))
    throw Error(ErrorCode::DomainError, "need m >= 1 and condition_target >= 1");
  const MatrixX<Scalar> q = random_orthogonal<Scalar>(m, rng);
  VectorX<Scalar> lambda(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Scalar frac = m == 1 ? Scalar(0) : Scalar(i) / Scalar(m - 1);
    lambda(i) = std::pow(condition_target, frac);
  }
  MatrixX<Scalar> out = q * lambda.asDiagonal() * q.transpose();
  return (out + out.transpose()) / Scalar(2);
}

using WhitenerD = Whitener<double>;
using NoiseModelD = NoiseModel<double>;

}  // namespace uos
