#pragma once

// Subspaces of R^m held as orthonormal bases, their projectors, principal
// angles, and the controlled-geometry / SVD-learned constructions used by the
// experiments. Everything is templated on the scalar type; `double` aliases
// are provided at the bottom.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "uos/error.hpp"

namespace uos {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Relative singular-value cutoff used for every rank decision.
inline constexpr double kRankTolerance = 1e-10;
/// Absolute tolerance on basis^T basis = I when accepting a caller basis.
inline constexpr double kOrthonormalTolerance = 1e-10;

/// kOrthonormalTolerance, widened for scalars with less precision than double.
template <typename Scalar>
constexpr Scalar orthonormal_tolerance() {
  return std::max(Scalar(kOrthonormalTolerance), Scalar(1000) * std::numeric_limits<Scalar>::epsilon());
}

namespace detail {

/// Flip column signs so the largest-magnitude entry of each column is positive.
template <typename Derived>
void canonicalize_signs(Eigen::MatrixBase<Derived>& basis) {
  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    Eigen::Index arg = 0;
    basis.col(j).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, j) < 0) basis.col(j) = -basis.col(j);
  }
}

template <typename Scalar>
Scalar max_abs(const MatrixX<Scalar>& a) {
  return a.size() == 0 ? Scalar(0) : a.cwiseAbs().maxCoeff();
}

}  // namespace detail

/// An n-dimensional subspace of R^m stored as an m x n orthonormal basis.
/// Immutable once constructed.
template <typename Scalar>
class Subspace {
 public:
  using Matrix = MatrixX<Scalar>;

  /// Accepts `basis` as-is after checking orthonormality; use
  /// `orthonormalize` for arbitrary spanning sets.
  static Subspace from_orthonormal(Matrix basis, Scalar tol = orthonormal_tolerance<Scalar>()) {
    if (basis.cols() < 1 || basis.rows() < basis.cols())
      throw Error(ErrorCode::DimensionMismatch, "basis must be m x n with 1 <= n <= m");
    const Matrix gram = basis.transpose() * basis;
    const Matrix eye = Matrix::Identity(basis.cols(), basis.cols());
    if (detail::max_abs<Scalar>(gram - eye) > tol)
      throw Error(ErrorCode::NotOrthogonal, "basis columns are not orthonormal");
    return Subspace(std::move(basis));
  }

  const Matrix& basis() const noexcept { return basis_; }
  Eigen::Index ambient_dim() const noexcept { return basis_.rows(); }
  Eigen::Index dim() const noexcept { return basis_.cols(); }

 private:
  explicit Subspace(Matrix basis) : basis_(std::move(basis)) {}
  Matrix basis_;
};

/// Canonical orthonormal basis for the column space of `raw_basis` (thin SVD,
/// sign-fixed). Throws RankDeficient when the columns are dependent.
template <typename Derived>
Subspace<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& raw_basis) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = raw_basis.cols();
  if (n < 1 || raw_basis.rows() < n)
    throw Error(ErrorCode::RankDeficient, "need at least as many rows as columns");
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(raw_basis.eval(), Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(n - 1) <= Scalar(kRankTolerance) * sv(0))
    throw Error(ErrorCode::RankDeficient, "columns are linearly dependent");
  MatrixX<Scalar> basis = svd.matrixU().leftCols(n);
  detail::canonicalize_signs(basis);
  return Subspace<Scalar>::from_orthonormal(std::move(basis));
}

/// Orthogonal projector B B^T onto the subspace.
template <typename Scalar>
MatrixX<Scalar> projector(const Subspace<Scalar>& s) {
  const auto& b = s.basis();
  return b * b.transpose();
}

/// I - B B^T.
template <typename Scalar>
MatrixX<Scalar> complement_projector(const Subspace<Scalar>& s) {
  return MatrixX<Scalar>::Identity(s.ambient_dim(), s.ambient_dim()) - projector(s);
}

template <typename Scalar>
struct PrincipalAngleSet {
  VectorX<Scalar> angles;         // nondecreasing, radians in [0, pi/2]
  MatrixX<Scalar> left_vectors;   // u_l, in the first subspace
  MatrixX<Scalar> right_vectors;  // v_l, in the second subspace
};

/// Principal angles from the SVD of A^T B. Cosines are clamped to [0, 1];
/// angles below pi/4 are taken from the sines of (I - AA^T)B instead, which
/// keeps small angles accurate to machine precision.
template <typename Scalar>
PrincipalAngleSet<Scalar> principal_angles(const Subspace<Scalar>& a, const Subspace<Scalar>& b) {
  if (a.ambient_dim() != b.ambient_dim())
    throw Error(ErrorCode::DimensionMismatch, "subspaces live in different ambient spaces");
  const MatrixX<Scalar>& A = a.basis();
  const MatrixX<Scalar>& B = b.basis();
  const MatrixX<Scalar> cross = A.transpose() * B;
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Index count = std::min(a.dim(), b.dim());

  const MatrixX<Scalar> residual = B - A * cross;
  Eigen::JacobiSVD<MatrixX<Scalar>> sine_svd(residual);
  VectorX<Scalar> sines = sine_svd.singularValues();  // descending
  // The smallest `count` sines pair with the largest `count` cosines.
  std::sort(sines.data(), sines.data() + sines.size());

  PrincipalAngleSet<Scalar> out;
  out.angles.resize(count);
  const Scalar quarter_pi = std::numbers::pi_v<Scalar> / 4;
  for (Eigen::Index i = 0; i < count; ++i) {
    const Scalar c = std::clamp(svd.singularValues()(i), Scalar(0), Scalar(1));
    Scalar angle = std::acos(c);
    if (angle < quarter_pi && i < sines.size()) angle = std::asin(std::min(sines(i), Scalar(1)));
    out.angles(i) = angle;
  }
  // enforce monotonicity against rounding at the acos/asin switch
  for (Eigen::Index i = 1; i < count; ++i) out.angles(i) = std::max(out.angles(i), out.angles(i - 1));
  out.left_vectors = A * svd.matrixU().leftCols(count);
  out.right_vectors = B * svd.matrixV().leftCols(count);
  return out;
}

/// Builds the subspace whose i-th basis vector is
/// cos(phi_i) base_i + sin(phi_i) complement_i.
template <typename Scalar>
Subspace<Scalar> rotated_subspace(const Subspace<Scalar>& base, const VectorX<Scalar>& target_angles,
                                  const MatrixX<Scalar>& complement_directions) {
  const Eigen::Index m = base.ambient_dim();
  const Eigen::Index n = base.dim();
  if (m < 2 * n) throw Error(ErrorCode::InsufficientAmbientDim, "rotation needs m >= 2n");
  if (target_angles.size() != n || complement_directions.rows() != m ||
      complement_directions.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "angles / complement directions do not match base");
  const Scalar tol = orthonormal_tolerance<Scalar>();
  const MatrixX<Scalar> gram = complement_directions.transpose() * complement_directions;
  if (detail::max_abs<Scalar>(gram - MatrixX<Scalar>::Identity(n, n)) > tol)
    throw Error(ErrorCode::NotOrthogonal, "complement directions are not orthonormal");
  if (detail::max_abs<Scalar>(base.basis().transpose() * complement_directions) > tol)
    throw Error(ErrorCode::NotOrthogonal, "complement directions are not orthogonal to base");
  const Scalar half_pi = std::numbers::pi_v<Scalar> / 2;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(target_angles(i) >= 0 && target_angles(i) <= half_pi))
      throw Error(ErrorCode::NotOrthogonal, "target angles must lie in [0, pi/2]");

  MatrixX<Scalar> basis(m, n);
  for (Eigen::Index i = 0; i < n; ++i)
    basis.col(i) = std::cos(target_angles(i)) * base.basis().col(i) +
                   std::sin(target_angles(i)) * complement_directions.col(i);
  return Subspace<Scalar>::from_orthonormal(std::move(basis));
}

/// Span of the top-`dim` left singular vectors of the m x p sample matrix.
template <typename Derived>
Subspace<typename Derived::Scalar> learn_basis_svd(const Eigen::MatrixBase<Derived>& samples,
                                                   Eigen::Index dim) {
  using Scalar = typename Derived::Scalar;
  if (dim < 1 || samples.cols() < dim || samples.rows() < dim)
    throw Error(ErrorCode::RankDeficient, "fewer samples than the requested dimension");
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(samples.eval(), Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > Scalar(0)) || sv(dim - 1) <= Scalar(kRankTolerance) * sv(0))
    throw Error(ErrorCode::RankDeficient, "samples do not span the requested dimension");
  MatrixX<Scalar> basis = svd.matrixU().leftCols(dim);
  detail::canonicalize_signs(basis);
  return Subspace<Scalar>::from_orthonormal(std::move(basis));
}

/// K subspaces sharing ambient and subspace dimension.
template <typename Scalar>
class UnionModel {
 public:
  explicit UnionModel(std::vector<Subspace<Scalar>> subspaces) : subspaces_(std::move(subspaces)) {
    if (subspaces_.empty()) throw Error(ErrorCode::DimensionMismatch, "union needs K >= 1 subspaces");
    for (const auto& s : subspaces_)
      if (s.ambient_dim() != ambient_dim() || s.dim() != subspace_dim())
        throw Error(ErrorCode::DimensionMismatch, "subspaces must share ambient and subspace dim");
  }

  const std::vector<Subspace<Scalar>>& subspaces() const noexcept { return subspaces_; }
  const Subspace<Scalar>& operator[](std::size_t k) const { return subspaces_.at(k); }
  std::size_t size() const noexcept { return subspaces_.size(); }
  Eigen::Index ambient_dim() const noexcept { return subspaces_.front().ambient_dim(); }
  Eigen::Index subspace_dim() const noexcept { return subspaces_.front().dim(); }

  /// Pairs (i < j) whose principal angles are all below `tol`. The model does
  /// not reject these; they are reported so experiments can flag them.
  std::vector<std::pair<std::size_t, std::size_t>> near_duplicate_pairs(Scalar tol = Scalar(1e-8)) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j)
        if (principal_angles(subspaces_[i], subspaces_[j]).angles.maxCoeff() < tol)
          out.emplace_back(i, j);
    return out;
  }

 private:
  std::vector<Subspace<Scalar>> subspaces_;
};

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using SubspaceD = Subspace<double>;
using UnionModelD = UnionModel<double>;

}  // namespace uos
