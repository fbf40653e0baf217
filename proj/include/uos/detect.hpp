#pragma once

// GLRT detectors for signals drawn from a union of subspaces in colored
// Gaussian noise. One DetectionOutcome answers both questions: is a signal
// present (signal_detected) and which subspace is active (active_subspace).

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "uos/error.hpp"
#include "uos/geometry.hpp"
#include "uos/noise.hpp"

namespace uos {

// ---------------------------------------------------------------------------
// Quadratic-form ratios shared by all the test statistics.

/// z^T P z / z^T z.
template <typename Scalar>
Scalar stat_quad(const VectorX<Scalar>& z, const MatrixX<Scalar>& p) {
  const Scalar denom = z.squaredNorm();
  if (denom == 0) throw Error(ErrorCode::DivisionByZero, "z is the zero vector");
  return z.dot(p * z) / denom;
}

/// z^T P z / eta.
template <typename Scalar>
Scalar stat_quad_over_const(const VectorX<Scalar>& z, const MatrixX<Scalar>& p, Scalar eta) {
  if (!(eta > 0)) throw Error(ErrorCode::DomainError, "eta must be positive");
  return z.dot(p * z) / eta;
}

/// z^T P z / z^T Q z.
template <typename Scalar>
Scalar stat_ratio(const VectorX<Scalar>& z, const MatrixX<Scalar>& p, const MatrixX<Scalar>& q) {
  const Scalar denom = z.dot(q * z);
  if (denom == 0) throw Error(ErrorCode::DivisionByZero, "z^T Q z is zero");
  return z.dot(p * z) / denom;
}

/// z^T P z / (eta + z^T z).
template <typename Scalar>
Scalar stat_quad_over_const_plus_norm(const VectorX<Scalar>& z, const MatrixX<Scalar>& p, Scalar eta) {
  if (!(eta > 0)) throw Error(ErrorCode::DomainError, "eta must be positive");
  return z.dot(p * z) / (eta + z.squaredNorm());
}

// ---------------------------------------------------------------------------

/// Union whitened by R^{-1/2} (Known) or by the sample-covariance root
/// (UnknownCovariance / UnknownStatistics). Immutable.
template <typename Scalar>
struct PreparedUnion {
  std::vector<MatrixX<Scalar>> bases;           // H_k as supplied
  std::vector<MatrixX<Scalar>> whitened_bases;  // G_k = W H_k
  std::vector<MatrixX<Scalar>> projectors;      // G_k (G_k^T G_k)^{-1} G_k^T
  Whitener<Scalar> whitener;
  Regime regime = Regime::Known;
  Eigen::Index ambient_dim = 0;
  Eigen::Index subspace_dim = 0;
  Eigen::Index training_count = 0;  // N0; 0 in the Known regime
  Scalar sigma2 = 0;                // 0 in the UnknownStatistics regime

  std::size_t size() const noexcept { return projectors.size(); }
};

namespace detail {

template <typename Scalar>
MatrixX<Scalar> whitened_projector(const MatrixX<Scalar>& g) {
  Eigen::JacobiSVD<MatrixX<Scalar>> svd(g);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0) || sv(sv.size() - 1) <= Scalar(kRankTolerance) * sv(0))
    throw Error(ErrorCode::RankDeficient, "whitened basis lost rank");
  const MatrixX<Scalar> gram = g.transpose() * g;
  MatrixX<Scalar> p = g * gram.ldlt().solve(g.transpose());
  return (p + p.transpose()) / Scalar(2);
}

}  // namespace detail

/// Whitens each basis with the whitener implied by the noise regime and forms
/// the whitened projectors.
template <typename Scalar>
PreparedUnion<Scalar> prepare(const std::vector<MatrixX<Scalar>>& bases, const NoiseModel<Scalar>& noise) {
  if (bases.empty()) throw Error(ErrorCode::DimensionMismatch, "empty union");
  PreparedUnion<Scalar> out;
  out.ambient_dim = bases.front().rows();
  out.subspace_dim = bases.front().cols();
  if (noise.ambient_dim() != out.ambient_dim)
    throw Error(ErrorCode::DimensionMismatch, "noise model and subspaces disagree on m");
  out.whitener = inverse_sqrt(noise.whitening_source());
  out.regime = noise.regime();
  out.training_count = noise.training_count();
  out.sigma2 = noise.sigma2();
  out.bases = bases;
  for (const auto& h : bases) {
    if (h.rows() != out.ambient_dim || h.cols() != out.subspace_dim)
      throw Error(ErrorCode::DimensionMismatch, "subspaces must share ambient and subspace dim");
    MatrixX<Scalar> g = out.whitener.inv_sqrt * h;
    out.projectors.push_back(detail::whitened_projector(g));
    out.whitened_bases.push_back(std::move(g));
  }
  return out;
}

template <typename Scalar>
PreparedUnion<Scalar> prepare(const UnionModel<Scalar>& model, const NoiseModel<Scalar>& noise) {
  std::vector<MatrixX<Scalar>> bases;
  bases.reserve(model.size());
  for (const auto& s : model.subspaces()) bases.push_back(s.basis());
  return prepare(bases, noise);
}

/// Classical detector baseline: a single subspace spanned by all K bases.
/// Requires K n <= m.
template <typename Scalar>
PreparedUnion<Scalar> prepare_direct_sum(const UnionModel<Scalar>& model, const NoiseModel<Scalar>& noise) {
  const Eigen::Index total = static_cast<Eigen::Index>(model.size()) * model.subspace_dim();
  if (total > model.ambient_dim())
    throw Error(ErrorCode::InsufficientAmbientDim, "direct sum dimension K n exceeds m");
  MatrixX<Scalar> stacked(model.ambient_dim(), total);
  for (std::size_t k = 0; k < model.size(); ++k)
    stacked.middleCols(static_cast<Eigen::Index>(k) * model.subspace_dim(), model.subspace_dim()) =
        model[k].basis();
  return prepare(std::vector<MatrixX<Scalar>>{orthonormalize(stacked).basis()}, noise);
}

template <typename Scalar>
struct DetectionOutcome {
  VectorX<Scalar> energies;  // z^T P_k z in the whitened domain
  std::size_t khat = 0;      // argmax of energies, ties to the lowest index
  Scalar statistic = 0;
  Scalar threshold = 0;
  bool signal_detected = false;
  std::optional<std::size_t> active_subspace;
};

/// Whitened observation summary: per-subspace energies and ||z||^2.
template <typename Scalar>
struct WhitenedEnergies {
  VectorX<Scalar> energies;
  Scalar norm2 = 0;
};

template <typename Scalar>
WhitenedEnergies<Scalar> whitened_energies(const PreparedUnion<Scalar>& prep, const VectorX<Scalar>& y) {
  if (y.size() != prep.ambient_dim) throw Error(ErrorCode::DimensionMismatch, "observation length != m");
  const VectorX<Scalar> z = prep.whitener.inv_sqrt * y;
  WhitenedEnergies<Scalar> out;
  out.energies.resize(static_cast<Eigen::Index>(prep.size()));
  for (std::size_t k = 0; k < prep.size(); ++k)
    out.energies(static_cast<Eigen::Index>(k)) = z.dot(prep.projectors[k] * z);
  out.norm2 = z.squaredNorm();
  return out;
}

/// Index of the largest entry; the lowest index wins exact ties.
template <typename Scalar>
std::size_t argmax_lowest(const VectorX<Scalar>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<std::size_t>(best);
}

/// Regime-specific map from one subspace energy to the test statistic:
///   Known              e / (2 sigma^2)
///   UnknownCovariance  e / (N0 sigma^2 + ||z||^2)
///   UnknownStatistics  e / ||z||^2
template <typename Scalar>
Scalar statistic_from_energy(const PreparedUnion<Scalar>& prep, Scalar energy, Scalar norm2) {
  switch (prep.regime) {
    case Regime::Known:
      return energy / (Scalar(2) * prep.sigma2);
    case Regime::UnknownCovariance:
      return energy / (Scalar(prep.training_count) * prep.sigma2 + norm2);
    case Regime::UnknownStatistics:
      if (norm2 == 0) throw Error(ErrorCode::DivisionByZero, "zero observation has no direction");
      return energy / norm2;
  }
  return 0;
}

template <typename Scalar>
DetectionOutcome<Scalar> decide(const PreparedUnion<Scalar>& prep, const WhitenedEnergies<Scalar>& w,
                                Scalar gamma_bar) {
  DetectionOutcome<Scalar> out;
  out.energies = w.energies;
  out.khat = argmax_lowest(w.energies);
  out.statistic = statistic_from_energy(prep, w.energies(static_cast<Eigen::Index>(out.khat)), w.norm2);
  out.threshold = gamma_bar;
  out.signal_detected = out.statistic > gamma_bar;
  if (out.signal_detected) out.active_subspace = out.khat;
  return out;
}

namespace detail {

template <typename Scalar>
void require_regime(const PreparedUnion<Scalar>& prep, Regime want) {
  if (prep.regime != want)
    throw Error(ErrorCode::RegimeMismatch, std::string("detector expects the ") +
                                               std::string(to_string(want)) + " regime");
}

}  // namespace detail

/// Known sigma^2 and R: statistic z^T P_khat z / (2 sigma^2).
template <typename Scalar>
DetectionOutcome<Scalar> glrt_known(const PreparedUnion<Scalar>& prep, const VectorX<Scalar>& y,
                                    Scalar gamma_bar) {
  detail::require_regime(prep, Regime::Known);
  return decide(prep, whitened_energies(prep, y), gamma_bar);
}

/// Known sigma^2, R replaced by its sample estimate:
/// statistic z^T P_khat z / (N0 sigma^2 + z^T z) with z = Sigma^{-1/2} y.
template <typename Scalar>
DetectionOutcome<Scalar> glrt_unknown_cov(const PreparedUnion<Scalar>& prep, const VectorX<Scalar>& y,
                                          Scalar gamma_bar) {
  detail::require_regime(prep, Regime::UnknownCovariance);
  return decide(prep, whitened_energies(prep, y), gamma_bar);
}

/// Neither sigma^2 nor R known: statistic z^T P_khat z / z^T z, in [0, 1].
template <typename Scalar>
DetectionOutcome<Scalar> glrt_unknown_stats(const PreparedUnion<Scalar>& prep, const VectorX<Scalar>& y,
                                            Scalar gamma_bar) {
  detail::require_regime(prep, Regime::UnknownStatistics);
  return decide(prep, whitened_energies(prep, y), gamma_bar);
}

/// Dispatches on the prepared regime.
template <typename Scalar>
DetectionOutcome<Scalar> detect(const PreparedUnion<Scalar>& prep, const VectorX<Scalar>& y, Scalar gamma_bar) {
  return decide(prep, whitened_energies(prep, y), gamma_bar);
}

/// Direct-sum baseline: same statistic family over a single projector; it
/// never names an active subspace.
template <typename Scalar>
DetectionOutcome<Scalar> baseline_directsum(const PreparedUnion<Scalar>& direct_sum, const VectorX<Scalar>& y,
                                            Scalar gamma_bar) {
  if (direct_sum.size() != 1)
    throw Error(ErrorCode::DimensionMismatch, "baseline expects a single direct-sum projector");
  auto out = detect(direct_sum, y, gamma_bar);
  out.active_subspace.reset();
  return out;
}

/// ML coefficients (H^T R^{-1} H)^{-1} H^T R^{-1} y, computed in the whitened
/// domain as the least-squares solution of G theta = z. Uses whichever
/// whitener the union was prepared with.
template <typename Scalar>
VectorX<Scalar> ml_coefficients(const PreparedUnion<Scalar>& prep, const VectorX<Scalar>& y, std::size_t k) {
  if (k >= prep.size()) throw Error(ErrorCode::DimensionMismatch, "subspace index out of range");
  if (y.size() != prep.ambient_dim) throw Error(ErrorCode::DimensionMismatch, "observation length != m");
  const MatrixX<Scalar>& g = prep.whitened_bases[k];
  Eigen::ColPivHouseholderQR<MatrixX<Scalar>> qr(g);
  qr.setThreshold(Scalar(kRankTolerance));
  if (qr.rank() < g.cols()) throw Error(ErrorCode::RankDeficient, "whitened basis lost rank");
  return qr.solve(VectorX<Scalar>(prep.whitener.inv_sqrt * y));
}

using PreparedUnionD = PreparedUnion<double>;
using DetectionOutcomeD = DetectionOutcome<double>;

}  // namespace uos
