#include "uos/trial.hpp"

#include <cmath>
#include <numeric>
#include <random>

namespace uos {

Vector Scenario::class_priors() const {
  const auto k = static_cast<Eigen::Index>(num_subspaces());
  if (priors.size() == 0) return Vector::Constant(k, 1.0 / static_cast<double>(k));
  return priors;
}

double Scenario::snr_linear() const { return std::pow(10.0, snr_db / 10.0); }

void validate(const Scenario& s) {
  const Eigen::Index m = s.union_model.ambient_dim();
  if (!(s.sigma2 > 0)) throw Error(ErrorCode::DomainError, "sigma2 must be positive");
  if (s.covariance.rows() != m || s.covariance.cols() != m)
    throw Error(ErrorCode::DimensionMismatch, "covariance must be m x m");
  if (s.trials < 1) throw Error(ErrorCode::DomainError, "trials must be >= 1");
  if (!std::isfinite(s.snr_db)) throw Error(ErrorCode::DomainError, "snr_db must be finite");
  if (s.priors.size() != 0) {
    if (s.priors.size() != static_cast<Eigen::Index>(s.num_subspaces()))
      throw Error(ErrorCode::DimensionMismatch, "one prior per subspace");
    if ((s.priors.array() < 0).any() || std::abs(s.priors.sum() - 1.0) > 1e-12)
      throw Error(ErrorCode::DomainError, "priors must lie on the simplex");
  }
  if (s.regime != Regime::Known && s.n0 <= static_cast<std::size_t>(m))
    throw Error(ErrorCode::TooFewSamples, "need N0 > m training samples");
}

Vector sample_signal(const UnionModelD& model, std::size_t k, double snr_db, double sigma2, Rng& rng) {
  if (k >= model.size()) throw Error(ErrorCode::DimensionMismatch, "class index out of range");
  const double radius = std::sqrt(std::pow(10.0, snr_db / 10.0) * sigma2);
  Vector theta = standard_normal<double>(model.subspace_dim(), 1, rng);
  double norm = theta.norm();
  while (norm == 0.0) {  // measure-zero, but keep the draw well defined
    theta = standard_normal<double>(model.subspace_dim(), 1, rng);
    norm = theta.norm();
  }
  return model[k].basis() * (theta * (radius / norm));
}

namespace {

std::vector<Matrix> bases_of(const UnionModelD& model) {
  std::vector<Matrix> out;
  for (const auto& s : model.subspaces()) out.push_back(s.basis());
  return out;
}

}  // namespace

TrialRunner::TrialRunner(Scenario scenario, bool track_direct_sum)
    : scenario_((validate(scenario), std::move(scenario))),
      track_direct_sum_(track_direct_sum),
      noise_(scenario_.sigma2, scenario_.covariance),
      training_(1.0, scenario_.covariance),
      true_whitener_(inverse_sqrt(scenario_.covariance)),
      bases_(bases_of(scenario_.union_model)) {
  if (scenario_.regime == Regime::Known) {
    const auto model = NoiseModelD::known(scenario_.sigma2, scenario_.covariance);
    known_prep_ = prepare(bases_, model);
    if (track_direct_sum_) known_direct_sum_ = prepare_direct_sum(scenario_.union_model, model);
  }
  const Vector p = scenario_.class_priors();
  cumulative_priors_.resize(p.size());
  std::partial_sum(p.data(), p.data() + p.size(), cumulative_priors_.data());
}

PreparedUnionD TrialRunner::prepare_for_trial(Rng& rng, std::optional<PreparedUnionD>& direct_sum) const {
  Matrix samples = training_.draw(static_cast<Eigen::Index>(scenario_.n0), rng);
  const auto model = scenario_.regime == Regime::UnknownCovariance
                         ? NoiseModelD::unknown_covariance(scenario_.sigma2, std::move(samples))
                         : NoiseModelD::unknown_statistics(std::move(samples));
  if (track_direct_sum_) direct_sum = prepare_direct_sum(scenario_.union_model, model);
  return prepare(bases_, model);
}

TrialSample TrialRunner::run(Hypothesis hypothesis, std::optional<std::size_t> cls, Rng& rng) const {
  TrialSample out;
  if (!cls && hypothesis == Hypothesis::SignalFromPriors) {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::size_t k = 0;
    while (k + 1 < static_cast<std::size_t>(cumulative_priors_.size()) &&
           u >= cumulative_priors_(static_cast<Eigen::Index>(k)))
      ++k;
    cls = k;
  }
  out.active_class = cls;
  Vector x = Vector::Zero(scenario_.union_model.ambient_dim());
  if (cls) x = sample_signal(scenario_.union_model, *cls, scenario_.snr_db, scenario_.sigma2, rng);

  std::optional<PreparedUnionD> fresh, fresh_direct;
  if (!known_prep_) fresh = prepare_for_trial(rng, fresh_direct);
  const PreparedUnionD& prep = known_prep_ ? *known_prep_ : *fresh;

  const Vector y = x + noise_(rng);
  const auto w = whitened_energies(prep, y);
  out.energies = w.energies;
  out.norm2 = w.norm2;
  out.khat = argmax_lowest(w.energies);
  out.statistics.resize(w.energies.size());
  for (Eigen::Index k = 0; k < w.energies.size(); ++k)
    out.statistics(k) = statistic_from_energy(prep, w.energies(k), w.norm2);

  if (cls) {
    const Vector xbar = prep.whitener.inv_sqrt * x;
    const double total = xbar.squaredNorm();
    out.lambdas.resize(static_cast<Eigen::Index>(prep.size()));
    for (std::size_t j = 0; j < prep.size(); ++j)
      out.lambdas(static_cast<Eigen::Index>(j)) =
          std::max(0.0, total - xbar.dot(prep.projectors[j] * xbar)) / scenario_.sigma2;
    out.whitened_signal_energy = (true_whitener_.inv_sqrt * x).squaredNorm();
  }
  if (track_direct_sum_) {
    const PreparedUnionD& ds = known_direct_sum_ ? *known_direct_sum_ : *fresh_direct;
    const auto wd = whitened_energies(ds, y);
    out.direct_sum_statistic = statistic_from_energy(ds, wd.energies(0), wd.norm2);
  }
  return out;
}

std::vector<TrialSample> simulate(const TrialRunner& runner, Hypothesis hypothesis,
                                  std::optional<std::size_t> cls, std::uint64_t stream, std::size_t count) {
  std::vector<TrialSample> out(count);
  const auto seed = runner.scenario().seed;
  parallel_for(count, runner.scenario().workers, [&](std::size_t i) {
    Rng rng = make_rng(seed, stream, i);
    out[i] = runner.run(hypothesis, cls, rng);
  });
  return out;
}

}  // namespace uos
