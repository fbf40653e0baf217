#include "uos/bounds.hpp"

#include <algorithm>
#include <cmath>

namespace uos {

namespace {

double binomial_se(double p, std::size_t n) { return n == 0 ? 0.0 : std::sqrt(std::max(0.0, p * (1.0 - p)) / n); }

// Standard error of the mean of per-trial values.
double mean_se(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto idx = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size() - 1)));
  return v[std::min(idx, v.size() - 1)];
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

EventProbabilities tally_events(const std::vector<std::uint64_t>& hits, std::size_t num_events) {
  if (num_events > 64) throw Error(ErrorCode::DomainError, "at most 64 events per estimate");
  const auto k = static_cast<Eigen::Index>(num_events);
  Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic> counts =
      Eigen::Matrix<std::uint64_t, Eigen::Dynamic, Eigen::Dynamic>::Zero(k, k);
  for (const std::uint64_t mask : hits)
    for (Eigen::Index i = 0; i < k; ++i) {
      if (!(mask >> i & 1U)) continue;
      for (Eigen::Index j = 0; j < k; ++j)
        if (mask >> j & 1U) ++counts(i, j);
    }
  EventProbabilities out;
  out.trials = hits.size();
  const double n = hits.empty() ? 1.0 : static_cast<double>(hits.size());
  out.joints = counts.cast<double>() / n;
  out.marginals = out.joints.diagonal();
  out.standard_errors.resize(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) out.standard_errors(i, j) = binomial_se(out.joints(i, j), hits.size());
  return out;
}

bool EventDescriptor::holds(const TrialSample& s) const {
  const auto ii = static_cast<Eigen::Index>(i);
  const auto jj = static_cast<Eigen::Index>(j);
  if (ii >= s.statistics.size() || jj >= s.statistics.size())
    throw Error(ErrorCode::DimensionMismatch, "event refers to a missing subspace");
  if (kind == Kind::StatisticAbove) return s.statistics(ii) > threshold;
  // e_i / e_j > t without dividing; e_j = 0 < e_i counts as an infinite ratio
  return s.energies(ii) > threshold * s.energies(jj);
}

EventProbabilities event_probabilities(const std::vector<TrialSample>& samples,
                                       const std::vector<EventDescriptor>& events) {
  std::vector<std::uint64_t> hits(samples.size(), 0);
  for (std::size_t t = 0; t < samples.size(); ++t)
    for (std::size_t e = 0; e < events.size(); ++e)
      if (events[e].holds(samples[t])) hits[t] |= std::uint64_t{1} << e;
  return tally_events(hits, events.size());
}

EventProbabilities estimate_event_probs(const TrialRunner& runner, std::optional<std::size_t> cls,
                                        const std::vector<EventDescriptor>& events, std::size_t trials,
                                        std::uint64_t stream) {
  if (trials < 1000) throw Error(ErrorCode::TooFewTrials, "event estimation needs >= 1000 trials");
  const auto samples = simulate(runner, Hypothesis::Null, cls, stream, trials);
  return event_probabilities(samples, events);
}

double pfa_union_bound(const Vector& marginals) {
  if (marginals.size() == 0) return 0.0;
  return std::min(1.0, marginals.sum());
}

double pfa_union_bound_known(std::size_t num_subspaces, int subspace_dim, double gamma_bar) {
  if (gamma_bar <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(num_subspaces) * chi2_sf(subspace_dim, 2.0 * gamma_bar));
}

UnionBounds union_bounds(const EventProbabilities& events) {
  UnionBounds out;
  out.upper = pfa_union_bound(events.marginals);
  for (Eigen::Index i = 0; i < events.marginals.size(); ++i) {
    const double p = events.marginals(i);
    if (p == 0) continue;
    const double denom = events.joints.row(i).sum();
    if (denom <= 0) throw Error(ErrorCode::DegenerateJoint, "zero joint mass under a positive marginal");
    out.lower += p * p / denom;
  }
  out.lower = clamp01(std::min(out.lower, out.upper));
  return out;
}

UnionBounds pd_bounds(const std::vector<EventProbabilities>& per_class, const Vector& class_priors) {
  if (class_priors.size() != static_cast<Eigen::Index>(per_class.size()))
    throw Error(ErrorCode::DimensionMismatch, "one prior per class");
  UnionBounds out;
  for (std::size_t k = 0; k < per_class.size(); ++k) {
    const auto b = union_bounds(per_class[k]);
    out.upper += class_priors(static_cast<Eigen::Index>(k)) * b.upper;
    out.lower += class_priors(static_cast<Eigen::Index>(k)) * b.lower;
  }
  out.upper = clamp01(out.upper);
  out.lower = clamp01(out.lower);
  return out;
}

double pc_lower_frechet(double p_detect, const Vector& ratio_probs) {
  const double k_minus_1 = static_cast<double>(ratio_probs.size());
  return clamp01(p_detect + ratio_probs.sum() - k_minus_1);
}

double pc_lower_bessel(double p_detect, const Vector& lambdas, int n, double eta0) {
  if (!(eta0 > 0.0 && eta0 < 0.5)) throw Error(ErrorCode::DomainError, "eta0 must lie in (0, 1/2)");
  double penalty = 0;
  for (Eigen::Index j = 0; j < lambdas.size(); ++j) {
    const double lambda = lambdas(j);
    if (!(lambda >= 0)) throw Error(ErrorCode::DomainError, "lambda must be non-negative");
    penalty += gaussian_q(0.5 * (1.0 - 2.0 * eta0) * std::sqrt(lambda));
    penalty += lambda > 0 ? psi(n, eta0, lambda) : psi_at_zero(n);
  }
  return clamp01(p_detect - penalty);
}

double pc_lower_bessel(const PreparedUnionD& prep, std::size_t k, const Vector& whitened_signal, double sigma2,
                       double p_detect, double eta0) {
  if (k >= prep.size()) throw Error(ErrorCode::DimensionMismatch, "class index out of range");
  if (whitened_signal.size() != prep.ambient_dim)
    throw Error(ErrorCode::DimensionMismatch, "signal length != m");
  if (!(sigma2 > 0)) throw Error(ErrorCode::DomainError, "sigma2 must be positive");
  Vector lambdas(static_cast<Eigen::Index>(prep.size()) - 1);
  Eigen::Index out = 0;
  const double total = whitened_signal.squaredNorm();
  for (std::size_t j = 0; j < prep.size(); ++j) {
    if (j == k) continue;
    lambdas(out++) = std::max(0.0, total - whitened_signal.dot(prep.projectors[j] * whitened_signal)) / sigma2;
  }
  return pc_lower_bessel(p_detect, lambdas, static_cast<int>(prep.subspace_dim), eta0);
}

BoundReport bound_report(const Scenario& scenario, const std::vector<TrialSample>& null_samples,
                         const std::vector<TrialSample>& signal_samples, double gamma_bar, double eta0) {
  const std::size_t num = scenario.num_subspaces();
  const auto kk = static_cast<Eigen::Index>(num);
  const int n = static_cast<int>(scenario.union_model.subspace_dim());
  const Vector priors = scenario.class_priors();

  BoundReport r;
  r.regime = scenario.regime;
  r.gamma_bar = gamma_bar;

  std::vector<EventDescriptor> detection;
  for (std::size_t i = 0; i < num; ++i) detection.push_back(EventDescriptor::statistic_above(i, gamma_bar));

  if (scenario.regime == Regime::Known) {
    r.pfa_upper = pfa_union_bound_known(num, n, gamma_bar);
  } else {
    r.pfa_upper = pfa_union_bound(event_probabilities(null_samples, detection).marginals);
    std::vector<double> counts;
    for (const auto& s : null_samples) counts.push_back(static_cast<double>((s.statistics.array() > gamma_bar).count()));
    r.pfa_upper_se = r.pfa_upper < 1.0 ? mean_se(counts) : 0.0;
  }

  r.pc_lower_frechet = Vector::Zero(kk);
  r.pc_lower_bessel = Vector::Zero(kk);
  r.pc_lower_bessel_p05 = Vector::Zero(kk);
  r.pc_lower_bessel_p95 = Vector::Zero(kk);
  double pd_upper_var = 0, pd_lower_var = 0, frechet_var = 0;
  for (std::size_t k = 0; k < num; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    std::vector<TrialSample> cls;
    for (const auto& s : signal_samples)
      if (s.active_class && *s.active_class == k) cls.push_back(s);
    if (cls.empty()) continue;
    const double weight = priors(ki);

    const auto ev = event_probabilities(cls, detection);
    const auto ub = union_bounds(ev);
    r.pd_upper += weight * ub.upper;
    r.pd_lower += weight * ub.lower;
    std::vector<double> hit_counts, frechet_terms, bessel;
    const double p_detect = ev.marginals(ki);
    Vector ratio_probs = Vector::Zero(kk - 1);
    for (const auto& s : cls) {
      hit_counts.push_back(static_cast<double>((s.statistics.array() > gamma_bar).count()));
      double term = s.statistics(ki) > gamma_bar ? 1.0 : 0.0;
      Eigen::Index idx = 0;
      for (std::size_t j = 0; j < num; ++j) {
        if (j == k) continue;
        const bool wins = EventDescriptor::energy_ratio_above(k, j).holds(s);
        ratio_probs(idx++) += wins ? 1.0 : 0.0;
        term += wins ? 1.0 : 0.0;
      }
      frechet_terms.push_back(term);
    }
    ratio_probs /= static_cast<double>(cls.size());
    for (const auto& s : cls) {
      Vector others(kk - 1);
      Eigen::Index idx = 0;
      for (std::size_t j = 0; j < num; ++j)
        if (j != k) others(idx++) = s.lambdas(static_cast<Eigen::Index>(j));
      bessel.push_back(pc_lower_bessel(p_detect, others, n, eta0));
    }
    r.pc_lower_frechet(ki) = pc_lower_frechet(p_detect, ratio_probs);
    double mean = 0;
    for (double b : bessel) mean += b;
    r.pc_lower_bessel(ki) = mean / static_cast<double>(bessel.size());
    r.pc_lower_bessel_p05(ki) = percentile(bessel, 0.05);
    r.pc_lower_bessel_p95(ki) = percentile(bessel, 0.95);

    const double w2 = weight * weight;
    if (ub.upper < 1.0) pd_upper_var += w2 * std::pow(mean_se(hit_counts), 2);
    pd_lower_var += w2 * std::pow(binomial_se(ub.lower, cls.size()), 2);
    if (r.pc_lower_frechet(ki) > 0) frechet_var += w2 * std::pow(mean_se(frechet_terms), 2);
  }
  r.pc_lower_frechet_total = clamp01(priors.dot(r.pc_lower_frechet));
  r.pc_lower_bessel_total = clamp01(priors.dot(r.pc_lower_bessel));
  r.pd_upper = clamp01(r.pd_upper);
  r.pd_lower = clamp01(r.pd_lower);
  r.pd_upper_se = std::sqrt(pd_upper_var);
  r.pd_lower_se = std::sqrt(pd_lower_var);
  r.pc_lower_frechet_se = std::sqrt(frechet_var);
  return r;
}

}  // namespace uos
