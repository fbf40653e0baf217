#pragma once

// Probability bounds on false alarm, detection and correct classification.
// The event probabilities they need have no closed form in general and are
// estimated by Monte Carlo from trial samples.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "uos/geometry.hpp"
#include "uos/noise.hpp"
#include "uos/special.hpp"
#include "uos/trial.hpp"

namespace uos {

struct EventProbabilities {
  Vector marginals;         // P(A_i)
  Matrix joints;            // P(A_i and A_j); diagonal equals marginals
  std::size_t trials = 0;
  Matrix standard_errors;   // sqrt(p (1 - p) / trials) for every joint entry

  std::size_t size() const noexcept { return static_cast<std::size_t>(marginals.size()); }
};

/// Builds the estimate from per-trial hit masks (bit i set when A_i occurred).
/// Counting is integer-valued, so the result does not depend on trial order.
EventProbabilities tally_events(const std::vector<std::uint64_t>& hits, std::size_t num_events);

/// {statistic_i > threshold} or {e_i / e_j > threshold}.
struct EventDescriptor {
  enum class Kind { StatisticAbove, EnergyRatioAbove };
  Kind kind = Kind::StatisticAbove;
  std::size_t i = 0;
  std::size_t j = 0;
  double threshold = 0;

  static EventDescriptor statistic_above(std::size_t i, double threshold) {
    return {Kind::StatisticAbove, i, 0, threshold};
  }
  static EventDescriptor energy_ratio_above(std::size_t i, std::size_t j, double threshold = 1.0) {
    return {Kind::EnergyRatioAbove, i, j, threshold};
  }
  bool holds(const TrialSample& s) const;
};

EventProbabilities event_probabilities(const std::vector<TrialSample>& samples,
                                       const std::vector<EventDescriptor>& events);

/// Monte-Carlo event probabilities under H0 (cls empty) or with class `cls`
/// active. Needs at least 1000 trials.
EventProbabilities estimate_event_probs(const TrialRunner& runner, std::optional<std::size_t> cls,
                                        const std::vector<EventDescriptor>& events, std::size_t trials,
                                        std::uint64_t stream);

/// min{1, sum_k P(T_k > gamma_bar)}.
double pfa_union_bound(const Vector& marginals);
/// Known-noise closed form: each whitened null energy over sigma^2 is chi^2_n.
double pfa_union_bound_known(std::size_t num_subspaces, int subspace_dim, double gamma_bar);

/// Union bound and de Caen bound on the union of the events.
struct UnionBounds {
  double upper = 0;
  double lower = 0;
};
UnionBounds union_bounds(const EventProbabilities& events);

/// Prior-weighted P_D bounds from per-class event estimates.
UnionBounds pd_bounds(const std::vector<EventProbabilities>& per_class, const Vector& class_priors);

/// max{0, P(T > gamma_bar) + sum_j P(e_k > e_j) - (K - 1)}; ratio_probs has
/// the K - 1 entries j != k.
double pc_lower_frechet(double p_detect, const Vector& ratio_probs);

/// max{0, P(T > gamma_bar) - sum_j [Q((1 - 2 eta0) sqrt(lambda_j) / 2) + Psi(n, eta0, lambda_j)]}
/// over the K - 1 competing subspaces.
double pc_lower_bessel(double p_detect, const Vector& lambdas, int n, double eta0);

/// Same bound with lambda_j = xbar^T P_j^perp xbar / sigma^2 read off a
/// prepared union for a whitened noiseless signal xbar from class k.
double pc_lower_bessel(const PreparedUnionD& prep, std::size_t k, const Vector& whitened_signal, double sigma2,
                       double p_detect, double eta0);

struct BoundReport {
  Regime regime = Regime::Known;
  double gamma_bar = 0;
  double pfa_upper = 0;
  double pd_upper = 0;
  double pd_lower = 0;
  Vector pc_lower_frechet;        // per class
  Vector pc_lower_bessel;         // per class, mean over that class's trials
  Vector pc_lower_bessel_p05;
  Vector pc_lower_bessel_p95;
  double pc_lower_frechet_total = 0;  // prior-weighted
  double pc_lower_bessel_total = 0;
  // Monte-Carlo standard errors of the estimated bounds
  double pfa_upper_se = 0;
  double pd_upper_se = 0;
  double pd_lower_se = 0;
  double pc_lower_frechet_se = 0;
};

/// All bounds at one threshold from a set of H0 trials and a set of signal
/// trials (classes drawn from the priors).
BoundReport bound_report(const Scenario& scenario, const std::vector<TrialSample>& null_samples,
                         const std::vector<TrialSample>& signal_samples, double gamma_bar, double eta0 = 0.25);

}  // namespace uos
