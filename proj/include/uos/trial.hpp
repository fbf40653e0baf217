#pragma once

// One Monte-Carlo trial: draw (optionally) a signal, draw noise and, in the
// adaptive regimes, a fresh training set; evaluate every subspace statistic.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "uos/detect.hpp"
#include "uos/geometry.hpp"
#include "uos/noise.hpp"
#include "uos/rng.hpp"

namespace uos {

/// Experiment ground truth plus the detector's knowledge regime.
struct Scenario {
  explicit Scenario(UnionModelD model) : union_model(std::move(model)) {}

  UnionModelD union_model;
  double sigma2 = 1.0;
  Matrix covariance;  // R; noise is N(0, sigma2 R), training samples N(0, R)
  Regime regime = Regime::Known;
  std::size_t n0 = 0;  // training samples per trial (adaptive regimes)
  double snr_db = 10.0;
  Vector priors;  // empty means uniform
  std::size_t trials = 10000;
  std::size_t calibration_trials = 10000;
  std::uint64_t seed = 1;
  std::size_t workers = 1;

  std::size_t num_subspaces() const { return union_model.size(); }
  /// Priors with the empty-means-uniform default applied.
  Vector class_priors() const;
  double snr_linear() const;
};

/// Throws DomainError / DimensionMismatch / TooFewSamples on an inconsistent scenario.
void validate(const Scenario& scenario);

/// x = H_k theta with theta uniform on the sphere of radius sqrt(snr sigma2).
Vector sample_signal(const UnionModelD& model, std::size_t k, double snr_db, double sigma2, Rng& rng);

struct TrialSample {
  std::optional<std::size_t> active_class;  // none under H0
  Vector energies;    // z^T P_k z
  Vector statistics;  // regime statistic for every k
  double norm2 = 0;   // z^T z
  std::size_t khat = 0;
  /// x^T W^T P_j^perp W x / sigma^2 for every j, W the trial's whitener
  /// (empty under H0).
  Vector lambdas;
  double whitened_signal_energy = 0;  // ||R^{-1/2} x||^2 with the true R
  double direct_sum_statistic = 0;    // only when the runner tracks it

  double max_statistic() const { return statistics(static_cast<Eigen::Index>(khat)); }
  bool detected(double gamma_bar) const { return max_statistic() > gamma_bar; }
  bool correctly_classified(double gamma_bar) const {
    return detected(gamma_bar) && active_class && *active_class == khat;
  }
};

enum class Hypothesis { Null, SignalFromPriors };

class TrialRunner {
 public:
  explicit TrialRunner(Scenario scenario, bool track_direct_sum = false);

  /// One trial. `cls` forces the active class; otherwise `hypothesis` decides.
  TrialSample run(Hypothesis hypothesis, std::optional<std::size_t> cls, Rng& rng) const;

  const Scenario& scenario() const noexcept { return scenario_; }
  /// R^{-1/2} of the true covariance.
  const WhitenerD& true_whitener() const noexcept { return true_whitener_; }

 private:
  PreparedUnionD prepare_for_trial(Rng& rng, std::optional<PreparedUnionD>& direct_sum) const;

  Scenario scenario_;
  bool track_direct_sum_;
  NoiseSource<double> noise_;
  NoiseSource<double> training_;
  WhitenerD true_whitener_;
  std::optional<PreparedUnionD> known_prep_;
  std::optional<PreparedUnionD> known_direct_sum_;
  std::vector<Matrix> bases_;
  Vector cumulative_priors_;
};

/// Runs `count` trials of `stream` in parallel; trial i always uses the
/// generator child_seed(seed, stream, i) so the output is independent of the
/// worker count.
std::vector<TrialSample> simulate(const TrialRunner& runner, Hypothesis hypothesis,
                                  std::optional<std::size_t> cls, std::uint64_t stream, std::size_t count);

/// Calls fn(i) for i in [0, count) over `workers` threads.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn);

}  // namespace uos

#include "uos/detail/parallel.hpp"
