#pragma once

// Monte-Carlo experiment harness: threshold calibration, trial execution,
// ROC / angle / noise-geometry / SNR-gap / N0 sweeps and the direct-sum
// comparison. Every experiment is reproducible from Scenario::seed and gives
// identical results for any worker count.

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "uos/bounds.hpp"
#include "uos/detect.hpp"
#include "uos/trial.hpp"

namespace uos {

// RNG streams. Grid points of a sweep reuse the same streams, so they share
// noise realizations (common random numbers).
inline constexpr std::uint64_t kCalibrationStream = 1;
inline constexpr std::uint64_t kNullStream = 2;
inline constexpr std::uint64_t kSignalStream = 3;
inline constexpr std::uint64_t kEventStream = 4;
inline constexpr std::uint64_t kGeometryStream = 5;

struct Estimate {
  double value = 0;
  double se = 0;
};

/// hits / total with SE sqrt(p (1 - p) / total).
Estimate proportion(std::size_t hits, std::size_t total);

struct TrialRecord {
  std::size_t trial_id = 0;
  std::size_t hypothesis = 0;  // 0 for H0, k + 1 when subspace k is active
  DetectionOutcomeD outcome;
  double whitened_signal_energy = 0;
};

struct TrialSummary {
  Estimate pfa, pd, pc;
  Estimate gap;  // P_D - P_C, i.e. detected with the wrong index
  std::vector<Estimate> class_pd;  // P_{H_k}(detect)
  std::vector<Estimate> class_pc;  // P_{H_k}(H_k decided)
  std::vector<std::size_t> class_counts;
};

TrialSummary summarize(const Scenario& scenario, const std::vector<TrialSample>& null_samples,
                       const std::vector<TrialSample>& signal_samples, double gamma_bar);

/// Upper-order empirical quantile: sorted[ceil((1 - target_pfa) (N - 1))].
double threshold_from_null(std::vector<double> max_statistics, double target_pfa);

/// gamma_bar whose empirical false-alarm rate on H0 calibration trials does
/// not exceed target_pfa. Needs calibration_trials >= 10 / target_pfa.
double calibrate_threshold(const Scenario& scenario, double target_pfa, std::size_t calibration_trials);

struct RunResult {
  std::vector<TrialRecord> records;  // H0 trials first, then signal trials
  TrialSummary summary;
};

/// scenario.trials H0 trials and scenario.trials signal trials at gamma_bar.
RunResult run_trials(const Scenario& scenario, double gamma_bar);

struct CurvePoint {
  double gamma_bar = 0;
  double target_pfa = 0;  // NaN when the point was requested by threshold
  Estimate pfa, pd, pc, gap;
  std::vector<Estimate> class_pd, class_pc;
  BoundReport bounds;
};

/// Calibration maxima plus evaluation trials; everything a sweep needs.
struct SweepData {
  std::vector<double> calibration_max;
  std::vector<TrialSample> null_samples;
  std::vector<TrialSample> signal_samples;
};

SweepData collect_sweep_data(const Scenario& scenario, bool with_calibration = true, bool track_direct_sum = false);
CurvePoint evaluate_point(const Scenario& scenario, const SweepData& data, double gamma_bar, double target_pfa,
                          double eta0 = 0.25);

/// One calibrated point per target false-alarm rate.
std::vector<CurvePoint> roc_sweep(const Scenario& scenario, const std::vector<double>& target_pfas,
                                  double eta0 = 0.25);
/// One point per explicit threshold.
std::vector<CurvePoint> roc_at_thresholds(const Scenario& scenario, const std::vector<double>& gamma_bars,
                                          double eta0 = 0.25);

/// Mean over the grid of (P_D - P_C), with the SE of that mean taken over
/// trials (grid points share trials).
Estimate mean_gap(const Scenario& scenario, const SweepData& data, const std::vector<double>& gamma_bars);

// ---------------------------------------------------------------------------

struct AngleSweepConfig {
  explicit AngleSweepConfig(Scenario s) : base(std::move(s)) {}

  Scenario base;           // subspace `swept` is replaced at every grid point
  std::size_t swept = 1;
  std::size_t anchor = 0;  // rotated away from this subspace
  Matrix complement;       // m x n directions orthogonal to the anchor
  std::vector<Vector> angles;
  double target_pfa = 0.1;
  double eta0 = 0.25;
};

struct AnglePoint {
  Vector requested;
  double whitened_angle_min = 0;  // smallest principal angle, swept vs anchor, after whitening by R
  double whitened_angle_sum = 0;  // sum over the other subspaces of that smallest angle
  bool near_duplicate = false;
  CurvePoint point;
};

/// Whitens both bases by the true R and returns their principal angles.
Vector whitened_principal_angles(const SubspaceD& a, const SubspaceD& b, const Matrix& covariance);

std::vector<AnglePoint> angle_sweep(const AngleSweepConfig& config);

// ---------------------------------------------------------------------------

struct NoiseGeometryConfig {
  Eigen::Index m = 4;
  Eigen::Index n = 2;
  double sigma2 = 1.0;
  double condition = 20.0;
  bool identity_covariance = false;
  double perturbation = 0.05;
  Regime regime = Regime::Known;
  std::size_t n0 = 200;
  double snr_db = 10.0;
  std::size_t trials = 10000;
  std::size_t calibration_trials = 10000;
  double target_pfa = 0.1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct NoiseGeometryRow {
  std::string label;  // trailing-eig, leading-eig, random
  double mean_xbar_norm = 0;
  Estimate pd, pc;
};

struct NoiseGeometryResult {
  Matrix covariance;
  double gamma_bar = 0;
  std::vector<NoiseGeometryRow> rows;
};

/// S1 from the eigenvectors of the n smallest eigenvalues, S2 from the n
/// largest (both perturbed and re-orthonormalized), S3 a random subspace.
UnionModelD eigen_aligned_union(const Matrix& covariance, Eigen::Index n, double perturbation, Rng& rng);

NoiseGeometryResult noise_geometry_experiment(const NoiseGeometryConfig& config);

// ---------------------------------------------------------------------------

struct GapCurve {
  double snr_db = 0;
  std::vector<CurvePoint> points;
  Estimate mean_gap;
};

std::vector<GapCurve> gap_experiment(const Scenario& scenario, const std::vector<double>& snr_dbs,
                                     const std::vector<double>& target_pfas);

struct N0SweepRow {
  std::size_t n0 = 0;
  std::vector<CurvePoint> unknown_cov;
  double mean_abs_gap = 0;  // mean over the grid of |P_D known - P_D unknown-cov|
};

struct N0SweepResult {
  std::vector<CurvePoint> known;
  std::vector<N0SweepRow> rows;
};

N0SweepResult n0_sweep(const Scenario& scenario, const std::vector<std::size_t>& n0s,
                       const std::vector<double>& target_pfas);

struct BaselineRow {
  double gamma_bar = 0;
  Estimate pfa_uos, pfa_direct_sum, pd_uos, pd_direct_sum;
};

/// UoS and direct-sum detectors evaluated on the same trials at shared thresholds.
std::vector<BaselineRow> baseline_comparison(const Scenario& scenario, const std::vector<double>& gamma_bars);

}  // namespace uos

namespace uos {

/// The three-subspace geometry in R^4 shipped with the reference configs.
/// S1 = span{e1, e2}; S3 is S1 rotated by (s3_angles) toward [e3 e4] twisted
/// by s3_twist radians; S2 is S1 rotated by (phi, min(s2_ratio phi, pi/2))
/// toward [e3 e4].
struct ReferenceGeometry {
  double s2_angle = 0.6;
  double s2_ratio = 1.15;
  double s3_angle_1 = 0.95;
  double s3_angle_2 = 1.0;
  double s3_twist = 2.9;
};

/// [e3 e4] in R^4.
Matrix reference_complement();
Vector reference_s2_angles(double phi, double ratio);
UnionModelD reference_union(const ReferenceGeometry& g = {});

}  // namespace uos
