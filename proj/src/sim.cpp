#include "uos/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace uos {

namespace {

std::vector<double> max_statistics(const std::vector<TrialSample>& samples) {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.max_statistic());
  return out;
}

void check_target(double target_pfa) {
  if (!(target_pfa > 0.0 && target_pfa <= 1.0))
    throw Error(ErrorCode::DomainError, "target P_FA must lie in (0, 1]");
}

void check_calibration_size(double target_pfa, std::size_t calibration_trials) {
  check_target(target_pfa);
  if (static_cast<double>(calibration_trials) * target_pfa < 10.0 - 1e-9)
    throw Error(ErrorCode::TooFewTrials, "calibration needs at least 10 / target_pfa trials");
}

Estimate mean_with_se(const std::vector<double>& v) {
  Estimate out;
  if (v.empty()) return out;
  for (double x : v) out.value += x;
  out.value /= static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0;
  for (double x : v) ss += (x - out.value) * (x - out.value);
  out.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return out;
}

}  // namespace

Estimate proportion(std::size_t hits, std::size_t total) {
  if (total == 0) return {};
  const double p = static_cast<double>(hits) / static_cast<double>(total);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(total))};
}

TrialSummary summarize(const Scenario& scenario, const std::vector<TrialSample>& null_samples,
                       const std::vector<TrialSample>& signal_samples, double gamma_bar) {
  const std::size_t num = scenario.num_subspaces();
  TrialSummary out;
  std::size_t fa = 0;
  for (const auto& s : null_samples) fa += s.detected(gamma_bar);
  out.pfa = proportion(fa, null_samples.size());

  std::size_t det = 0, correct = 0;
  std::vector<std::size_t> cls_det(num, 0), cls_correct(num, 0);
  out.class_counts.assign(num, 0);
  for (const auto& s : signal_samples) {
    const std::size_t k = *s.active_class;
    ++out.class_counts[k];
    if (s.detected(gamma_bar)) {
      ++det;
      ++cls_det[k];
    }
    if (s.correctly_classified(gamma_bar)) {
      ++correct;
      ++cls_correct[k];
    }
  }
  out.pd = proportion(det, signal_samples.size());
  out.pc = proportion(correct, signal_samples.size());
  out.gap = proportion(det - correct, signal_samples.size());
  for (std::size_t k = 0; k < num; ++k) {
    out.class_pd.push_back(proportion(cls_det[k], out.class_counts[k]));
    out.class_pc.push_back(proportion(cls_correct[k], out.class_counts[k]));
  }
  return out;
}

double threshold_from_null(std::vector<double> max_statistics, double target_pfa) {
  check_target(target_pfa);
  if (max_statistics.empty()) throw Error(ErrorCode::TooFewTrials, "no calibration trials");
  std::sort(max_statistics.begin(), max_statistics.end());
  const double pos = (1.0 - target_pfa) * static_cast<double>(max_statistics.size() - 1);
  const auto idx = static_cast<std::size_t>(std::max(0.0, std::ceil(pos - 1e-9)));
  return max_statistics[std::min(idx, max_statistics.size() - 1)];
}

double calibrate_threshold(const Scenario& scenario, double target_pfa, std::size_t calibration_trials) {
  check_calibration_size(target_pfa, calibration_trials);
  const TrialRunner runner(scenario);
  const auto samples = simulate(runner, Hypothesis::Null, std::nullopt, kCalibrationStream, calibration_trials);
  return threshold_from_null(max_statistics(samples), target_pfa);
}

RunResult run_trials(const Scenario& scenario, double gamma_bar) {
  const TrialRunner runner(scenario);
  const auto null_samples = simulate(runner, Hypothesis::Null, std::nullopt, kNullStream, scenario.trials);
  const auto signal_samples =
      simulate(runner, Hypothesis::SignalFromPriors, std::nullopt, kSignalStream, scenario.trials);
  RunResult out;
  out.summary = summarize(scenario, null_samples, signal_samples, gamma_bar);
  std::size_t id = 0;
  for (const auto* set : {&null_samples, &signal_samples})
    for (const auto& s : *set) {
      TrialRecord r;
      r.trial_id = id++;
      r.hypothesis = s.active_class ? *s.active_class + 1 : 0;
      r.outcome.energies = s.energies;
      r.outcome.khat = s.khat;
      r.outcome.statistic = s.max_statistic();
      r.outcome.threshold = gamma_bar;
      r.outcome.signal_detected = s.detected(gamma_bar);
      if (r.outcome.signal_detected) r.outcome.active_subspace = s.khat;
      r.whitened_signal_energy = s.whitened_signal_energy;
      out.records.push_back(std::move(r));
    }
  return out;
}

SweepData collect_sweep_data(const Scenario& scenario, bool with_calibration, bool track_direct_sum) {
  const TrialRunner runner(scenario, track_direct_sum);
  SweepData out;
  if (with_calibration)
    out.calibration_max = max_statistics(
        simulate(runner, Hypothesis::Null, std::nullopt, kCalibrationStream, scenario.calibration_trials));
  out.null_samples = simulate(runner, Hypothesis::Null, std::nullopt, kNullStream, scenario.trials);
  out.signal_samples = simulate(runner, Hypothesis::SignalFromPriors, std::nullopt, kSignalStream, scenario.trials);
  return out;
}

CurvePoint evaluate_point(const Scenario& scenario, const SweepData& data, double gamma_bar, double target_pfa,
                          double eta0) {
  const auto summary = summarize(scenario, data.null_samples, data.signal_samples, gamma_bar);
  CurvePoint p;
  p.gamma_bar = gamma_bar;
  p.target_pfa = target_pfa;
  p.pfa = summary.pfa;
  p.pd = summary.pd;
  p.pc = summary.pc;
  p.gap = summary.gap;
  p.class_pd = summary.class_pd;
  p.class_pc = summary.class_pc;
  p.bounds = bound_report(scenario, data.null_samples, data.signal_samples, gamma_bar, eta0);
  return p;
}

std::vector<CurvePoint> roc_sweep(const Scenario& scenario, const std::vector<double>& target_pfas, double eta0) {
  for (double t : target_pfas) check_calibration_size(t, scenario.calibration_trials);
  const auto data = collect_sweep_data(scenario);
  std::vector<CurvePoint> out;
  for (double t : target_pfas)
    out.push_back(evaluate_point(scenario, data, threshold_from_null(data.calibration_max, t), t, eta0));
  return out;
}

std::vector<CurvePoint> roc_at_thresholds(const Scenario& scenario, const std::vector<double>& gamma_bars,
                                          double eta0) {
  const auto data = collect_sweep_data(scenario, false);
  std::vector<CurvePoint> out;
  for (double g : gamma_bars)
    out.push_back(evaluate_point(scenario, data, g, std::numeric_limits<double>::quiet_NaN(), eta0));
  return out;
}

Estimate mean_gap(const Scenario&, const SweepData& data, const std::vector<double>& gamma_bars) {
  if (gamma_bars.empty()) return {};
  std::vector<double> per_trial;
  per_trial.reserve(data.signal_samples.size());
  for (const auto& s : data.signal_samples) {
    double v = 0;
    for (double g : gamma_bars) v += (s.detected(g) && !s.correctly_classified(g)) ? 1.0 : 0.0;
    per_trial.push_back(v / static_cast<double>(gamma_bars.size()));
  }
  return mean_with_se(per_trial);
}

// ---------------------------------------------------------------------------

Vector whitened_principal_angles(const SubspaceD& a, const SubspaceD& b, const Matrix& covariance) {
  const auto w = inverse_sqrt(covariance);
  const Matrix wa = w.inv_sqrt * a.basis();
  const Matrix wb = w.inv_sqrt * b.basis();
  return principal_angles(orthonormalize(wa), orthonormalize(wb)).angles;
}

std::vector<AnglePoint> angle_sweep(const AngleSweepConfig& config) {
  const auto& base = config.base;
  const std::size_t num = base.num_subspaces();
  if (config.swept >= num || config.anchor >= num || config.swept == config.anchor)
    throw Error(ErrorCode::DomainError, "swept and anchor must be distinct subspace indices");
  std::vector<AnglePoint> out;
  for (const Vector& angles : config.angles) {
    auto subspaces = base.union_model.subspaces();
    subspaces[config.swept] = rotated_subspace(subspaces[config.anchor], angles, config.complement);
    Scenario scenario = base;
    scenario.union_model = UnionModelD(subspaces);

    AnglePoint p;
    p.requested = angles;
    p.near_duplicate = !scenario.union_model.near_duplicate_pairs().empty();
    p.whitened_angle_min =
        whitened_principal_angles(subspaces[config.swept], subspaces[config.anchor], base.covariance).minCoeff();
    for (std::size_t j = 0; j < num; ++j)
      if (j != config.swept)
        p.whitened_angle_sum +=
            whitened_principal_angles(subspaces[config.swept], subspaces[j], base.covariance).minCoeff();
    p.point = roc_sweep(scenario, {config.target_pfa}, config.eta0).front();
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------

UnionModelD eigen_aligned_union(const Matrix& covariance, Eigen::Index n, double perturbation, Rng& rng) {
  const Eigen::Index m = covariance.rows();
  if (m < 2 * n) throw Error(ErrorCode::InsufficientAmbientDim, "eigen-aligned construction needs m >= 2n");
  const auto e = eig_sym(covariance);
  const Matrix trailing = e.eigenvectors.rightCols(n) + perturbation * standard_normal<double>(m, n, rng);
  const Matrix leading = e.eigenvectors.leftCols(n) + perturbation * standard_normal<double>(m, n, rng);
  const Matrix random = standard_normal<double>(m, n, rng);
  return UnionModelD({orthonormalize(trailing), orthonormalize(leading), orthonormalize(random)});
}

NoiseGeometryResult noise_geometry_experiment(const NoiseGeometryConfig& config) {
  Rng geometry = make_rng(config.seed, kGeometryStream, 0);
  NoiseGeometryResult out;
  out.covariance = config.identity_covariance ? Matrix(Matrix::Identity(config.m, config.m))
                                              : random_spd_covariance<double>(config.m, config.condition, geometry);
  Scenario scenario(eigen_aligned_union(out.covariance, config.n, config.perturbation, geometry));
  scenario.sigma2 = config.sigma2;
  scenario.covariance = out.covariance;
  scenario.regime = config.regime;
  scenario.n0 = config.n0;
  scenario.snr_db = config.snr_db;
  scenario.trials = config.trials;
  scenario.calibration_trials = config.calibration_trials;
  scenario.seed = config.seed;
  scenario.workers = config.workers;

  check_calibration_size(config.target_pfa, config.calibration_trials);
  const TrialRunner runner(scenario);
  out.gamma_bar = threshold_from_null(
      max_statistics(simulate(runner, Hypothesis::Null, std::nullopt, kCalibrationStream, config.calibration_trials)),
      config.target_pfa);
  const char* labels[] = {"trailing-eig", "leading-eig", "random"};
  for (std::size_t k = 0; k < 3; ++k) {
    const auto samples = simulate(runner, Hypothesis::SignalFromPriors, k, kSignalStream, config.trials);
    NoiseGeometryRow row;
    row.label = labels[k];
    std::size_t det = 0, correct = 0;
    for (const auto& s : samples) {
      row.mean_xbar_norm += std::sqrt(s.whitened_signal_energy);
      det += s.detected(out.gamma_bar);
      correct += s.correctly_classified(out.gamma_bar);
    }
    row.mean_xbar_norm /= static_cast<double>(samples.size());
    row.pd = proportion(det, samples.size());
    row.pc = proportion(correct, samples.size());
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<GapCurve> gap_experiment(const Scenario& scenario, const std::vector<double>& snr_dbs,
                                     const std::vector<double>& target_pfas) {
  for (double t : target_pfas) check_calibration_size(t, scenario.calibration_trials);
  std::vector<GapCurve> out;
  for (double snr : snr_dbs) {
    Scenario s = scenario;
    s.snr_db = snr;
    const auto data = collect_sweep_data(s);
    GapCurve curve;
    curve.snr_db = snr;
    std::vector<double> gammas;
    for (double t : target_pfas) {
      gammas.push_back(threshold_from_null(data.calibration_max, t));
      curve.points.push_back(evaluate_point(s, data, gammas.back(), t));
    }
    curve.mean_gap = mean_gap(s, data, gammas);
    out.push_back(std::move(curve));
  }
  return out;
}

N0SweepResult n0_sweep(const Scenario& scenario, const std::vector<std::size_t>& n0s,
                       const std::vector<double>& target_pfas) {
  N0SweepResult out;
  Scenario known = scenario;
  known.regime = Regime::Known;
  out.known = roc_sweep(known, target_pfas);
  for (std::size_t n0 : n0s) {
    Scenario uc = scenario;
    uc.regime = Regime::UnknownCovariance;
    uc.n0 = n0;
    N0SweepRow row;
    row.n0 = n0;
    row.unknown_cov = roc_sweep(uc, target_pfas);
    for (std::size_t i = 0; i < target_pfas.size(); ++i)
      row.mean_abs_gap += std::abs(out.known[i].pd.value - row.unknown_cov[i].pd.value);
    if (!target_pfas.empty()) row.mean_abs_gap /= static_cast<double>(target_pfas.size());
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<BaselineRow> baseline_comparison(const Scenario& scenario, const std::vector<double>& gamma_bars) {
  const auto data = collect_sweep_data(scenario, false, true);
  std::vector<BaselineRow> out;
  for (double g : gamma_bars) {
    std::size_t fa_u = 0, fa_d = 0, det_u = 0, det_d = 0;
    for (const auto& s : data.null_samples) {
      fa_u += s.detected(g);
      fa_d += s.direct_sum_statistic > g;
    }
    for (const auto& s : data.signal_samples) {
      det_u += s.detected(g);
      det_d += s.direct_sum_statistic > g;
    }
    BaselineRow row;
    row.gamma_bar = g;
    row.pfa_uos = proportion(fa_u, data.null_samples.size());
    row.pfa_direct_sum = proportion(fa_d, data.null_samples.size());
    row.pd_uos = proportion(det_u, data.signal_samples.size());
    row.pd_direct_sum = proportion(det_d, data.signal_samples.size());
    out.push_back(row);
  }
  return out;
}

}  // namespace uos

namespace uos {

Matrix reference_complement() {
  Matrix c = Matrix::Zero(4, 2);
  c(2, 0) = 1.0;
  c(3, 1) = 1.0;
  return c;
}

Vector reference_s2_angles(double phi, double ratio) {
  Vector a(2);
  a << phi, std::min(ratio * phi, std::numbers::pi / 2);
  return a;
}

UnionModelD reference_union(const ReferenceGeometry& g) {
  const auto s1 = SubspaceD::from_orthonormal(Matrix::Identity(4, 2));
  Matrix twist(2, 2);
  twist << std::cos(g.s3_twist), -std::sin(g.s3_twist), std::sin(g.s3_twist), std::cos(g.s3_twist);
  Vector s3_angles(2);
  s3_angles << g.s3_angle_1, g.s3_angle_2;
  const Matrix c = reference_complement();
  const auto s3 = rotated_subspace(s1, s3_angles, Matrix(c * twist));
  const auto s2 = rotated_subspace(s1, reference_s2_angles(g.s2_angle, g.s2_ratio), c);
  return UnionModelD({s1, s2, s3});
}

}  // namespace uos
