#include <cmath>

#include <gtest/gtest.h>

#include "uos/sim.hpp"

using namespace uos;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& err) {
    return err.code();
  }
  return ErrorCode::IoError;
}

Scenario random_scenario(std::size_t k, Eigen::Index m = 4, Eigen::Index n = 2, std::uint64_t seed = 3) {
  Rng rng = make_rng(seed, kGeometryStream, 0);
  std::vector<SubspaceD> s;
  for (std::size_t i = 0; i < k; ++i) s.push_back(orthonormalize(standard_normal<double>(m, n, rng)));
  Scenario sc{UnionModelD(s)};
  sc.covariance = Matrix::Identity(m, m);
  sc.seed = seed;
  return sc;
}

}  // namespace

TEST(SampleSignal, NormAndMembership) {
  auto sc = random_scenario(3);
  sc.sigma2 = 2.0;
  Rng rng = make_rng(5);
  Vector mean = Vector::Zero(4);
  const double r = std::sqrt(std::pow(10.0, 0.5) * 2.0);
  constexpr int kDraws = 20000;
  for (int i = 0; i < kDraws; ++i) {
    const Vector x = sample_signal(sc.union_model, 2, 5.0, 2.0, rng);
    if (i < 100) {
      EXPECT_NEAR(x.norm(), r, 1e-12);
      EXPECT_LT((x - projector(sc.union_model[2]) * x).norm(), 1e-12);
    }
    mean += x;
  }
  mean /= kDraws;
  // coordinates have variance r^2 / m-ish; 5 sigma on the mean
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 5 * r / std::sqrt(kDraws));
}

TEST(Calibration, SingleSubspaceKnownIsLogTarget) {
  auto sc = random_scenario(1);
  const double g = calibrate_threshold(sc, 0.1, 100000);
  EXPECT_NEAR(g, -std::log(0.1), 0.05);
  sc.trials = 100000;
  const auto run = run_trials(sc, g);
  EXPECT_NEAR(run.summary.pfa.value, 0.1, 3 * run.summary.pfa.se);
}

TEST(Calibration, Errors) {
  const auto sc = random_scenario(2);
  EXPECT_EQ(code_of([&] { calibrate_threshold(sc, 0.0, 1000); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { calibrate_threshold(sc, 1.5, 1000); }), ErrorCode::DomainError);
  EXPECT_EQ(code_of([&] { calibrate_threshold(sc, 0.001, 9999); }), ErrorCode::TooFewTrials);
  EXPECT_NO_THROW(calibrate_threshold(sc, 0.001, 10000));
}

TEST(Calibration, QuantileRule) {
  std::vector<double> v = {5, 1, 4, 2, 3};
  EXPECT_EQ(threshold_from_null(v, 1.0), 1.0);
  EXPECT_EQ(threshold_from_null(v, 0.25), 4.0);
  EXPECT_EQ(threshold_from_null(v, 0.2), 5.0);
  const auto sc = random_scenario(3);
  double prev = -1;
  for (double t : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    const double g = calibrate_threshold(sc, t, 5000);
    EXPECT_GE(g, prev);
    prev = g;
  }
}

TEST(RunTrials, HighSnrIsPerfect) {
  auto sc = random_scenario(3);
  sc.snr_db = 60;
  sc.trials = 2000;
  const double g = calibrate_threshold(sc, 0.1, 2000);
  const auto run = run_trials(sc, g);
  EXPECT_GT(run.summary.pd.value, 0.999);
  EXPECT_GT(run.summary.pc.value, 0.99);
  EXPECT_EQ(run.records.size(), 4000u);
  EXPECT_EQ(run.records.front().hypothesis, 0u);
  EXPECT_GE(run.records.back().hypothesis, 1u);
}

TEST(RunTrials, ClassificationNeverExceedsDetection) {
  for (Regime r : {Regime::Known, Regime::UnknownCovariance, Regime::UnknownStatistics}) {
    auto sc = random_scenario(3);
    sc.regime = r;
    sc.n0 = r == Regime::Known ? 0 : 40;
    sc.trials = 2000;
    const double g = calibrate_threshold(sc, 0.1, 2000);
    const auto s = run_trials(sc, g).summary;
    EXPECT_LE(s.pc.value, s.pd.value);
    EXPECT_GE(s.gap.value, 0.0);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_LE(s.class_pc[k].value, s.class_pd[k].value);
  }
}

TEST(RunTrials, ParallelMatchesSerialBitExact) {
  for (Regime r : {Regime::Known, Regime::UnknownStatistics}) {
    auto sc = random_scenario(3);
    sc.regime = r;
    sc.n0 = r == Regime::Known ? 0 : 20;
    sc.trials = 1500;
    auto par = sc;
    par.workers = 3;
    const auto a = run_trials(sc, 0.4);
    const auto b = run_trials(par, 0.4);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      EXPECT_EQ(a.records[i].outcome.statistic, b.records[i].outcome.statistic);
      EXPECT_EQ(a.records[i].outcome.khat, b.records[i].outcome.khat);
      EXPECT_EQ(a.records[i].hypothesis, b.records[i].hypothesis);
    }
    EXPECT_EQ(calibrate_threshold(sc, 0.1, 3000), calibrate_threshold(par, 0.1, 3000));
  }
}

TEST(RunTrials, PriorsSteerClassCounts) {
  auto sc = random_scenario(3);
  sc.trials = 3000;
  sc.priors = Vector(3);
  sc.priors << 0.0, 1.0, 0.0;
  const auto s = run_trials(sc, 1.0).summary;
  EXPECT_EQ(s.class_counts[1], 3000u);
  sc.priors << 0.2, 0.2, 0.2;
  EXPECT_EQ(code_of([&] { validate(sc); }), ErrorCode::DomainError);
}

TEST(Roc, MonotoneInTarget) {
  auto sc = random_scenario(3);
  sc.trials = 3000;
  sc.calibration_trials = 3000;
  const auto pts = roc_sweep(sc, {0.01, 0.05, 0.1, 0.3});
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_LE(pts[i].gamma_bar, pts[i - 1].gamma_bar);
    EXPECT_GE(pts[i].pfa.value, pts[i - 1].pfa.value);
    EXPECT_GE(pts[i].pd.value, pts[i - 1].pd.value);
  }
  for (const auto& p : pts) EXPECT_NEAR(p.pfa.value, p.target_pfa, 4 * std::sqrt(p.target_pfa / 3000.0) + 1e-3);
}

TEST(NoiseGeometry, IdentityControlIsFlat) {
  NoiseGeometryConfig cfg;
  cfg.identity_covariance = true;
  cfg.trials = 4000;
  cfg.calibration_trials = 4000;
  const auto res = noise_geometry_experiment(cfg);
  ASSERT_EQ(res.rows.size(), 3u);
  for (const auto& r : res.rows) EXPECT_NEAR(r.mean_xbar_norm, std::sqrt(10.0), 1e-9);
}

TEST(NoiseGeometry, NeedsRoomForTwoSubspaces) {
  Rng rng = make_rng(1);
  EXPECT_EQ(code_of([&] { eigen_aligned_union(Matrix::Identity(3, 3), 2, 0.05, rng); }),
            ErrorCode::InsufficientAmbientDim);
}

TEST(Gap, VanishesAtHighSnr) {
  auto sc = random_scenario(3);
  sc.trials = 2000;
  sc.calibration_trials = 2000;
  const auto curves = gap_experiment(sc, {60.0}, {0.05, 0.1});
  EXPECT_LT(curves[0].mean_gap.value, 0.01);
}

TEST(Baseline, SingleSubspaceMatchesUoS) {
  auto sc = random_scenario(1, 6, 2);
  sc.trials = 2000;
  for (const auto& row : baseline_comparison(sc, {0.5, 1.5})) {
    EXPECT_EQ(row.pfa_uos.value, row.pfa_direct_sum.value);
    EXPECT_EQ(row.pd_uos.value, row.pd_direct_sum.value);
  }
}

TEST(AngleSweep, RequestedAnglesAreRealized) {
  Scenario sc(reference_union());
  sc.covariance = Matrix::Identity(4, 4);
  sc.trials = 1000;
  sc.calibration_trials = 1000;
  AngleSweepConfig cfg(sc);
  cfg.complement = reference_complement();
  cfg.angles = {reference_s2_angles(0.3, 1.15), reference_s2_angles(0.9, 1.15)};
  const auto pts = angle_sweep(cfg);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0].whitened_angle_min, 0.3, 1e-8);
  EXPECT_NEAR(pts[1].whitened_angle_min, 0.9, 1e-8);
  EXPECT_FALSE(pts[0].near_duplicate);
}

TEST(ReferenceGeometry, Construction) {
  const auto u = reference_union();
  ASSERT_EQ(u.size(), 3u);
  const auto a = principal_angles(u[0], u[1]).angles;
  EXPECT_NEAR(a(0), 0.6, 1e-10);
  EXPECT_NEAR(a(1), 0.69, 1e-10);
  EXPECT_TRUE(u.near_duplicate_pairs().empty());
}
