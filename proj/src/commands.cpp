#include "uos/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <numbers>

#include "uos/csv.hpp"
#include "uos/svg.hpp"

namespace uos {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::IoError:
    case ErrorCode::DomainError:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::TooFewTrials:
    case ErrorCode::TooFewSamples:
    case ErrorCode::RegimeMismatch:
    case ErrorCode::InsufficientAmbientDim:
      return kExitConfig;
    default:
      return kExitNumeric;
  }
}

Regime parse_regime(const std::string& text) {
  if (text == "known") return Regime::Known;
  if (text == "unknown-cov") return Regime::UnknownCovariance;
  if (text == "unknown-stats") return Regime::UnknownStatistics;
  throw Error(ErrorCode::ConfigError, "unknown regime '" + text + "' (known | unknown-cov | unknown-stats)");
}

const ConfigSchema& run_config_schema() {
  static const ConfigSchema schema = {
      {"scenario", {"seed", "trials", "calibration_trials", "snr_db", "sigma2", "regime", "n0", "priors", "workers"}},
      {"geometry", {"kind", "s2_angle", "s2_ratio", "s3_angle_1", "s3_angle_2", "s3_twist", "m", "n", "k", "seed",
                    "bases"}},
      {"noise", {"covariance", "condition", "seed", "file"}},
      {"roc", {"target_pfa", "eta0"}},
      {"angle_sweep", {"phi", "phi_start", "phi_stop", "phi_count", "ratio", "target_pfa", "swept", "anchor"}},
      {"noise_geometry", {"m", "n", "condition", "perturbation", "target_pfa", "regimes", "control"}},
      {"gap", {"snr_db", "target_pfa"}},
      {"n0_sweep", {"n0", "target_pfa"}},
      {"baseline", {"gamma_bar"}},
      {"output", {"dir", "plots"}},
  };
  return schema;
}

namespace {

std::size_t positive_count(const Config& c, const std::string& section, const std::string& key, long long fallback) {
  const long long v = c.get_int(section, key, fallback);
  if (v < 1) throw Error(ErrorCode::ConfigError, c.source() + ": [" + section + "] " + key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

fs::path resolve(const Config& c, const std::string& p) {
  const fs::path path(p);
  if (path.is_absolute()) return path;
  return fs::path(c.source()).parent_path() / path;
}

UnionModelD build_union(const Config& c, RunConfig& rc) {
  const std::string kind = c.get_string("geometry", "kind", "reference");
  if (kind == "reference") {
    rc.reference_geometry = true;
    ReferenceGeometry g;
    g.s2_angle = c.get_double("geometry", "s2_angle", g.s2_angle);
    g.s2_ratio = c.get_double("geometry", "s2_ratio", g.s2_ratio);
    g.s3_angle_1 = c.get_double("geometry", "s3_angle_1", g.s3_angle_1);
    g.s3_angle_2 = c.get_double("geometry", "s3_angle_2", g.s3_angle_2);
    g.s3_twist = c.get_double("geometry", "s3_twist", g.s3_twist);
    return reference_union(g);
  }
  if (kind == "random") {
    const auto m = static_cast<Eigen::Index>(positive_count(c, "geometry", "m", 4));
    const auto n = static_cast<Eigen::Index>(positive_count(c, "geometry", "n", 2));
    const auto k = positive_count(c, "geometry", "k", 3);
    if (n > m) throw Error(ErrorCode::ConfigError, c.source() + ": [geometry] n must not exceed m");
    Rng rng = make_rng(static_cast<std::uint64_t>(c.get_int("geometry", "seed", 1)), kGeometryStream, 1);
    std::vector<SubspaceD> subspaces;
    for (std::size_t i = 0; i < k; ++i) subspaces.push_back(orthonormalize(standard_normal<double>(m, n, rng)));
    return UnionModelD(std::move(subspaces));
  }
  if (kind == "files") {
    std::vector<SubspaceD> subspaces;
    for (const auto& p : c.get_strings("geometry", "bases", {}))
      subspaces.push_back(orthonormalize(read_matrix_csv(resolve(c, p))));
    if (subspaces.empty()) throw Error(ErrorCode::ConfigError, c.source() + ": [geometry] kind = files needs bases");
    return UnionModelD(std::move(subspaces));
  }
  throw Error(ErrorCode::ConfigError, c.source() + ": [geometry] kind must be reference | random | files");
}

Matrix build_covariance(const Config& c, Eigen::Index m) {
  const std::string kind = c.get_string("noise", "covariance", "identity");
  if (kind == "identity") return Matrix::Identity(m, m);
  if (kind == "random") {
    Rng rng = make_rng(static_cast<std::uint64_t>(c.get_int("noise", "seed", 1)), kGeometryStream, 2);
    return random_spd_covariance<double>(m, c.get_double("noise", "condition", 10.0), rng);
  }
  if (kind == "file") {
    if (!c.has("noise", "file")) throw Error(ErrorCode::ConfigError, c.source() + ": [noise] covariance = file needs file");
    return read_matrix_csv(resolve(c, c.get_string("noise", "file", "")));
  }
  throw Error(ErrorCode::ConfigError, c.source() + ": [noise] covariance must be identity | random | file");
}

std::vector<double> linspace(double a, double b, std::size_t count) {
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(count == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  return out;
}

std::vector<std::size_t> to_counts(const std::vector<double>& v, const std::string& what) {
  std::vector<std::size_t> out;
  for (double x : v) {
    if (!(x >= 1) || x != std::floor(x)) throw Error(ErrorCode::ConfigError, what + " must be positive integers");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

}  // namespace

RunConfig load_run_config(const Config& c) {
  c.validate(run_config_schema());
  RunConfig rc(Scenario(UnionModelD({SubspaceD::from_orthonormal(Matrix::Identity(1, 1))})));
  rc.scenario.union_model = build_union(c, rc);
  Scenario& s = rc.scenario;
  s.covariance = build_covariance(c, s.union_model.ambient_dim());
  s.sigma2 = c.get_double("scenario", "sigma2", 1.0);
  s.regime = parse_regime(c.get_string("scenario", "regime", "known"));
  s.n0 = positive_count(c, "scenario", "n0", 200);
  s.snr_db = c.get_double("scenario", "snr_db", 10.0);
  s.trials = positive_count(c, "scenario", "trials", 10000);
  s.calibration_trials = positive_count(c, "scenario", "calibration_trials", 10000);
  s.workers = positive_count(c, "scenario", "workers", 1);
  s.seed = static_cast<std::uint64_t>(c.get_int("scenario", "seed", 1));
  if (const char* env = std::getenv("UOS_SEED"); env && *env) {
    try {
      s.seed = static_cast<std::uint64_t>(std::stoull(env));
    } catch (const std::exception&) {
      throw Error(ErrorCode::ConfigError, std::string("UOS_SEED is not an integer: ") + env);
    }
  }
  if (c.has("scenario", "priors")) {
    const auto p = c.get_doubles("scenario", "priors", {});
    s.priors = Eigen::Map<const Vector>(p.data(), static_cast<Eigen::Index>(p.size()));
  }
  if (s.covariance.rows() != s.union_model.ambient_dim() || s.covariance.cols() != s.union_model.ambient_dim())
    throw Error(ErrorCode::ConfigError, c.source() + ": covariance must be m x m for the configured geometry");
  if (s.priors.size() != 0 && s.priors.size() != static_cast<Eigen::Index>(s.num_subspaces()))
    throw Error(ErrorCode::ConfigError, c.source() + ": [scenario] priors needs one entry per subspace");
  validate(s);

  rc.scenario_id = fs::path(c.source()).stem().string();
  rc.roc_targets = c.get_doubles("roc", "target_pfa", rc.roc_targets);
  rc.eta0 = c.get_double("roc", "eta0", rc.eta0);

  if (c.has("angle_sweep", "phi")) {
    rc.angle_phis = c.get_doubles("angle_sweep", "phi", {});
  } else {
    rc.angle_phis = linspace(c.get_double("angle_sweep", "phi_start", 0.2), c.get_double("angle_sweep", "phi_stop", 1.37),
                             positive_count(c, "angle_sweep", "phi_count", 10));
  }
  rc.angle_ratio = c.get_double("angle_sweep", "ratio", rc.angle_ratio);
  rc.angle_target = c.get_double("angle_sweep", "target_pfa", rc.angle_target);
  rc.angle_swept = positive_count(c, "angle_sweep", "swept", 2) - 1;
  rc.angle_anchor = positive_count(c, "angle_sweep", "anchor", 1) - 1;

  auto& ng = rc.noise_geometry;
  ng.m = static_cast<Eigen::Index>(positive_count(c, "noise_geometry", "m", 4));
  ng.n = static_cast<Eigen::Index>(positive_count(c, "noise_geometry", "n", 2));
  ng.condition = c.get_double("noise_geometry", "condition", ng.condition);
  ng.perturbation = c.get_double("noise_geometry", "perturbation", ng.perturbation);
  ng.target_pfa = c.get_double("noise_geometry", "target_pfa", ng.target_pfa);
  ng.sigma2 = s.sigma2;
  ng.n0 = s.n0;
  ng.snr_db = s.snr_db;
  ng.trials = s.trials;
  ng.calibration_trials = s.calibration_trials;
  ng.seed = s.seed;
  ng.workers = s.workers;
  if (c.has("noise_geometry", "regimes")) {
    rc.noise_geometry_regimes.clear();
    for (const auto& r : c.get_strings("noise_geometry", "regimes", {})) rc.noise_geometry_regimes.push_back(parse_regime(r));
  }
  rc.noise_geometry_control = c.get_bool("noise_geometry", "control", rc.noise_geometry_control);

  rc.gap_snrs = c.get_doubles("gap", "snr_db", rc.gap_snrs);
  rc.gap_targets = c.get_doubles("gap", "target_pfa", rc.gap_targets);
  if (c.has("n0_sweep", "n0")) rc.n0s = to_counts(c.get_doubles("n0_sweep", "n0", {}), "[n0_sweep] n0");
  rc.n0_targets = c.get_doubles("n0_sweep", "target_pfa", rc.n0_targets);
  rc.baseline_gammas = c.get_doubles("baseline", "gamma_bar", rc.baseline_gammas);
  rc.output_dir = c.get_string("output", "dir", rc.output_dir);  // relative to the working directory
  rc.plots = c.get_bool("output", "plots", rc.plots);
  return rc;
}

std::vector<std::string> curve_point_header() {
  return {"gamma_bar", "target_pfa", "pfa", "pfa_se", "pd", "pd_se", "pc", "pc_se", "pfa_ub", "pd_ub", "pd_lb",
          "pc_lb_frechet_mean", "pc_lb_bessel_mean"};
}

std::vector<std::string> curve_point_row(const CurvePoint& p) {
  return {format_number(p.gamma_bar),
          format_number(p.target_pfa),
          format_number(p.pfa.value),
          format_number(p.pfa.se),
          format_number(p.pd.value),
          format_number(p.pd.se),
          format_number(p.pc.value),
          format_number(p.pc.se),
          format_number(p.bounds.pfa_upper),
          format_number(p.bounds.pd_upper),
          format_number(p.bounds.pd_lower),
          format_number(p.bounds.pc_lower_frechet_total),
          format_number(p.bounds.pc_lower_bessel_total)};
}

namespace {

struct Context {
  const CommandOptions& opt;
  std::ostream& out;
  std::ostream& err;
};

RunConfig load_for(const CommandOptions& opt) {
  if (opt.config_path.empty()) throw Error(ErrorCode::ConfigError, "--config is required");
  Config cfg = Config::load(opt.config_path);
  if (opt.regime) cfg.set("scenario", "regime", *opt.regime);
  RunConfig rc = load_run_config(cfg);
  if (opt.workers) {
    if (*opt.workers < 1) throw Error(ErrorCode::ConfigError, "--workers must be >= 1");
    rc.scenario.workers = *opt.workers;
    rc.noise_geometry.workers = *opt.workers;
  }
  if (opt.out_dir) rc.output_dir = *opt.out_dir;
  if (opt.no_plots) rc.plots = false;
  if (!opt.n0s.empty()) rc.n0s = opt.n0s;
  ensure_output_dir(rc.output_dir);
  return rc;
}

void write_bounds_csv(const fs::path& path, const RunConfig& rc, const std::vector<CurvePoint>& points) {
  Table t;
  t.header = {"scenario_id", "regime", "gamma_bar", "pfa_upper", "pd_upper", "pd_lower"};
  const std::size_t k = rc.scenario.num_subspaces();
  for (const char* name : {"pc_lower_frechet", "pc_lower_bessel", "pc_lower_bessel_p05", "pc_lower_bessel_p95"})
    for (std::size_t i = 1; i <= k; ++i) t.header.push_back(std::string(name) + "_" + std::to_string(i));
  for (const auto& p : points) {
    const auto& b = p.bounds;
    std::vector<std::string> row{rc.scenario_id, std::string(to_string(b.regime)), format_number(b.gamma_bar),
                                 format_number(b.pfa_upper), format_number(b.pd_upper), format_number(b.pd_lower)};
    for (const Vector* v : {&b.pc_lower_frechet, &b.pc_lower_bessel, &b.pc_lower_bessel_p05, &b.pc_lower_bessel_p95})
      for (Eigen::Index i = 0; i < v->size(); ++i) row.push_back(format_number((*v)(i)));
    t.add(std::move(row));
  }
  write_table_csv(path, t);
}

int cmd_calibrate(Context& ctx) {
  const RunConfig rc = load_for(ctx.opt);
  const double target = ctx.opt.target_pfa.value_or(0.1);
  const double gamma_bar = calibrate_threshold(rc.scenario, target, rc.scenario.calibration_trials);
  Table t;
  t.header = {"regime", "target_pfa", "calibration_trials", "gamma_bar"};
  t.add({std::string(to_string(rc.scenario.regime)), format_number(target),
         std::to_string(rc.scenario.calibration_trials), format_number(gamma_bar)});
  write_table_csv(fs::path(rc.output_dir) / "calibration.csv", t);
  ctx.out << "gamma_bar = " << format_number(gamma_bar) << '\n';
  return kExitOk;
}

int cmd_roc(Context& ctx) {
  const RunConfig rc = load_for(ctx.opt);
  std::vector<double> targets = rc.roc_targets;
  if (ctx.opt.target_pfa) targets = {*ctx.opt.target_pfa};
  const auto points = roc_sweep(rc.scenario, targets, rc.eta0);
  Table t;
  t.header = curve_point_header();
  for (const auto& p : points) t.add(curve_point_row(p));
  const fs::path dir(rc.output_dir);
  write_table_csv(dir / "roc.csv", t);
  write_bounds_csv(dir / "bounds.csv", rc, points);
  if (rc.plots) {
    Series pd{"P_D", {}, {}}, pc{"P_C", {}, {}}, ub{"P_D upper", {}, {}}, lb{"P_D lower", {}, {}},
        fr{"P_C Frechet", {}, {}};
    for (const auto& p : points) {
      for (Series* s : {&pd, &pc, &ub, &lb, &fr}) s->x.push_back(p.pfa.value);
      pd.y.push_back(p.pd.value);
      pc.y.push_back(p.pc.value);
      ub.y.push_back(p.bounds.pd_upper);
      lb.y.push_back(p.bounds.pd_lower);
      fr.y.push_back(p.bounds.pc_lower_frechet_total);
    }
    write_line_plot(dir / "roc.svg", "ROC (" + std::string(to_string(rc.scenario.regime)) + ")", "P_FA",
                    "probability", {pd, pc, ub, lb, fr});
  }
  ctx.out << "regime " << to_string(rc.scenario.regime) << ", " << rc.scenario.trials << " trials per hypothesis\n";
  for (const auto& p : points) {
    const auto& b = p.bounds;
    ctx.out << "gamma_bar " << format_number(p.gamma_bar, 6) << ": P_FA " << format_number(p.pfa.value, 4) << " (<= "
            << format_number(b.pfa_upper, 4) << "), P_D " << format_number(p.pd.value, 4) << " in ["
            << format_number(b.pd_lower, 4) << ", " << format_number(b.pd_upper, 4) << "], P_C "
            << format_number(p.pc.value, 4) << " (>= Frechet " << format_number(b.pc_lower_frechet_total, 4)
            << ", Bessel " << format_number(b.pc_lower_bessel_total, 4) << ")\n";
  }
  return kExitOk;
}

Matrix complement_for(const RunConfig& rc) {
  if (rc.reference_geometry && rc.angle_anchor == 0) return reference_complement();
  const auto& anchor = rc.scenario.union_model[rc.angle_anchor];
  Eigen::JacobiSVD<Matrix> svd(complement_projector(anchor), Eigen::ComputeFullU);
  return svd.matrixU().leftCols(anchor.dim());
}

int cmd_angle_sweep(Context& ctx) {
  const RunConfig rc = load_for(ctx.opt);
  AngleSweepConfig cfg(rc.scenario);
  cfg.swept = rc.angle_swept;
  cfg.anchor = rc.angle_anchor;
  cfg.complement = complement_for(rc);
  cfg.target_pfa = ctx.opt.target_pfa.value_or(rc.angle_target);
  cfg.eta0 = rc.eta0;
  const auto n = rc.scenario.union_model.subspace_dim();
  for (double phi : rc.angle_phis) {
    Vector a(n);
    for (Eigen::Index i = 0; i < n; ++i)
      a(i) = std::min(std::pow(rc.angle_ratio, static_cast<double>(i)) * phi, std::numbers::pi / 2);
    cfg.angles.push_back(a);
  }
  const auto points = angle_sweep(cfg);
  Table t;
  t.header = curve_point_header();
  for (Eigen::Index i = 1; i <= n; ++i) t.header.push_back("requested_angle_" + std::to_string(i));
  t.header.push_back("whitened_angle_min");
  t.header.push_back("whitened_angle_sum");
  for (std::size_t k = 1; k <= rc.scenario.num_subspaces(); ++k) {
    t.header.push_back("pc_class_" + std::to_string(k));
    t.header.push_back("pc_class_" + std::to_string(k) + "_se");
  }
  t.header.push_back("near_duplicate");
  for (const auto& p : points) {
    auto row = curve_point_row(p.point);
    for (Eigen::Index i = 0; i < n; ++i) row.push_back(format_number(p.requested(i)));
    row.push_back(format_number(p.whitened_angle_min));
    row.push_back(format_number(p.whitened_angle_sum));
    for (const auto& e : p.point.class_pc) {
      row.push_back(format_number(e.value));
      row.push_back(format_number(e.se));
    }
    row.push_back(p.near_duplicate ? "1" : "0");
    t.add(std::move(row));
    if (p.near_duplicate) ctx.err << "warning: near-duplicate subspaces at angle " << format_number(p.requested(0), 6) << '\n';
  }
  const fs::path dir(rc.output_dir);
  write_table_csv(dir / "angle_sweep.csv", t);
  if (rc.plots) {
    std::vector<Series> series;
    series.push_back({"P_D", {}, {}});
    for (std::size_t k = 1; k <= rc.scenario.num_subspaces(); ++k)
      series.push_back({"P_C class " + std::to_string(k), {}, {}});
    for (const auto& p : points) {
      for (auto& s : series) s.x.push_back(p.whitened_angle_min);
      series[0].y.push_back(p.point.pd.value);
      for (std::size_t k = 0; k < p.point.class_pc.size(); ++k) series[k + 1].y.push_back(p.point.class_pc[k].value);
    }
    write_line_plot(dir / "angle_sweep.svg", "Angle sweep", "whitened min principal angle (rad)", "probability",
                    series);
  }
  ctx.out << "wrote " << (dir / "angle_sweep.csv").string() << " (" << points.size() << " points)\n";
  return kExitOk;
}

int cmd_noise_geometry(Context& ctx) {
  const RunConfig rc = load_for(ctx.opt);
  Table t;
  t.header = {"covariance", "regime", "subspace", "label", "gamma_bar", "mean_xbar_norm", "pd", "pd_se", "pc", "pc_se"};
  auto run = [&](bool identity, Regime regime) {
    NoiseGeometryConfig cfg = rc.noise_geometry;
    cfg.identity_covariance = identity;
    cfg.regime = regime;
    if (ctx.opt.target_pfa) cfg.target_pfa = *ctx.opt.target_pfa;
    const auto res = noise_geometry_experiment(cfg);
    for (std::size_t k = 0; k < res.rows.size(); ++k) {
      const auto& r = res.rows[k];
      t.add({identity ? "identity" : "colored", std::string(to_string(regime)), std::to_string(k + 1), r.label,
             format_number(res.gamma_bar), format_number(r.mean_xbar_norm), format_number(r.pd.value),
             format_number(r.pd.se), format_number(r.pc.value), format_number(r.pc.se)});
      ctx.out << (identity ? "identity " : "colored  ") << to_string(regime) << " S" << k + 1 << " (" << r.label
              << "): mean |xbar| " << format_number(r.mean_xbar_norm, 4) << ", P_D " << format_number(r.pd.value, 4)
              << ", P_C " << format_number(r.pc.value, 4) << '\n';
    }
  };
  for (Regime r : rc.noise_geometry_regimes) run(false, r);
  if (rc.noise_geometry_control) run(true, Regime::Known);
  write_table_csv(fs::path(rc.output_dir) / "noise_geometry.csv", t);
  return kExitOk;
}

int cmd_gap(Context& ctx) {
  const RunConfig rc = load_for(ctx.opt);
  const auto curves = gap_experiment(rc.scenario, rc.gap_snrs, rc.gap_targets);
  Table t;
  t.header = {"snr_db", "target_pfa", "gamma_bar", "pd", "pd_se", "pc", "pc_se", "gap", "gap_se"};
  std::vector<Series> series;
  for (const auto& c : curves) {
    Series s{"SNR " + format_number(c.snr_db, 4) + " dB", {}, {}};
    for (const auto& p : c.points) {
      t.add({format_number(c.snr_db), format_number(p.target_pfa), format_number(p.gamma_bar), format_number(p.pd.value),
             format_number(p.pd.se), format_number(p.pc.value), format_number(p.pc.se), format_number(p.gap.value),
             format_number(p.gap.se)});
      s.x.push_back(p.pfa.value);
      s.y.push_back(p.gap.value);
    }
    series.push_back(std::move(s));
    ctx.out << "SNR " << format_number(c.snr_db, 4) << " dB: mean gap " << format_number(c.mean_gap.value, 4)
            << " (se " << format_number(c.mean_gap.se, 2) << ")\n";
  }
  const fs::path dir(rc.output_dir);
  write_table_csv(dir / "gap.csv", t);
  if (rc.plots) write_line_plot(dir / "gap.svg", "P_D - P_C", "P_FA", "gap", series);
  return kExitOk;
}

int cmd_n0_sweep(Context& ctx) {
  const RunConfig rc = load_for(ctx.opt);
  const auto res = n0_sweep(rc.scenario, rc.n0s, rc.n0_targets);
  Table t;
  t.header = {"regime", "n0", "target_pfa", "gamma_bar", "pfa", "pfa_se", "pd", "pd_se"};
  std::vector<Series> series;
  auto emit = [&](const std::string& regime, std::size_t n0, const std::vector<CurvePoint>& pts, const std::string& name) {
    Series s{name, {}, {}};
    for (const auto& p : pts) {
      t.add({regime, std::to_string(n0), format_number(p.target_pfa), format_number(p.gamma_bar),
             format_number(p.pfa.value), format_number(p.pfa.se), format_number(p.pd.value), format_number(p.pd.se)});
      s.x.push_back(p.pfa.value);
      s.y.push_back(p.pd.value);
    }
    series.push_back(std::move(s));
  };
  emit("known", 0, res.known, "known");
  for (const auto& r : res.rows) {
    emit("unknown-cov", r.n0, r.unknown_cov, "N0 = " + std::to_string(r.n0));
    ctx.out << "N0 " << r.n0 << ": mean |P_D known - P_D unknown-cov| = " << format_number(r.mean_abs_gap, 4) << '\n';
  }
  const fs::path dir(rc.output_dir);
  write_table_csv(dir / "n0_sweep.csv", t);
  if (rc.plots) write_line_plot(dir / "n0_sweep.svg", "ROC vs N0", "P_FA", "P_D", series);
  return kExitOk;
}

int cmd_baseline(Context& ctx) {
  const RunConfig rc = load_for(ctx.opt);
  const auto rows = baseline_comparison(rc.scenario, rc.baseline_gammas);
  Table t;
  t.header = {"gamma_bar", "pfa_uos", "pfa_uos_se", "pfa_direct_sum", "pfa_direct_sum_se",
              "pd_uos", "pd_uos_se", "pd_direct_sum", "pd_direct_sum_se"};
  for (const auto& r : rows) {
    t.add({format_number(r.gamma_bar), format_number(r.pfa_uos.value), format_number(r.pfa_uos.se),
           format_number(r.pfa_direct_sum.value), format_number(r.pfa_direct_sum.se), format_number(r.pd_uos.value),
           format_number(r.pd_uos.se), format_number(r.pd_direct_sum.value), format_number(r.pd_direct_sum.se)});
    ctx.out << "gamma_bar " << format_number(r.gamma_bar, 4) << ": P_FA UoS " << format_number(r.pfa_uos.value, 4)
            << " vs direct sum " << format_number(r.pfa_direct_sum.value, 4) << "; P_D UoS "
            << format_number(r.pd_uos.value, 4) << " vs direct sum " << format_number(r.pd_direct_sum.value, 4) << '\n';
  }
  write_table_csv(fs::path(rc.output_dir) / "baseline.csv", t);
  return kExitOk;
}

int cmd_learn_bases(Context& ctx) {
  const auto& opt = ctx.opt;
  if (opt.data_path.empty() || opt.labels_path.empty())
    throw Error(ErrorCode::ConfigError, "learn-bases needs --data and --labels");
  if (opt.dim < 1) throw Error(ErrorCode::ConfigError, "--dim must be >= 1");
  const fs::path dir = opt.out_dir.value_or("bases");
  ensure_output_dir(dir);
  const Matrix data = read_matrix_csv(opt.data_path);
  const Matrix labels_m = read_matrix_csv(opt.labels_path);
  const Eigen::Index count = labels_m.size();
  if (count != data.cols())
    throw Error(ErrorCode::DimensionMismatch, "labels count (" + std::to_string(count) + ") != data columns (" +
                                                  std::to_string(data.cols()) + ")");
  std::map<long, std::vector<Eigen::Index>> by_label;
  for (Eigen::Index i = 0; i < count; ++i) {
    const double v = labels_m.data()[i];
    if (v != std::floor(v)) throw Error(ErrorCode::ConfigError, "labels must be integers");
    by_label[static_cast<long>(v)].push_back(i);
  }
  int status = kExitOk;
  for (const auto& [label, cols] : by_label) {
    Matrix samples(data.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) samples.col(static_cast<Eigen::Index>(j)) = data.col(cols[j]);
    try {
      const auto basis = learn_basis_svd(samples, opt.dim);
      const auto path = dir / ("basis_" + std::to_string(label) + ".csv");
      write_matrix_csv(path, basis.basis());
      ctx.out << "class " << label << ": " << cols.size() << " samples -> " << path.string() << '\n';
    } catch (const Error& e) {
      ctx.err << "class " << label << ": " << e.what() << '\n';
      status = std::max(status, exit_code_for(e.code()));
    }
  }
  return status;
}

int cmd_detect_batch(Context& ctx) {
  const auto& opt = ctx.opt;
  if (opt.basis_paths.empty() || opt.data_path.empty())
    throw Error(ErrorCode::ConfigError, "detect-batch needs --bases and --data");
  if (!opt.gamma_bar) throw Error(ErrorCode::ConfigError, "detect-batch needs --gamma-bar");
  const Regime regime = parse_regime(opt.regime.value_or("known"));
  std::vector<Matrix> bases;
  for (const auto& p : opt.basis_paths) bases.push_back(read_matrix_csv(p));
  const Matrix data = read_matrix_csv(opt.data_path);
  const Eigen::Index m = data.rows();
  for (const auto& b : bases)
    if (b.rows() != m || b.cols() != bases.front().cols())
      throw Error(ErrorCode::DimensionMismatch, "bases and observations disagree on dimensions");

  std::optional<NoiseModelD> noise;
  switch (regime) {
    case Regime::Known: {
      if (!opt.sigma2) throw Error(ErrorCode::ConfigError, "known regime needs --sigma2");
      const Matrix r = opt.covariance_path.empty() ? Matrix(Matrix::Identity(m, m)) : read_matrix_csv(opt.covariance_path);
      if (r.rows() != m || r.cols() != m) throw Error(ErrorCode::DimensionMismatch, "covariance must be m x m");
      noise = NoiseModelD::known(*opt.sigma2, r);
      break;
    }
    case Regime::UnknownCovariance:
    case Regime::UnknownStatistics: {
      if (opt.training_path.empty()) throw Error(ErrorCode::ConfigError, "adaptive regimes need --training");
      Matrix xi = read_matrix_csv(opt.training_path);
      if (xi.rows() != m) throw Error(ErrorCode::DimensionMismatch, "training samples must have m rows");
      if (regime == Regime::UnknownCovariance) {
        if (!opt.sigma2) throw Error(ErrorCode::ConfigError, "unknown-cov regime needs --sigma2");
        noise = NoiseModelD::unknown_covariance(*opt.sigma2, std::move(xi));
      } else {
        noise = NoiseModelD::unknown_statistics(std::move(xi));
      }
      break;
    }
  }
  const auto prep = prepare(bases, *noise);
  const fs::path dir = opt.out_dir.value_or(".");
  ensure_output_dir(dir);
  Table t;
  t.header = {"index", "khat", "statistic", "detected"};
  std::size_t detected = 0;
  std::vector<std::size_t> per_class(bases.size(), 0);
  for (Eigen::Index i = 0; i < data.cols(); ++i) {
    const auto o = detect(prep, Vector(data.col(i)), *opt.gamma_bar);
    t.add({std::to_string(i), std::to_string(o.khat), format_number(o.statistic, 17), o.signal_detected ? "1" : "0"});
    if (o.signal_detected) {
      ++detected;
      ++per_class[o.khat];
    }
  }
  write_table_csv(dir / "decisions.csv", t);
  ctx.out << "observations " << data.cols() << ", detected " << detected;
  for (std::size_t k = 0; k < per_class.size(); ++k) ctx.out << ", khat=" << k << ": " << per_class[k];
  ctx.out << '\n';
  return kExitOk;
}

}  // namespace

int run_command(const std::string& command, const CommandOptions& options, std::ostream& out, std::ostream& err) {
  Context ctx{options, out, err};
  try {
    if (command == "calibrate") return cmd_calibrate(ctx);
    if (command == "roc") return cmd_roc(ctx);
    if (command == "angle-sweep") return cmd_angle_sweep(ctx);
    if (command == "noise-geometry") return cmd_noise_geometry(ctx);
    if (command == "gap") return cmd_gap(ctx);
    if (command == "n0-sweep") return cmd_n0_sweep(ctx);
    if (command == "baseline") return cmd_baseline(ctx);
    if (command == "learn-bases") return cmd_learn_bases(ctx);
    if (command == "detect-batch") return cmd_detect_batch(ctx);
    err << "unknown command '" << command << "'\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace uos
