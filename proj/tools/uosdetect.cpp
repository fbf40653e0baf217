// uosdetect: union-of-subspaces detection experiments from the command line.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "uos/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Union-of-subspaces GLRT detection: calibration, ROC and geometry experiments"};
  app.require_subcommand(1);
  uos::CommandOptions opt;
  std::string regime;
  std::string n0_list;

  auto add_common = [&](CLI::App* sub, bool with_target) {
    sub->add_option("--config", opt.config_path, "experiment config file")->required();
    sub->add_option("--workers", opt.workers, "worker threads (results do not depend on it)");
    sub->add_option("--out", opt.out_dir, "output directory (overrides [output] dir)");
    sub->add_option("--regime", regime, "known | unknown-cov | unknown-stats (overrides [scenario] regime)");
    sub->add_flag("--no-plots", opt.no_plots, "skip SVG output");
    if (with_target) sub->add_option("--target-pfa", opt.target_pfa, "target false-alarm rate");
  };

  add_common(app.add_subcommand("calibrate", "calibrate gamma_bar for a target P_FA"), true);
  add_common(app.add_subcommand("roc", "ROC sweep with bounds"), true);
  add_common(app.add_subcommand("angle-sweep", "sweep the principal angles of one subspace"), true);
  add_common(app.add_subcommand("noise-geometry", "eigen-aligned subspaces in colored noise"), true);
  add_common(app.add_subcommand("gap", "P_D - P_C across SNR"), false);
  auto* n0 = app.add_subcommand("n0-sweep", "known vs unknown-cov ROC across N0");
  add_common(n0, false);
  n0->add_option("--n0", n0_list, "comma-separated N0 values (overrides [n0_sweep] n0)");
  add_common(app.add_subcommand("baseline", "UoS vs direct-sum detector at shared thresholds"), false);

  auto* learn = app.add_subcommand("learn-bases", "per-class SVD bases from labeled samples");
  learn->add_option("--data", opt.data_path, "m x p sample matrix (columns are samples)")->required();
  learn->add_option("--labels", opt.labels_path, "p integer labels")->required();
  learn->add_option("--dim", opt.dim, "subspace dimension")->required();
  learn->add_option("--out", opt.out_dir, "output directory");

  auto* batch = app.add_subcommand("detect-batch", "run the detector over a matrix of observations");
  batch->add_option("--bases", opt.basis_paths, "basis CSV files, one per subspace")->required();
  batch->add_option("--data", opt.data_path, "m x N observations (columns)")->required();
  batch->add_option("--regime", regime, "known | unknown-cov | unknown-stats");
  batch->add_option("--sigma2", opt.sigma2, "noise variance (known, unknown-cov)");
  batch->add_option("--covariance", opt.covariance_path, "m x m covariance R (known; identity if omitted)");
  batch->add_option("--training", opt.training_path, "m x N0 noise-only training samples (adaptive regimes)");
  batch->add_option("--gamma-bar", opt.gamma_bar, "decision threshold")->required();
  batch->add_option("--out", opt.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return uos::kExitConfig;
  }
  if (!regime.empty()) opt.regime = regime;
  if (!n0_list.empty()) {
    try {
      for (const auto& item : uos::split_list(n0_list)) opt.n0s.push_back(std::stoul(item));
    } catch (const std::exception&) {
      std::cerr << "error: --n0 expects a comma-separated list of integers\n";
      return uos::kExitConfig;
    }
  }
  const std::string command = app.get_subcommands().front()->get_name();
  return uos::run_command(command, opt, std::cout, std::cerr);
}
