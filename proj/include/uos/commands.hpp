#pragma once

// Command implementations behind the uosdetect executable. Kept in the
// library so tests can drive them without spawning processes.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "uos/config.hpp"
#include "uos/sim.hpp"

namespace uos {

/// Exit codes: 0 success, 2 configuration / input problems, 3 numeric failures.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

int exit_code_for(ErrorCode code);

Regime parse_regime(const std::string& text);

/// Typed view of a validated config file.
struct RunConfig {
  explicit RunConfig(Scenario s) : scenario(std::move(s)) {}

  Scenario scenario;
  std::string scenario_id;
  bool reference_geometry = false;
  std::vector<double> roc_targets{0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
  double eta0 = 0.25;
  std::vector<double> angle_phis;
  double angle_ratio = 1.15;
  double angle_target = 0.1;
  std::size_t angle_swept = 1;   // 0-based
  std::size_t angle_anchor = 0;
  NoiseGeometryConfig noise_geometry;
  std::vector<Regime> noise_geometry_regimes{Regime::Known, Regime::UnknownCovariance, Regime::UnknownStatistics};
  bool noise_geometry_control = true;
  std::vector<double> gap_snrs{5.0, 10.0};
  std::vector<double> gap_targets{0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
  std::vector<std::size_t> n0s{8, 200};
  std::vector<double> n0_targets{0.01, 0.02, 0.05, 0.1, 0.2, 0.3};
  std::vector<double> baseline_gammas{2, 4, 6, 8, 10, 12};
  std::string output_dir = "out";
  bool plots = true;
};

const ConfigSchema& run_config_schema();

/// Validates against the schema and builds the scenario. UOS_SEED in the
/// environment overrides [scenario] seed.
RunConfig load_run_config(const Config& config);

struct CommandOptions {
  std::string config_path;
  std::optional<double> target_pfa;
  std::optional<std::size_t> workers;
  std::optional<std::string> out_dir;
  std::optional<std::string> regime;
  std::vector<std::size_t> n0s;
  bool no_plots = false;
  // learn-bases
  std::string data_path;
  std::string labels_path;
  long dim = 0;
  // detect-batch
  std::vector<std::string> basis_paths;
  std::string training_path;
  std::string covariance_path;
  std::optional<double> sigma2;
  std::optional<double> gamma_bar;
};

/// Runs one command; errors are printed to `err` and mapped to exit codes.
int run_command(const std::string& command, const CommandOptions& options, std::ostream& out, std::ostream& err);

/// The documented CSV headers (golden-tested).
std::vector<std::string> curve_point_header();
std::vector<std::string> curve_point_row(const CurvePoint& p);

}  // namespace uos
