// Drives the uosdetect executable end to end.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "uos/csv.hpp"
#include "uos/noise.hpp"
#include "uos/rng.hpp"

namespace fs = std::filesystem;
using namespace uos;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("uos_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("UOS_SEED");
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  int run(const std::string& args, std::string* stdout_text = nullptr) const {
    const auto out = dir_ / "stdout.txt";
    const std::string cmd = "cd '" + dir_.string() + "' && '" UOSDETECT_BIN "' " + args + " > '" + out.string() +
                            "' 2> '" + (dir_ / "stderr.txt").string() + "'";
    const int status = std::system(cmd.c_str());
    if (stdout_text) *stdout_text = slurp(out);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
  }

  fs::path dir_;
};

const char* kSmall =
    "[scenario]\n"
    "trials = 1000\n"
    "calibration_trials = 1000\n"
    "seed = 4\n"
    "[roc]\n"
    "target_pfa = 0.05, 0.1\n"
    "[angle_sweep]\n"
    "phi_count = 2\n";

}  // namespace

TEST_F(Cli, MalformedConfigExitsTwo) {
  write("bad.toml", "[scenario]\nseed 4\n");
  EXPECT_EQ(run("calibrate --config bad.toml"), 2);
  write("unknown.toml", "[scenario]\ntrails = 10\n");
  EXPECT_EQ(run("calibrate --config unknown.toml"), 2);
  EXPECT_EQ(run("calibrate --config missing.toml"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(Cli, ZeroTargetExitsTwo) {
  write("small.toml", kSmall);
  EXPECT_EQ(run("calibrate --config small.toml --target-pfa 0"), 2);
}

TEST_F(Cli, CalibrateWritesCsvAndCreatesDir) {
  write("small.toml", kSmall);
  std::string out;
  ASSERT_EQ(run("calibrate --config small.toml --out nested/deeper", &out), 0);
  EXPECT_NE(out.find("gamma_bar = "), std::string::npos);
  EXPECT_EQ(first_line(dir_ / "nested/deeper/calibration.csv"), "regime,target_pfa,calibration_trials,gamma_bar");
}

TEST_F(Cli, UnwritableOutputExitsTwo) {
  write("small.toml", kSmall);
  write("plainfile", "x");
  EXPECT_EQ(run("calibrate --config small.toml --out plainfile/sub"), 2);
}

TEST_F(Cli, RocGoldenHeadersAndReproducibility) {
  write("small.toml", kSmall);
  ASSERT_EQ(run("roc --config small.toml --out a"), 0);
  ASSERT_EQ(run("roc --config small.toml --out b --workers 3"), 0);
  EXPECT_EQ(first_line(dir_ / "a/roc.csv"),
            "gamma_bar,target_pfa,pfa,pfa_se,pd,pd_se,pc,pc_se,pfa_ub,pd_ub,pd_lb,pc_lb_frechet_mean,"
            "pc_lb_bessel_mean");
  EXPECT_EQ(first_line(dir_ / "a/bounds.csv"),
            "scenario_id,regime,gamma_bar,pfa_upper,pd_upper,pd_lower,"
            "pc_lower_frechet_1,pc_lower_frechet_2,pc_lower_frechet_3,"
            "pc_lower_bessel_1,pc_lower_bessel_2,pc_lower_bessel_3,"
            "pc_lower_bessel_p05_1,pc_lower_bessel_p05_2,pc_lower_bessel_p05_3,"
            "pc_lower_bessel_p95_1,pc_lower_bessel_p95_2,pc_lower_bessel_p95_3");
  EXPECT_EQ(slurp(dir_ / "a/roc.csv"), slurp(dir_ / "b/roc.csv"));
  EXPECT_EQ(slurp(dir_ / "a/bounds.csv"), slurp(dir_ / "b/bounds.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "a/roc.svg"));
  const auto text = slurp(dir_ / "a/roc.csv");
  EXPECT_EQ(text.find('\r'), std::string::npos);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST_F(Cli, SeedOverrideChangesOutput) {
  write("small.toml", kSmall);
  ASSERT_EQ(run("calibrate --config small.toml --out a"), 0);
  ASSERT_EQ(run("calibrate --config small.toml --out b"), 0);
  EXPECT_EQ(slurp(dir_ / "a/calibration.csv"), slurp(dir_ / "b/calibration.csv"));
  setenv("UOS_SEED", "99", 1);
  ASSERT_EQ(run("calibrate --config small.toml --out c"), 0);
  unsetenv("UOS_SEED");
  EXPECT_NE(slurp(dir_ / "a/calibration.csv"), slurp(dir_ / "c/calibration.csv"));
}

TEST_F(Cli, AngleSweepHeader) {
  write("small.toml", kSmall);
  ASSERT_EQ(run("angle-sweep --config small.toml --out o --no-plots"), 0);
  EXPECT_EQ(first_line(dir_ / "o/angle_sweep.csv"),
            "gamma_bar,target_pfa,pfa,pfa_se,pd,pd_se,pc,pc_se,pfa_ub,pd_ub,pd_lb,pc_lb_frechet_mean,"
            "pc_lb_bessel_mean,requested_angle_1,requested_angle_2,whitened_angle_min,whitened_angle_sum,"
            "pc_class_1,pc_class_1_se,pc_class_2,pc_class_2_se,pc_class_3,pc_class_3_se,near_duplicate");
  EXPECT_FALSE(fs::exists(dir_ / "o/angle_sweep.svg"));
}

TEST_F(Cli, LearnBasesRecoversSubspaces) {
  Rng rng = make_rng(21);
  const Matrix b0 = orthonormalize(standard_normal<double>(6, 2, rng)).basis();
  const Matrix b1 = orthonormalize(standard_normal<double>(6, 2, rng)).basis();
  Matrix data(6, 40), labels(1, 40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    const bool second = i % 2 == 1;
    data.col(i) = (second ? b1 : b0) * standard_normal<double>(2, 1, rng);
    labels(0, i) = second ? 7 : 3;
  }
  write_matrix_csv(dir_ / "data.csv", data);
  write_matrix_csv(dir_ / "labels.csv", labels);
  ASSERT_EQ(run("learn-bases --data data.csv --labels labels.csv --dim 2 --out learned"), 0);
  const Matrix l0 = read_matrix_csv(dir_ / "learned/basis_3.csv");
  const Matrix l1 = read_matrix_csv(dir_ / "learned/basis_7.csv");
  EXPECT_LT((l0 * l0.transpose() - b0 * b0.transpose()).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((l1 * l1.transpose() - b1 * b1.transpose()).cwiseAbs().maxCoeff(), 1e-6);

  // one class with a single sample cannot give a 2-d basis
  labels(0, 0) = 9;
  write_matrix_csv(dir_ / "labels.csv", labels);
  EXPECT_EQ(run("learn-bases --data data.csv --labels labels.csv --dim 2 --out learned"), 3);

  write("empty.csv", "");
  EXPECT_EQ(run("learn-bases --data data.csv --labels empty.csv --dim 2"), 2);
}

TEST_F(Cli, DetectBatch) {
  Rng rng = make_rng(22);
  const Matrix b0 = orthonormalize(standard_normal<double>(4, 2, rng)).basis();
  const Matrix b1 = orthonormalize(standard_normal<double>(4, 2, rng)).basis();
  write_matrix_csv(dir_ / "b0.csv", b0);
  write_matrix_csv(dir_ / "b1.csv", b1);
  constexpr Eigen::Index kN = 400;
  Matrix signal(4, kN);
  for (Eigen::Index i = 0; i < kN; ++i) {
    const Vector theta = 1000.0 * standard_normal<double>(2, 1, rng).normalized();
    signal.col(i) = (i % 2 ? b1 : b0) * theta + standard_normal<double>(4, 1, rng);
  }
  write_matrix_csv(dir_ / "signal.csv", signal);
  // gamma_bar = -ln(0.05 / 2) bounds P_FA by the union bound at 0.05
  const double gamma = -std::log(0.05 / 2.0);
  ASSERT_EQ(run("detect-batch --bases b0.csv b1.csv --data signal.csv --sigma2 1 --gamma-bar " +
                format_number(gamma, 17) + " --out s"),
            0);
  const Matrix dec = [&] {
    // decisions.csv has a header; parse by hand
    std::ifstream in(dir_ / "s/decisions.csv");
    std::string line;
    std::getline(in, line);
    Matrix out(kN, 2);
    Eigen::Index r = 0;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string idx, khat, stat, det;
      std::getline(ss, idx, ',');
      std::getline(ss, khat, ',');
      std::getline(ss, stat, ',');
      std::getline(ss, det, ',');
      out(r, 0) = std::stod(khat);
      out(r, 1) = std::stod(det);
      ++r;
    }
    return out;
  }();
  int correct = 0;
  for (Eigen::Index i = 0; i < kN; ++i) correct += dec(i, 1) == 1 && dec(i, 0) == static_cast<double>(i % 2);
  EXPECT_GE(correct, static_cast<int>(0.99 * kN));

  const Matrix noise = standard_normal<double>(4, 2000, rng);
  write_matrix_csv(dir_ / "noise.csv", noise);
  std::string out;
  ASSERT_EQ(run("detect-batch --bases b0.csv b1.csv --data noise.csv --sigma2 1 --gamma-bar " +
                    format_number(gamma, 17) + " --out n",
                &out),
            0);
  const auto text = slurp(dir_ / "n/decisions.csv");
  std::size_t detected = 0;
  std::stringstream ss(text);
  std::string line;
  std::getline(ss, line);
  while (std::getline(ss, line)) detected += line.back() == '1';
  const double frac = detected / 2000.0;
  EXPECT_LE(frac, 0.05 + 3 * std::sqrt(0.05 * 0.95 / 2000.0));
  EXPECT_NE(out.find("observations 2000"), std::string::npos);

  EXPECT_EQ(run("detect-batch --bases b0.csv b1.csv --data noise.csv --regime unknown-stats --gamma-bar 0.5"), 2);
}
