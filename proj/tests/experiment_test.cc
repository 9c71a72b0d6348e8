#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tsmor/convert.hpp"
#include "tsmor/errors.hpp"
#include "tsmor/experiment.hpp"
#include "tsmor/matrix_io.hpp"

namespace tsmor {
namespace {

namespace fs = std::filesystem;

const fs::path kData = TSMOR_TEST_DATA;
const fs::path kBuilding = TSMOR_BUILDING_DIR;

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("tsmor_experiment_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig sys2_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.model_path = kData / "sys2";
  cfg.set_S = InterpolationSet({1.0});
  cfg.set_Q = InterpolationSet({2.0});
  cfg.output_dir = out;
  return cfg;
}

TEST(LoadModelTest, DirectoryAndSingleFile) {
  const auto m = load_model(kData / "sys2");
  EXPECT_EQ(m.A(), testing::sys2().A());
  EXPECT_EQ(m.B(), testing::sys2().B());
  EXPECT_EQ(m.C(), testing::sys2().C());
  const auto dir = scratch("single");
  std::ofstream(dir / "model.txt") << "2 2\n0 1\n-2 -3\n2 1\n0\n1\n1 2\n1 0\n";
  const auto s = load_model(dir / "model.txt");
  EXPECT_EQ(s.A(), m.A());
  EXPECT_EQ(s.C(), m.C());
  std::ofstream(dir / "trailing.txt") << "1 1\n-1\n1 1\n1\n1 1\n1\n1 1\n5\n";
  EXPECT_THROW(load_model(dir / "trailing.txt"), InputError);
  std::ofstream(dir / "shape.txt") << "1 1\n-1\n2 1\n1\n1\n1 1\n1\n";
  EXPECT_THROW(load_model(dir / "shape.txt"), StructuralError);
}

TEST(LoadModelTest, MissingPathNamed) {
  try {
    load_model(kData / "nope");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
}

TEST(ConfigTest, ParseAndOverride) {
  std::istringstream in(
      "# comment\nmodel = m\nset-s = 1, 2\nset_q=3,4\n\ndt = 0.05  # inline\n"
      "duration-swapped = 10\nDuration-TwoSided = 20\neta-ub = 1e-6\nseed = 7\n"
      "snr-z-db = 20\ninverse-mode = via_upi_inverse\nfull-trace = false\n");
  auto cfg = parse_config(in);
  EXPECT_EQ(cfg.model_path, "m");
  EXPECT_EQ(cfg.set_S.frequencies(), (std::vector<double>{1, 2}));
  EXPECT_EQ(cfg.set_Q.frequencies(), (std::vector<double>{3, 4}));
  EXPECT_EQ(cfg.dt, 0.05);
  EXPECT_EQ(cfg.duration_swapped, 10);
  EXPECT_EQ(cfg.duration_twosided, 20);
  EXPECT_EQ(cfg.tolerances.eta_ub, 1e-6);
  ASSERT_TRUE(cfg.noise);
  EXPECT_EQ(cfg.noise->seed, 7u);
  EXPECT_EQ(cfg.noise->snr_z_db, 20.0);
  EXPECT_FALSE(cfg.noise->snr_v_db);
  EXPECT_EQ(cfg.inverse_mode, InverseMode::via_upi_inverse);
  EXPECT_FALSE(cfg.full_trace);
  EXPECT_NO_THROW(cfg.validate());
  apply_setting(cfg, "dt", "0.2");
  EXPECT_EQ(cfg.dt, 0.2);
}

TEST(ConfigTest, RoundTrip) {
  std::istringstream in("model = m\nset-s = 1\nset-q = 2\neta-cpi = 1e-9\nbode-points = 30\n");
  const auto cfg = parse_config(in);
  std::ostringstream out;
  write_config(out, cfg);
  std::istringstream again(out.str());
  const auto back = parse_config(again);
  std::ostringstream out2;
  write_config(out2, back);
  EXPECT_EQ(out.str(), out2.str());
  EXPECT_EQ(back.tolerances.eta_cpi, 1e-9);
  EXPECT_EQ(back.bode_points, 30);
}

TEST(ConfigTest, Errors) {
  auto bad = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "cfg");
  };
  try {
    bad("model = m\nwat = 3\n");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("cfg:2:", 0), 0u) << e.what();
  }
  EXPECT_THROW(bad("dt = abc\n"), InputError);
  EXPECT_THROW(bad("dt 3\n"), InputError);
  EXPECT_THROW(bad("full-trace = maybe\n"), InputError);
  EXPECT_THROW(bad("inverse-mode = both\n"), InputError);
  EXPECT_THROW(bad("set-s = 1, -2\n"), InputError);
  ExperimentConfig cfg = sys2_config("x");
  cfg.dt = 0;
  EXPECT_THROW(cfg.validate(), InputError);
  cfg = sys2_config("x");
  cfg.set_Q = {};
  EXPECT_THROW(cfg.validate(), InputError);
  EXPECT_THROW(load_config_file(kData / "missing.cfg"), InputError);
}

TEST(ConfigTest, ModelPathRelativeToConfig) {
  const auto cfg = load_config_file(kBuilding / "experiment.cfg");
  EXPECT_EQ(fs::weakly_canonical(cfg.model_path), fs::weakly_canonical(kBuilding));
  EXPECT_EQ(cfg.set_S.order(), 20);
  EXPECT_EQ(cfg.set_Q.order(), 20);
}

TEST(ConvertTest, MatFileMatchesText) {
  const auto dir = scratch("mat");
  const auto written = convert_to_dense_text(kBuilding / "build.mat", dir);
  ASSERT_EQ(written.size(), 3u);
  for (const char* name : {"A", "B", "C"}) {
    ASSERT_TRUE(written.count(name));
    EXPECT_EQ(read_matrix_file(written.at(name)),
              read_matrix_file(kBuilding / (std::string(name) + ".txt")));
  }
  const auto vars = read_mat_file(kBuilding / "build.mat");
  EXPECT_EQ(vars.at("A").rows(), 48);
  EXPECT_EQ(vars.at("C").rows(), 1);
}

TEST(ConvertTest, MatrixMarketLayouts) {
  const auto dir = scratch("mtx");
  std::ofstream(dir / "coo.mtx") << "%%MatrixMarket matrix coordinate real general\n% c\n"
                                    "2 3 3\n1 1 1.5\n2 3 -2\n1 2 4e-1\n";
  Eigen::MatrixXd expect(2, 3);
  expect << 1.5, 0.4, 0, 0, 0, -2;
  EXPECT_EQ(read_matrix_market(dir / "coo.mtx"), expect);
  std::ofstream(dir / "sym.mtx") << "%%MatrixMarket matrix coordinate real symmetric\n"
                                    "2 2 2\n1 1 1\n2 1 3\n";
  Eigen::MatrixXd sym(2, 2);
  sym << 1, 3, 3, 0;
  EXPECT_EQ(read_matrix_market(dir / "sym.mtx"), sym);
  std::ofstream(dir / "arr.mtx") << "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
  Eigen::MatrixXd arr(2, 2);
  arr << 1, 3, 2, 4;
  EXPECT_EQ(read_matrix_market(dir / "arr.mtx"), arr);
  const auto written = convert_to_dense_text(dir / "coo.mtx", dir / "out");
  EXPECT_EQ(read_matrix_file(written.at("coo")), expect);
  std::ofstream(dir / "bad.mtx") << "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n";
  EXPECT_THROW(read_matrix_market(dir / "bad.mtx"), InputError);
  std::ofstream(dir / "cplx.mtx") << "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 1\n";
  EXPECT_THROW(read_matrix_market(dir / "cplx.mtx"), InputError);
  std::ofstream(dir / "x.csv") << "1\n";
  EXPECT_THROW(convert_to_dense_text(dir / "x.csv", dir), InputError);
  std::ofstream(dir / "junk.mat") << "not a mat file";
  EXPECT_THROW(read_mat_file(dir / "junk.mat"), InputError);
}

TEST(RunExperimentTest, Sys2EndToEnd) {
  const auto dir = scratch("sys2");
  auto cfg = sys2_config(dir);
  cfg.duration_twosided = 60;
  cfg.write_trajectories = true;
  const auto m = load_model(cfg.model_path);
  const auto out = run_experiment(cfg, m);
  EXPECT_EQ(out.status, kExitConverged);
  ASSERT_TRUE(out.rom);
  ASSERT_TRUE(out.report);
  EXPECT_LE(out.report->max_rel_error_interpolation(), 1e-6);
  EXPECT_LE(out.eps_ub_final, 1e-6);
  EXPECT_EQ(out.rom->provenance.source, "data");
  EXPECT_EQ(out.rom->provenance.t_i, 25.0);
  EXPECT_EQ(out.eps_ub.size(), static_cast<std::size_t>(out.swapped.samples()));
  write_experiment_outputs(cfg, out);
  for (const char* f : {"ub_trace.csv", "cpi_trace.csv", "upi_trace.csv", "error_curves.csv",
                        "ub_error.csv", "rom_F.txt", "rom_G.txt", "rom_H.txt",
                        "rom_provenance.txt", "moment_match.csv", "bode.csv", "summary.txt",
                        "swapped.csv", "two_sided.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto summary = slurp(dir / "summary.txt");
  EXPECT_NE(summary.find("status=0"), std::string::npos);
  EXPECT_NE(summary.find("nu=2"), std::string::npos);
}

TEST(RunExperimentTest, NonConvergenceReported) {
  auto cfg = sys2_config(scratch("short"));
  cfg.duration_twosided = 2.0;
  const auto out = run_experiment(cfg, load_model(cfg.model_path));
  EXPECT_EQ(out.status, kExitNotConverged);
  EXPECT_FALSE(out.estimates.converged);
}

TEST(RunExperimentTest, ViolatedAssumptionRejected) {
  auto cfg = sys2_config(scratch("bad"));
  const auto m = testing::sys1();
  cfg.set_S = InterpolationSet({1.0});
  cfg.set_Q = InterpolationSet({1.0});
  EXPECT_THROW(run_experiment(cfg, m), Error);
}

TEST(RunExperimentTest, Deterministic) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  for (const auto& dir : {a, b}) {
    auto cfg = sys2_config(dir);
    cfg.noise = NoiseSpec{10.0, 20.0, 42};
    write_experiment_outputs(cfg, run_experiment(cfg, load_model(cfg.model_path)));
  }
  for (const auto& e : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path().filename();
  }
}

TEST(OracleTest, BuildingWithinBudget) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config_file(kBuilding / "experiment.cfg");
  const auto m = load_model(cfg.model_path);
  const auto o = run_oracle(m, build_generator_pair(cfg.set_S, cfg.set_Q));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
  EXPECT_TRUE(o.assumptions.all_passed());
  EXPECT_EQ(o.moments.Pi.rows(), 48);
  EXPECT_EQ(o.moments.Pi.cols(), 20);
  const auto dir = scratch("oracle");
  write_oracle_outputs(dir, o);
  for (const char* f : {"Pi.txt", "Upsilon.txt", "CPi.txt", "UB.txt", "UPi.txt", "UPi_inv.txt",
                        "assumptions.txt", "oracle_rom_F.txt"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  EXPECT_EQ(read_matrix_file(dir / "UPi.txt"), o.moments.UPi);
}

}  // namespace
}  // namespace tsmor
