#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tsmor/errors.hpp"
#include "tsmor/experiment.hpp"
#include "tsmor/interconnect.hpp"
#include "tsmor/oracle.hpp"

namespace tsmor {
namespace {

using testing::random_pair;
using testing::random_stable;
using testing::sys1;
using testing::sys2;
using testing::sys2_pair;

GeneratorPair scalar_pair() {
  GeneratorPair g;
  g.nu = 1;
  g.S = g.Q = Eigen::MatrixXd::Zero(1, 1);
  g.L = g.R = Eigen::MatrixXd::Ones(1, 1);
  g.omega0 = Eigen::VectorXd::Ones(1);
  return g;
}

TEST(SampleCountTest, Basics) {
  EXPECT_EQ(sample_count(0.1, 40.0), 401);
  EXPECT_EQ(sample_count(0.1, 25.0), 251);
  EXPECT_EQ(sample_count(1.0, 0.5), 1);
  EXPECT_THROW(sample_count(0.0, 1.0), InputError);
  EXPECT_THROW(sample_count(0.1, -1.0), InputError);
  EXPECT_THROW(simulate_direct(sys1(), scalar_pair(), Eigen::VectorXd::Ones(1), -0.1, 1.0),
               InputError);
  EXPECT_THROW(simulate_swapped_impulse(sys1(), scalar_pair(), 0.1, 0.0), InputError);
  EXPECT_THROW(simulate_two_sided(sys1(), scalar_pair(), Eigen::VectorXd::Ones(1), 0.0, 1.0),
               InputError);
}

TEST(SimulateDirectTest, Sys1StepResponse) {
  const auto tr = simulate_direct(sys1(), scalar_pair(), Eigen::VectorXd::Ones(1), 0.1, 20.0);
  ASSERT_EQ(tr.samples(), 201);
  for (Eigen::Index k = 0; k < tr.samples(); ++k) {
    EXPECT_NEAR(tr.y(k), 1.0 - std::exp(-tr.t[k]), 1e-10);
    EXPECT_NEAR(tr.t[k], 0.1 * k, 1e-15);
  }
  EXPECT_EQ(tr.varpi.rows(), 0);
}

TEST(SimulateDirectTest, ZeroInitialGeneratorIsZero) {
  std::mt19937_64 rng(61);
  const auto m = random_stable(rng, 5);
  const auto g = random_pair(rng, 4);
  const auto tr = simulate_direct(m, g, Eigen::VectorXd::Zero(4), 0.1, 10.0);
  EXPECT_EQ(tr.omega.norm(), 0.0);
  EXPECT_EQ(tr.x.norm(), 0.0);
  EXPECT_EQ(tr.y.norm(), 0.0);
}

TEST(SimulateDirectTest, Sys2SteadyState) {
  const auto tr = simulate_direct(sys2(), sys2_pair(), Eigen::VectorXd::Ones(2), 0.1, 50.0);
  Eigen::RowVector2d cpi(0.1, -0.3);
  for (Eigen::Index k = 300; k < tr.samples(); ++k) {
    EXPECT_LE(std::abs(tr.y(k) - cpi.dot(tr.omega.col(k))), 1e-6);
  }
}

TEST(SimulateDirectTest, InvariantManifoldDecay) {
  std::mt19937_64 rng(67);
  for (int trial = 0; trial < 5; ++trial) {
    const auto m = random_stable(rng, 6, 0.4 + 0.2 * trial);
    const auto g = random_pair(rng, 4);
    const auto Pi = solve_sylvester_pi(m, g);
    const auto tr = simulate_direct(m, g, g.omega0, 0.1, 30.0);
    // Least-squares slope of log ||x - Pi w|| over the tail.
    std::vector<double> ts, ls;
    for (Eigen::Index k = 50; k < tr.samples(); ++k) {
      const double r = (tr.x.col(k) - Pi * tr.omega.col(k)).norm();
      if (r < 1e-13) break;
      ts.push_back(tr.t[k]);
      ls.push_back(std::log(r));
    }
    ASSERT_GT(ts.size(), 20u);
    const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / ts.size();
    const double lm = std::accumulate(ls.begin(), ls.end(), 0.0) / ls.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      num += (ts[i] - tm) * (ls[i] - lm);
      den += (ts[i] - tm) * (ts[i] - tm);
    }
    EXPECT_LE(num / den, max_real_part(m.A()) + 0.15);
  }
}

TEST(SimulateDirectTest, HalvingDtAgreesAtCommonTimes) {
  std::mt19937_64 rng(71);
  const auto m = random_stable(rng, 6);
  const auto g = random_pair(rng, 4);
  const auto a = simulate_two_sided(m, g, g.omega0, 0.1, 20.0);
  const auto b = simulate_two_sided(m, g, g.omega0, 0.05, 20.0);
  for (Eigen::Index k = 0; k < a.samples(); ++k) {
    EXPECT_LE((a.x.col(k) - b.x.col(2 * k)).norm(), 1e-10 * (1 + a.x.col(k).norm()));
    EXPECT_LE((a.varpi.col(k) - b.varpi.col(2 * k)).norm(), 1e-10 * (1 + a.varpi.col(k).norm()));
    EXPECT_LE((a.omega.col(k) - b.omega.col(2 * k)).norm(), 1e-10 * (1 + a.omega.col(k).norm()));
  }
}

TEST(SimulateSwappedTest, Sys1Integrator) {
  const auto tr = simulate_swapped_impulse(sys1(), scalar_pair(), 0.1, 20.0);
  EXPECT_EQ(tr.varpi(0, 0), 0.0);
  EXPECT_EQ(tr.x(0, 0), 1.0);
  for (Eigen::Index k = 0; k < tr.samples(); ++k) {
    EXPECT_NEAR(tr.varpi(0, k), 1.0 - std::exp(-tr.t[k]), 1e-10);
  }
  EXPECT_EQ(tr.omega.rows(), 0);
}

TEST(SimulateSwappedTest, ZeroInputMatrixGivesZero) {
  StateSpaceModel m(sys2().A(), Eigen::MatrixXd::Zero(2, 1), sys2().C());
  const auto tr = simulate_swapped_impulse(m, sys2_pair(), 0.1, 10.0);
  EXPECT_EQ(tr.x.norm(), 0.0);
  EXPECT_EQ(tr.varpi.norm(), 0.0);
}

TEST(SimulateSwappedTest, Sys2TransientFormula) {
  const auto mm = exact_moment_matrices(sys2(), sys2_pair());
  const auto g = sys2_pair();
  const auto tr = simulate_swapped_impulse(sys2(), g, 0.1, 25.0);
  for (Eigen::Index k = 0; k < tr.samples(); ++k) {
    const double t = tr.t[k];
    const Eigen::MatrixXd back = matrix_exponential(g.Q, -t);
    const Eigen::VectorXd est = back * tr.varpi.col(k);
    const Eigen::VectorXd eps = back * mm.Upsilon * matrix_exponential(sys2().A(), t) * sys2().B();
    EXPECT_LE((mm.UB - est - eps).norm(), 1e-9);
  }
}

TEST(SimulateTwoSidedTest, Sys2ConvergesToManifold) {
  const auto g = sys2_pair();
  const auto mm = exact_moment_matrices(sys2(), g);
  const auto tr = simulate_two_sided(sys2(), g, g.omega0, 0.1, 40.0);
  EXPECT_EQ(tr.varpi.col(0).norm(), 0.0);
  EXPECT_EQ(tr.x.col(0).norm(), 0.0);
  double at10 = 0, at30 = 0;
  const double scale = 10.0 * mm.Upsilon.norm() * (mm.Pi * g.omega0).norm();
  for (Eigen::Index k = 0; k < tr.samples(); ++k) {
    const double r = (mm.Upsilon * tr.x.col(k) - mm.UPi * tr.omega.col(k)).norm();
    EXPECT_LE(r, scale * std::exp(-tr.t[k]) + 1e-12);
    if (k == 100) at10 = r;
    if (k == 300) at30 = r;
  }
  EXPECT_LT(at30, 1e-6 * at10);
}

TEST(SimulateTwoSidedTest, ZeroInitialGeneratorIsZero) {
  const auto tr = simulate_two_sided(sys2(), sys2_pair(), Eigen::VectorXd::Zero(2), 0.1, 10.0);
  EXPECT_EQ(tr.x.norm(), 0.0);
  EXPECT_EQ(tr.varpi.norm(), 0.0);
}

TEST(SimulateTwoSidedTest, BuildingModelShape) {
  const auto m = load_model(TSMOR_BUILDING_DIR);
  ASSERT_EQ(m.n(), 48);
  const auto g = build_generator_pair(
      InterpolationSet::parse("2.3,19.89,11.77,6.73,17.13,17.8,28.77,40.4,33.43,45.2"),
      InterpolationSet::parse("0.01,5.22,10.3,13.5,22.2,24.5,36,42.4,55.9,70"));
  const auto tr = simulate_two_sided(m, g, g.omega0, 0.1, 40.0);
  EXPECT_EQ(tr.samples(), 401);
  EXPECT_TRUE(tr.x.allFinite());
  EXPECT_TRUE(tr.varpi.allFinite());
  EXPECT_TRUE(tr.omega.allFinite());
  EXPECT_TRUE(tr.y.allFinite());
}

TEST(NoiseTest, SeedDeterminism) {
  const auto g = sys2_pair();
  const NoiseSpec n{20.0, 20.0, 1234};
  const auto a = simulate_two_sided(sys2(), g, g.omega0, 0.1, 20.0, n);
  const auto b = simulate_two_sided(sys2(), g, g.omega0, 0.1, 20.0, n);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.varpi, b.varpi);
  EXPECT_EQ(a.y, b.y);
  const auto c = simulate_two_sided(sys2(), g, g.omega0, 0.1, 20.0, NoiseSpec{20.0, 20.0, 1235});
  EXPECT_NE(a.x, c.x);
}

TEST(NoiseTest, InputNoiseHasCalibratedPower) {
  // With only v noise the deviation from the clean run is the plant's response
  // to ZOH white noise, sigma_v^2 = P(L w) / 10^(snr / 10). Recover sigma_v by
  // regressing the deviation on the known ZOH input gain.
  const auto g = sys2_pair();
  const auto clean = simulate_two_sided(sys2(), g, g.omega0, 0.1, 200.0);
  const auto noisy = simulate_two_sided(sys2(), g, g.omega0, 0.1, 200.0, NoiseSpec{10.0, {}, 5});
  const auto zoh = zoh_discretize(sys2().A(), sys2().B(), 0.1);
  double pow_lw = 0, acc = 0;
  const Eigen::Index K = clean.samples();
  for (Eigen::Index k = 0; k < K; ++k) pow_lw += std::pow((g.L * clean.omega.col(k))(0), 2);
  pow_lw /= K;
  for (Eigen::Index k = 1; k < K; ++k) {
    const Eigen::VectorXd e0 = noisy.x.col(k - 1) - clean.x.col(k - 1);
    const Eigen::VectorXd e1 = noisy.x.col(k) - clean.x.col(k);
    const Eigen::VectorXd r = e1 - zoh.Phi * e0;  // = Gamma v_k
    acc += std::pow(r.dot(zoh.Gamma.col(0)) / zoh.Gamma.col(0).squaredNorm(), 2);
  }
  const double sigma2 = acc / (K - 1);
  EXPECT_NEAR(sigma2 / (pow_lw / 10.0), 1.0, 0.1);
  EXPECT_LE((noisy.omega - clean.omega).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(NoiseTest, RejectsNonFiniteSnr) {
  const auto g = sys2_pair();
  EXPECT_THROW(simulate_two_sided(sys2(), g, g.omega0, 0.1, 1.0,
                                  NoiseSpec{std::numeric_limits<double>::infinity(), {}, 0}),
               InputError);
}

TEST(DDynamicsTest, ZeroGainIsZero) {
  const auto g = sys2_pair();
  const auto tr = simulate_two_sided(sys2(), g, g.omega0, 0.1, 10.0);
  EXPECT_EQ(simulate_d_dynamics(g, Eigen::MatrixXd::Zero(2, 1), tr.omega, 0.1).norm(), 0.0);
}

TEST(DDynamicsTest, ExactGainReproducesD) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 6; ++trial) {
    const auto m = trial == 0 ? sys2() : random_stable(rng, 3 + trial);
    const auto g = trial == 0 ? sys2_pair() : random_pair(rng, 2 + 2 * (trial % 2));
    const auto mm = exact_moment_matrices(m, g);
    auto tr = simulate_two_sided(m, g, g.omega0, 0.1, 30.0);
    attach_exact_d(tr, mm.Upsilon);
    const Eigen::MatrixXd dh = simulate_d_dynamics(g, mm.UB, tr.omega, 0.1);
    EXPECT_LE((dh - tr.d).cwiseAbs().maxCoeff(), 1e-9) << trial;
  }
}

TEST(DDynamicsTest, PerturbedGainStaysBounded) {
  const auto g = sys2_pair();
  const auto mm = exact_moment_matrices(sys2(), g);
  auto tr = simulate_two_sided(sys2(), g, g.omega0, 0.1, 200.0);
  attach_exact_d(tr, mm.Upsilon);
  Eigen::MatrixXd ub = mm.UB;
  ub(0, 0) += 0.01;
  const Eigen::MatrixXd dh = simulate_d_dynamics(g, ub, tr.omega, 0.1);
  const Eigen::MatrixXd e = (tr.d - dh).cwiseAbs();
  const Eigen::Index half = tr.samples() / 2;
  const double first = e.leftCols(half).maxCoeff();
  const double second = e.rightCols(tr.samples() - half).maxCoeff();
  EXPECT_TRUE(std::isfinite(second));
  EXPECT_LE(second, 1.05 * first);
  EXPECT_GT(first, 0.0);
}

TEST(DDynamicsTest, SurrogateStepsMatchBatch) {
  const auto g = sys2_pair();
  const auto tr = simulate_two_sided(sys2(), g, g.omega0, 0.1, 5.0);
  Eigen::MatrixXd ub(2, 1);
  ub << 0.3, -0.2;
  SurrogateSystem s(g, ub, 0.1);
  const Eigen::MatrixXd batch = simulate_d_dynamics(g, ub, tr.omega, 0.1);
  for (Eigen::Index k = 0; k < tr.samples(); ++k) {
    EXPECT_EQ(s.state(), batch.col(k));
    s.advance(tr.omega.col(k));
  }
  s.reset();
  EXPECT_EQ(s.state().norm(), 0.0);
  EXPECT_THROW(SurrogateSystem(g, Eigen::MatrixXd::Zero(3, 1), 0.1), StructuralError);
}

TEST(TrajectoryCsvTest, HeaderAndRows) {
  const auto g = sys2_pair();
  auto tr = simulate_two_sided(sys2(), g, g.omega0, 0.5, 1.0);
  std::ostringstream out;
  write_trajectory_csv(out, tr);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "t,omega_1,omega_2,x_1,x_2,varpi_1,varpi_2,y");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  attach_exact_d(tr, exact_moment_matrices(sys2(), g).Upsilon);
  std::ostringstream out2;
  write_trajectory_csv(out2, tr);
  EXPECT_EQ(out2.str().substr(0, out2.str().find('\n')),
            "t,omega_1,omega_2,x_1,x_2,varpi_1,varpi_2,y,d_1,d_2");
}

}  // namespace
}  // namespace tsmor
