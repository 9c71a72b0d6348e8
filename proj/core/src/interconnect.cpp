#include "tsmor/interconnect.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <string>

#include "tsmor/errors.hpp"
#include "tsmor/matrix_io.hpp"

namespace tsmor {

Eigen::Index sample_count(double dt, double duration) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw InputError("dt must be positive, got " + format_double(dt));
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw InputError("duration must be positive, got " + format_double(duration));
  }
  return static_cast<Eigen::Index>(std::floor(duration / dt + 1e-9)) + 1;
}

namespace {

void check_generator(const GeneratorPair& g) {
  const auto nu = g.nu;
  if (g.S.rows() != nu || g.S.cols() != nu || g.L.rows() != 1 || g.L.cols() != nu ||
      g.Q.rows() != nu || g.Q.cols() != nu || g.R.rows() != nu || g.R.cols() != 1) {
    throw StructuralError("generator pair dimensions inconsistent with nu = " +
                          std::to_string(nu));
  }
}

std::vector<double> sample_times(Eigen::Index K, double dt) {
  std::vector<double> t(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) t[static_cast<std::size_t>(k)] = static_cast<double>(k) * dt;
  return t;
}

// Propagates z_{k+1} = Phi z_k from z0 and returns all K samples as columns.
Eigen::MatrixXd propagate(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& z0, Eigen::Index K) {
  Eigen::MatrixXd Z(z0.size(), K);
  Z.col(0) = z0;
  for (Eigen::Index k = 1; k < K; ++k) Z.col(k).noalias() = Phi * Z.col(k - 1);
  return Z;
}

double mean_power(const Eigen::RowVectorXd& s) {
  return s.size() ? s.squaredNorm() / static_cast<double>(s.size()) : 0.0;
}

double noise_sigma(double power, std::optional<double> snr_db) {
  if (!snr_db) return 0.0;
  if (!std::isfinite(*snr_db)) throw InputError("SNR must be finite");
  return std::sqrt(power / std::pow(10.0, *snr_db / 10.0));
}

// Noisy propagation: z_{k+1} = Phi z_k + Gamma [v_k; z_k].
Eigen::MatrixXd propagate_noisy(const ZohPair& zoh, const Eigen::VectorXd& z0, Eigen::Index K,
                                double sigma_v, double sigma_z, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd Z(z0.size(), K);
  Z.col(0) = z0;
  Eigen::Vector2d w;
  for (Eigen::Index k = 1; k < K; ++k) {
    w(0) = sigma_v * normal(rng);
    w(1) = sigma_z * normal(rng);
    Z.col(k).noalias() = zoh.Phi * Z.col(k - 1) + zoh.Gamma * w;
  }
  return Z;
}

}  // namespace

Trajectory simulate_direct(const StateSpaceModel& m, const GeneratorPair& g,
                           const Eigen::VectorXd& omega0, double dt, double duration) {
  check_generator(g);
  const auto K = sample_count(dt, duration);
  const auto n = m.n();
  const auto nu = g.nu;
  if (omega0.size() != nu) throw StructuralError("omega0 must have nu entries");

  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(nu + n, nu + n);
  aug.topLeftCorner(nu, nu) = g.S;
  aug.bottomLeftCorner(n, nu) = m.B() * g.L;
  aug.bottomRightCorner(n, n) = m.A();
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(nu + n);
  z0.head(nu) = omega0;
  const Eigen::MatrixXd Z = propagate(exact_discretize(aug, dt), z0, K);

  Trajectory tr;
  tr.dt = dt;
  tr.t = sample_times(K, dt);
  tr.omega = Z.topRows(nu);
  tr.x = Z.bottomRows(n);
  tr.y = m.C() * tr.x;
  return tr;
}

Trajectory simulate_swapped_impulse(const StateSpaceModel& m, const GeneratorPair& g, double dt,
                                    double duration, const std::optional<NoiseSpec>& noise) {
  check_generator(g);
  const auto K = sample_count(dt, duration);
  const auto n = m.n();
  const auto nu = g.nu;

  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + nu, n + nu);
  aug.topLeftCorner(n, n) = m.A();
  aug.bottomLeftCorner(nu, n) = g.R * m.C();
  aug.bottomRightCorner(nu, nu) = g.Q;
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(n + nu);
  z0.head(n) = m.B().col(0);

  Eigen::MatrixXd Z;
  const bool noisy = noise && noise->snr_z_db;
  if (!noisy) {
    Z = propagate(exact_discretize(aug, dt), z0, K);
  } else {
    const Eigen::MatrixXd clean = propagate(exact_discretize(aug, dt), z0, K);
    const double sigma_z = noise_sigma(mean_power(m.C() * clean.topRows(n)), noise->snr_z_db);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(n + nu, 2);
    inputs.block(n, 1, nu, 1) = g.R;
    Z = propagate_noisy(zoh_discretize(aug, inputs, dt), z0, K, 0.0, sigma_z, noise->seed);
  }

  Trajectory tr;
  tr.dt = dt;
  tr.t = sample_times(K, dt);
  tr.x = Z.topRows(n);
  tr.varpi = Z.bottomRows(nu);
  tr.y = m.C() * tr.x;
  return tr;
}

Trajectory simulate_two_sided(const StateSpaceModel& m, const GeneratorPair& g,
                              const Eigen::VectorXd& omega0, double dt, double duration,
                              const std::optional<NoiseSpec>& noise) {
  check_generator(g);
  const auto K = sample_count(dt, duration);
  const auto n = m.n();
  const auto nu = g.nu;
  if (omega0.size() != nu) throw StructuralError("omega0 must have nu entries");

  const auto N = nu + n + nu;
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(N, N);
  aug.block(0, 0, nu, nu) = g.S;
  aug.block(nu, 0, n, nu) = m.B() * g.L;
  aug.block(nu, nu, n, n) = m.A();
  aug.block(nu + n, nu, nu, n) = g.R * m.C();
  aug.block(nu + n, nu + n, nu, nu) = g.Q;
  Eigen::VectorXd z0 = Eigen::VectorXd::Zero(N);
  z0.head(nu) = omega0;

  const Eigen::MatrixXd Phi = exact_discretize(aug, dt);
  Eigen::MatrixXd Z = propagate(Phi, z0, K);
  const bool noisy = noise && (noise->snr_v_db || noise->snr_z_db);
  if (noisy) {
    const double sigma_v = noise_sigma(mean_power(g.L * Z.topRows(nu)), noise->snr_v_db);
    const double sigma_z = noise_sigma(mean_power(m.C() * Z.middleRows(nu, n)), noise->snr_z_db);
    Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(N, 2);
    inputs.block(nu, 0, n, 1) = m.B();
    inputs.block(nu + n, 1, nu, 1) = g.R;
    Z = propagate_noisy(zoh_discretize(aug, inputs, dt), z0, K, sigma_v, sigma_z, noise->seed);
  }

  Trajectory tr;
  tr.dt = dt;
  tr.t = sample_times(K, dt);
  tr.omega = Z.topRows(nu);
  tr.x = Z.middleRows(nu, n);
  tr.varpi = Z.bottomRows(nu);
  tr.y = m.C() * tr.x;
  return tr;
}

void attach_exact_d(Trajectory& traj, const Eigen::MatrixXd& Upsilon) {
  if (Upsilon.rows() != traj.varpi.rows() || Upsilon.cols() != traj.x.rows()) {
    throw StructuralError("attach_exact_d: Upsilon dimensions do not match trajectory");
  }
  traj.d = traj.varpi + Upsilon * traj.x;
}

SurrogateSystem::SurrogateSystem(const GeneratorPair& g, const Eigen::MatrixXd& UB, double dt) {
  const auto nu = g.nu;
  if (UB.rows() != nu || UB.cols() != 1) {
    throw StructuralError("surrogate input UB must be nu x 1");
  }
  // State [w; d], dynamics [[S, 0], [UB L, Q]].
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(2 * nu, 2 * nu);
  aug.topLeftCorner(nu, nu) = g.S;
  aug.bottomLeftCorner(nu, nu) = UB * g.L;
  aug.bottomRightCorner(nu, nu) = g.Q;
  const Eigen::MatrixXd Phi = exact_discretize(aug, dt);
  phi_dw_ = Phi.bottomLeftCorner(nu, nu);
  phi_dd_ = Phi.bottomRightCorner(nu, nu);
  d_ = Eigen::VectorXd::Zero(nu);
}

void SurrogateSystem::advance(const Eigen::VectorXd& omega_now) {
  d_ = phi_dd_ * d_ + phi_dw_ * omega_now;
}

Eigen::MatrixXd simulate_d_dynamics(const GeneratorPair& g, const Eigen::MatrixXd& UB,
                                    const Eigen::MatrixXd& omega, double dt) {
  if (omega.rows() != g.nu) {
    throw StructuralError("simulate_d_dynamics: omega must have nu rows");
  }
  SurrogateSystem sys(g, UB, dt);
  const auto K = omega.cols();
  Eigen::MatrixXd D(g.nu, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    D.col(k) = sys.state();
    sys.advance(omega.col(k));
  }
  return D;
}

namespace {

void header_block(std::ostream& out, const char* name, Eigen::Index count) {
  for (Eigen::Index i = 0; i < count; ++i) out << ',' << name << '_' << (i + 1);
}

void row_block(std::ostream& out, const Eigen::MatrixXd& M, Eigen::Index k) {
  for (Eigen::Index i = 0; i < M.rows(); ++i) out << ',' << format_double(M(i, k));
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << 't';
  header_block(out, "omega", traj.omega.rows());
  header_block(out, "x", traj.x.rows());
  header_block(out, "varpi", traj.varpi.rows());
  out << ",y";
  header_block(out, "d", traj.d.rows());
  header_block(out, "dhat", traj.dhat.rows());
  out << '\n';
  for (Eigen::Index k = 0; k < traj.samples(); ++k) {
    out << format_double(traj.t[static_cast<std::size_t>(k)]);
    row_block(out, traj.omega, k);
    row_block(out, traj.x, k);
    row_block(out, traj.varpi, k);
    out << ',' << format_double(traj.y(k));
    row_block(out, traj.d, k);
    row_block(out, traj.dhat, k);
    out << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_trajectory_csv(out, traj);
}

}  // namespace tsmor
