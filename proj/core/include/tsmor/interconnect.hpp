#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tsmor/generators.hpp"
#include "tsmor/lti.hpp"

namespace tsmor {

// Uniformly sampled signals of one interconnection run. Channels that a
// run does not produce have zero rows; all others have K columns.
struct Trajectory {
  double dt = 0.0;
  std::vector<double> t;
  Eigen::MatrixXd omega;  // nu x K
  Eigen::MatrixXd x;      // n x K
  Eigen::MatrixXd varpi;  // nu x K
  Eigen::RowVectorXd y;   // 1 x K
  Eigen::MatrixXd d;      // nu x K, only when Upsilon is known (testing)
  Eigen::MatrixXd dhat;   // nu x K, surrogate runs

  Eigen::Index samples() const { return static_cast<Eigen::Index>(t.size()); }
};

// Additive white Gaussian noise on the plant input (v) and on the plant
// output fed to the Q-generator (z). Each SNR is relative to the mean
// power of the corresponding noiseless signal (L omega, resp. C x).
struct NoiseSpec {
  std::optional<double> snr_v_db;
  std::optional<double> snr_z_db;
  std::uint64_t seed = 0;
};

// Number of samples for a run: t_k = k dt, k = 0..floor(duration/dt).
Eigen::Index sample_count(double dt, double duration);

// Direct interconnection  w' = S w, x' = A x + B L w, y = C x;  x(0) = 0.
Trajectory simulate_direct(const StateSpaceModel& m, const GeneratorPair& g,
                           const Eigen::VectorXd& omega0, double dt, double duration);

// Swapped interconnection under u = delta_0 with varpi(0) = 0. The impulse
// is applied as the jump x(0+) = B. Only z noise applies (there is no
// generator input to disturb).
Trajectory simulate_swapped_impulse(const StateSpaceModel& m, const GeneratorPair& g, double dt,
                                    double duration,
                                    const std::optional<NoiseSpec>& noise = std::nullopt);

// Two-sided interconnection with x(0) = 0, varpi(0) = 0. Without noise the
// augmented system is propagated with one matrix exponential per step;
// with noise, per-step constant samples v_k, z_k enter through B and R
// (zero-order hold at the sampling rate).
Trajectory simulate_two_sided(const StateSpaceModel& m, const GeneratorPair& g,
                              const Eigen::VectorXd& omega0, double dt, double duration,
                              const std::optional<NoiseSpec>& noise = std::nullopt);

// d = varpi + Upsilon x, stored in traj.d.
void attach_exact_d(Trajectory& traj, const Eigen::MatrixXd& Upsilon);

// Online realization of  d' = Q d + UB L w,  d(0) = 0, driven by sampled
// omega. Between samples w evolves as e^{S t}, so each step is exact.
class SurrogateSystem {
 public:
  SurrogateSystem(const GeneratorPair& g, const Eigen::MatrixXd& UB, double dt);

  // Current d-hat sample; advance() moves it one step using omega at the
  // current sample.
  const Eigen::VectorXd& state() const { return d_; }
  void advance(const Eigen::VectorXd& omega_now);
  void reset() { d_.setZero(); }

 private:
  Eigen::MatrixXd phi_dd_;
  Eigen::MatrixXd phi_dw_;
  Eigen::VectorXd d_;
};

// d-dynamics over a whole omega record (nu x K samples at spacing dt).
Eigen::MatrixXd simulate_d_dynamics(const GeneratorPair& g, const Eigen::MatrixXd& UB,
                                    const Eigen::MatrixXd& omega, double dt);

// CSV: t,omega_*,x_*,varpi_*,y[,d_*][,dhat_*]; absent channels are omitted.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace tsmor
