#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsmor/generators.hpp"
#include "tsmor/interconnect.hpp"

namespace tsmor {

// Stopping tolerances, in estimate change per second of experiment time.
struct Tolerances {
  double eta_cpi = 1e-7;
  double eta_upi = 1e-7;
  double eta_ub = 1e-7;
  double rank_tol = kDefaultRankTol;

  // Throws InputError unless every field is positive (infinity allowed for eta).
  void validate() const;
};

// One windowed least-squares solve.
struct LsEstimate {
  bool rank_ok = false;
  Eigen::Index rank = 0;
  Eigen::Index window = 0;
  Eigen::MatrixXd value;  // empty unless rank_ok
  double residual = 0.0;  // Frobenius norm of the fit residual
};

// Regression on a full-column-rank regressor with a shared SVD:
// minimizes ||regressor * X - response||_F. Returns rank_ok = false when
// the numerical rank is below regressor.cols().
LsEstimate solve_windowed_ls(const Eigen::MatrixXd& regressor, const Eigen::MatrixXd& response,
                             double rank_tol);

// How the Kronecker-structured regressions are solved. `structured` uses
// O_k = (R_k (x) I) up to row order, i.e. nu independent problems sharing
// R_k; `kronecker` assembles O_k (or M_k) explicitly.
enum class LsMethod { structured, kronecker };

// Which d-signal feeds the Upsilon Pi regressions.
enum class DChannel { exact, surrogate };

// R_k = [omega(t_{k-w+1}) ... omega(t_k)]^T, a w x nu matrix.
Eigen::MatrixXd snapshot_rows(const Eigen::MatrixXd& samples, Eigen::Index k, Eigen::Index w);
// Row block i is rows.row(i) (x) I_nu, giving a (p nu) x nu^2 matrix.
Eigen::MatrixXd kron_regressor(const Eigen::MatrixXd& rows, Eigen::Index nu);
// Stacks the columns k-p+1..k of a nu x K record into one (p nu) vector.
Eigen::VectorXd stack_samples(const Eigen::MatrixXd& samples, Eigen::Index k, Eigen::Index p);

// C Pi from the most recent w samples of omega and y.
// Throws InputError when k - w + 1 < 0 or k is past the end.
LsEstimate estimate_cpi(const Trajectory& traj, Eigen::Index k, Eigen::Index w,
                        double rank_tol = kDefaultRankTol);

// Upsilon Pi from omega and d - varpi (or dhat - varpi).
LsEstimate estimate_upi(const Trajectory& traj, Eigen::Index k, Eigen::Index p, DChannel channel,
                        double rank_tol = kDefaultRankTol, LsMethod method = LsMethod::structured);

// (Upsilon Pi)^{-1} with the roles of omega and d - varpi swapped.
LsEstimate estimate_upi_inverse(const Trajectory& traj, Eigen::Index k, Eigen::Index p,
                                DChannel channel, double rank_tol = kDefaultRankTol,
                                LsMethod method = LsMethod::structured);

// e^{-Q t_i} varpi(t_i) from a swapped-impulse run.
Eigen::MatrixXd estimate_upsilon_b(const Trajectory& swapped, const GeneratorPair& g,
                                   Eigen::Index i);
// Time-indexed variant; throws InputError when t is not a sample time.
Eigen::MatrixXd estimate_upsilon_b_at(const Trajectory& swapped, const GeneratorPair& g, double t);

// Time series of estimates, one row per processed sample.
struct EstimateTrace {
  std::vector<double> times;
  std::vector<std::optional<Eigen::MatrixXd>> values;
  std::vector<double> residuals;
  std::vector<bool> rank_ok;
  std::vector<Eigen::Index> windows;

  void push(double t, const LsEstimate& e);
  void push(double t, const Eigen::MatrixXd& value, double residual = 0.0);
  std::size_t size() const { return times.size(); }
  // Last entry with a value, if any.
  std::optional<std::size_t> last_valid() const;
};

// CSV: t_k,entry_11,entry_12,...,residual,rank_ok (entries row-major).
void write_trace_csv(std::ostream& out, const EstimateTrace& trace, Eigen::Index rows,
                     Eigen::Index cols);
void write_trace_csv(const std::filesystem::path& path, const EstimateTrace& trace,
                     Eigen::Index rows, Eigen::Index cols);

struct UpsilonBResult {
  Eigen::MatrixXd estimate;
  Eigen::Index index = 0;
  double time = 0.0;
  bool converged = false;
  // First sample satisfying the stopping rule (valid when converged).
  Eigen::Index stop_index = -1;
  double stop_time = 0.0;
  EstimateTrace trace;
};

// Streams the swapped run and stops at the first t_i with
// ||est_i - est_{i-1}|| <= (t_i - t_{i-1}) eta_ub. Without a trigger the
// final sample is returned with converged = false. With run_to_end the
// whole run is traced and the estimate is taken at its last sample.
UpsilonBResult run_upsilon_b_estimation(const Trajectory& swapped, const GeneratorPair& g,
                                        double eta_ub, bool run_to_end = false);

enum class InverseMode { via_upi, via_upi_inverse };

struct Algorithm1Options {
  InverseMode mode = InverseMode::via_upi;
  // Starting w = p; 0 means nu.
  Eigen::Index initial_window = 0;
  LsMethod method = LsMethod::structured;
  // Use traj.d instead of the surrogate (testing only).
  DChannel channel = DChannel::surrogate;
  // Keep filling the traces up to the end of the stream after the stop
  // condition fires; the returned estimates remain those at the stop.
  bool continue_after_stop = false;
  // In via_upi mode the stop also requires cond(UPi_k) <= kConditionGate.
  bool require_invertible = true;
};

struct Algorithm1Result {
  Eigen::MatrixXd CPi;
  Eigen::MatrixXd UPi;
  std::optional<Eigen::MatrixXd> Sigma;
  bool converged = false;
  Eigen::Index k_stop = -1;
  double t_stop = 0.0;
  Eigen::Index w = 0;
  Eigen::Index p = 0;
  EstimateTrace cpi_trace;
  EstimateTrace upi_trace;
  EstimateTrace sigma_trace;
  Eigen::MatrixXd dhat;  // nu x processed samples
};

// Online estimation of C Pi and Upsilon Pi (and (Upsilon Pi)^{-1}) from a
// two-sided stream. Uses omega, y and varpi only; dhat is generated by the
// surrogate driven with UB. Window sizes start at nu and grow (never
// shrink) while the regressor is rank deficient.
Algorithm1Result run_algorithm1(const Trajectory& stream, const GeneratorPair& g,
                                const Eigen::MatrixXd& UB, const Tolerances& tol,
                                const Algorithm1Options& options = {});

}  // namespace tsmor
