#include "tsmor/estimators.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include <Eigen/SVD>

#include "tsmor/errors.hpp"
#include "tsmor/lti.hpp"
#include "tsmor/matrix_io.hpp"
#include "tsmor/oracle.hpp"

namespace tsmor {

void Tolerances::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0)) throw InputError(std::string(name) + " must be positive");
  };
  positive("eta_cpi", eta_cpi);
  positive("eta_upi", eta_upi);
  positive("eta_ub", eta_ub);
  positive("rank_tol", rank_tol);
  if (!std::isfinite(rank_tol)) throw InputError("rank_tol must be finite");
}

namespace {

template <typename Svd>
LsEstimate solve_with(const Svd& svd, const Eigen::MatrixXd& regressor,
                      const Eigen::MatrixXd& response, double rank_tol) {
  LsEstimate e;
  e.window = regressor.rows();
  const auto& sv = svd.singularValues();
  const double threshold = sv.size() ? rank_tol * sv(0) : 0.0;
  e.rank = (sv.size() && sv(0) > 0.0) ? (sv.array() > threshold).count() : 0;
  e.rank_ok = e.rank == regressor.cols();
  if (!e.rank_ok) return e;
  const Eigen::MatrixXd Utb = svd.matrixU().transpose() * response;
  e.value = svd.matrixV() * (sv.cwiseInverse().asDiagonal() * Utb);
  e.residual = (regressor * e.value - response).norm();
  return e;
}

void check_window(const Eigen::MatrixXd& samples, Eigen::Index k, Eigen::Index w,
                  const char* what) {
  if (w <= 0) throw InputError(std::string(what) + ": window must be positive");
  if (k < 0 || k >= samples.cols()) {
    throw InputError(std::string(what) + ": sample index " + std::to_string(k) +
                     " outside the record");
  }
  if (k - w + 1 < 0) {
    throw InputError(std::string(what) + ": window of " + std::to_string(w) +
                     " needs more samples than available at index " + std::to_string(k));
  }
}

const Eigen::MatrixXd& d_channel(const Trajectory& traj, DChannel channel) {
  const Eigen::MatrixXd& d = channel == DChannel::exact ? traj.d : traj.dhat;
  if (d.rows() == 0 || d.cols() != traj.varpi.cols() || d.rows() != traj.varpi.rows()) {
    throw InputError(channel == DChannel::exact ? "trajectory has no d channel"
                                                : "trajectory has no dhat channel");
  }
  return d;
}

Eigen::MatrixXd window_block(const Eigen::MatrixXd& samples, Eigen::Index k, Eigen::Index w) {
  return samples.middleCols(k - w + 1, w);
}

// Solves rows * X^T = response (structured) or the explicit Kronecker form,
// returning the nu x nu estimate X.
LsEstimate kronecker_problem(const Eigen::MatrixXd& regressor_samples,
                             const Eigen::MatrixXd& response_samples, Eigen::Index k,
                             Eigen::Index p, double rank_tol, LsMethod method) {
  const auto nu = regressor_samples.rows();
  const Eigen::MatrixXd rows = snapshot_rows(regressor_samples, k, p);
  if (method == LsMethod::structured) {
    const Eigen::MatrixXd response = snapshot_rows(response_samples, k, p);
    LsEstimate e = solve_windowed_ls(rows, response, rank_tol);
    e.rank *= nu;
    if (e.rank_ok) e.value.transposeInPlace();
    return e;
  }
  const Eigen::MatrixXd O = kron_regressor(rows, nu);
  const Eigen::VectorXd P = stack_samples(response_samples, k, p);
  LsEstimate e = solve_windowed_ls(O, P, rank_tol);
  e.window = p;
  if (e.rank_ok) {
    const Eigen::VectorXd v = e.value.col(0);
    e.value = Eigen::Map<const Eigen::MatrixXd>(v.data(), nu, nu);
  }
  return e;
}

}  // namespace

LsEstimate solve_windowed_ls(const Eigen::MatrixXd& regressor, const Eigen::MatrixXd& response,
                             double rank_tol) {
  if (regressor.rows() != response.rows()) {
    throw StructuralError("least squares: regressor and response row counts differ");
  }
  if (regressor.rows() < regressor.cols()) {
    LsEstimate e;
    e.window = regressor.rows();
    e.rank = numerical_rank(regressor, rank_tol);
    return e;
  }
  constexpr unsigned opts = Eigen::ComputeThinU | Eigen::ComputeThinV;
  if (regressor.cols() <= 64) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(regressor, opts);
    return solve_with(svd, regressor, response, rank_tol);
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(regressor, opts);
  return solve_with(svd, regressor, response, rank_tol);
}

Eigen::MatrixXd snapshot_rows(const Eigen::MatrixXd& samples, Eigen::Index k, Eigen::Index w) {
  check_window(samples, k, w, "snapshot");
  return window_block(samples, k, w).transpose();
}

Eigen::MatrixXd kron_regressor(const Eigen::MatrixXd& rows, Eigen::Index nu) {
  const auto p = rows.rows();
  const auto m = rows.cols();
  Eigen::MatrixXd O = Eigen::MatrixXd::Zero(p * nu, m * nu);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      O.block(i * nu, j * nu, nu, nu).diagonal().setConstant(rows(i, j));
    }
  }
  return O;
}

Eigen::VectorXd stack_samples(const Eigen::MatrixXd& samples, Eigen::Index k, Eigen::Index p) {
  check_window(samples, k, p, "stack");
  const Eigen::MatrixXd block = window_block(samples, k, p);
  return Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
}

LsEstimate estimate_cpi(const Trajectory& traj, Eigen::Index k, Eigen::Index w, double rank_tol) {
  if (traj.omega.rows() == 0) throw InputError("estimate_cpi: trajectory has no omega channel");
  const Eigen::MatrixXd R = snapshot_rows(traj.omega, k, w);
  const Eigen::MatrixXd Gamma = snapshot_rows(traj.y, k, w);
  LsEstimate e = solve_windowed_ls(R, Gamma, rank_tol);
  if (e.rank_ok) e.value.transposeInPlace();
  return e;
}

LsEstimate estimate_upi(const Trajectory& traj, Eigen::Index k, Eigen::Index p, DChannel channel,
                        double rank_tol, LsMethod method) {
  const auto nu = traj.omega.rows();
  if (p * nu < nu * nu) throw InputError("estimate_upi: need p >= nu");
  const Eigen::MatrixXd response = d_channel(traj, channel) - traj.varpi;
  return kronecker_problem(traj.omega, response, k, p, rank_tol, method);
}

LsEstimate estimate_upi_inverse(const Trajectory& traj, Eigen::Index k, Eigen::Index p,
                                DChannel channel, double rank_tol, LsMethod method) {
  const auto nu = traj.omega.rows();
  if (p * nu < nu * nu) throw InputError("estimate_upi_inverse: need p >= nu");
  const Eigen::MatrixXd regressor = d_channel(traj, channel) - traj.varpi;
  return kronecker_problem(regressor, traj.omega, k, p, rank_tol, method);
}

Eigen::MatrixXd estimate_upsilon_b(const Trajectory& swapped, const GeneratorPair& g,
                                   Eigen::Index i) {
  if (swapped.varpi.rows() != g.nu) {
    throw InputError("estimate_upsilon_b: trajectory has no varpi channel of size nu");
  }
  if (i < 0 || i >= swapped.samples()) {
    throw InputError("estimate_upsilon_b: sample index outside the record");
  }
  const double t = swapped.t[static_cast<std::size_t>(i)];
  return matrix_exponential(g.Q, -t) * swapped.varpi.col(i);
}

Eigen::MatrixXd estimate_upsilon_b_at(const Trajectory& swapped, const GeneratorPair& g,
                                      double t) {
  const double pos = t / swapped.dt;
  const double idx = std::round(pos);
  if (!(std::abs(pos - idx) <= 1e-9 * std::max(1.0, std::abs(pos))) || idx < 0 ||
      idx >= static_cast<double>(swapped.samples())) {
    throw InputError("estimate_upsilon_b: t = " + format_double(t) + " is not a sample time");
  }
  return estimate_upsilon_b(swapped, g, static_cast<Eigen::Index>(idx));
}

void EstimateTrace::push(double t, const LsEstimate& e) {
  times.push_back(t);
  values.push_back(e.rank_ok ? std::optional<Eigen::MatrixXd>(e.value) : std::nullopt);
  residuals.push_back(e.residual);
  rank_ok.push_back(e.rank_ok);
  windows.push_back(e.window);
}

void EstimateTrace::push(double t, const Eigen::MatrixXd& value, double residual) {
  times.push_back(t);
  values.emplace_back(value);
  residuals.push_back(residual);
  rank_ok.push_back(true);
  windows.push_back(1);
}

std::optional<std::size_t> EstimateTrace::last_valid() const {
  for (std::size_t i = values.size(); i-- > 0;) {
    if (values[i]) return i;
  }
  return std::nullopt;
}

void write_trace_csv(std::ostream& out, const EstimateTrace& trace, Eigen::Index rows,
                     Eigen::Index cols) {
  out << "t_k";
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out << ",entry_" << (i + 1) << '_' << (j + 1);
  }
  out << ",residual,rank_ok\n";
  for (std::size_t r = 0; r < trace.size(); ++r) {
    out << format_double(trace.times[r]);
    const auto& v = trace.values[r];
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        out << ',';
        if (v) out << format_double((*v)(i, j));
      }
    }
    out << ',';
    if (trace.rank_ok[r]) out << format_double(trace.residuals[r]);
    out << ',' << (trace.rank_ok[r] ? 1 : 0) << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const EstimateTrace& trace,
                     Eigen::Index rows, Eigen::Index cols) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_trace_csv(out, trace, rows, cols);
}

UpsilonBResult run_upsilon_b_estimation(const Trajectory& swapped, const GeneratorPair& g,
                                        double eta_ub, bool run_to_end) {
  if (!(eta_ub > 0.0)) throw InputError("eta_ub must be positive");
  const auto K = swapped.samples();
  if (K == 0) throw InputError("empty swapped trajectory");
  UpsilonBResult r;
  // e^{-Q t_i} = (e^{-Q dt})^i, one exponential for the whole stream.
  const Eigen::MatrixXd step = matrix_exponential(g.Q, -swapped.dt);
  Eigen::MatrixXd back = Eigen::MatrixXd::Identity(g.nu, g.nu);
  Eigen::MatrixXd prev;
  for (Eigen::Index i = 0; i < K; ++i) {
    if (i > 0) back = back * step;
    const Eigen::MatrixXd est = back * swapped.varpi.col(i);
    r.trace.push(swapped.t[static_cast<std::size_t>(i)], est);
    r.estimate = est;
    r.index = i;
    r.time = swapped.t[static_cast<std::size_t>(i)];
    if (i > 0) {
      const double elapsed = swapped.t[static_cast<std::size_t>(i)] -
                             swapped.t[static_cast<std::size_t>(i - 1)];
      if (!r.converged && (est - prev).norm() <= elapsed * eta_ub) {
        r.converged = true;
        r.stop_index = i;
        r.stop_time = r.time;
        if (!run_to_end) break;
      }
    }
    prev = est;
  }
  return r;
}

namespace {

bool within(double change, double elapsed, double eta) {
  if (std::isinf(eta)) return true;
  return change <= elapsed * eta;
}

// Grows the window (appending older samples) until the regressor has full
// column rank or the history is exhausted; the grown size is kept.
template <typename Solve>
LsEstimate grow_until_ranked(Eigen::Index k, Eigen::Index& window, Solve&& solve) {
  if (k - window + 1 < 0) return {};
  for (;;) {
    LsEstimate e = solve(window);
    if (e.rank_ok || k - window < 0) return e;
    ++window;
  }
}

}  // namespace

Algorithm1Result run_algorithm1(const Trajectory& stream, const GeneratorPair& g,
                                const Eigen::MatrixXd& UB, const Tolerances& tol,
                                const Algorithm1Options& options) {
  tol.validate();
  const auto nu = g.nu;
  const auto K = stream.samples();
  if (stream.omega.rows() != nu || stream.varpi.rows() != nu || stream.y.size() != K) {
    throw InputError("run_algorithm1: stream lacks omega/varpi/y channels of size nu");
  }
  if (options.channel == DChannel::exact && stream.d.rows() != nu) {
    throw InputError("run_algorithm1: exact-d mode requires a d channel");
  }

  Algorithm1Result r;
  r.w = r.p = options.initial_window > 0 ? options.initial_window : nu;
  if (r.w < nu) throw InputError("run_algorithm1: initial window must be >= nu");

  // Surrogate output for every sample, generated online.
  Trajectory work;
  work.dt = stream.dt;
  work.t = stream.t;
  work.omega = stream.omega;
  work.varpi = stream.varpi;
  work.y = stream.y;
  work.d = stream.d;
  work.dhat = Eigen::MatrixXd::Zero(nu, K);
  SurrogateSystem surrogate(g, UB, stream.dt);
  const DChannel channel = options.channel;

  std::optional<Eigen::MatrixXd> prev_cpi, prev_upi, prev_sigma;
  bool stopped = false;
  Eigen::Index processed = 0;
  for (Eigen::Index k = 0; k < K; ++k) {
    work.dhat.col(k) = surrogate.state();
    surrogate.advance(stream.omega.col(k));
    processed = k + 1;
    const double tk = stream.t[static_cast<std::size_t>(k)];

    const LsEstimate cpi = grow_until_ranked(
        k, r.w, [&](Eigen::Index w) { return estimate_cpi(work, k, w, tol.rank_tol); });
    const LsEstimate upi = grow_until_ranked(k, r.p, [&](Eigen::Index p) {
      return estimate_upi(work, k, p, channel, tol.rank_tol, options.method);
    });
    LsEstimate sigma;
    if (k - r.p + 1 >= 0) {
      sigma = estimate_upi_inverse(work, k, r.p, channel, tol.rank_tol, options.method);
    }
    r.cpi_trace.push(tk, cpi);
    r.upi_trace.push(tk, upi);
    r.sigma_trace.push(tk, sigma);
    if (stopped) continue;

    const double elapsed = k > 0 ? tk - stream.t[static_cast<std::size_t>(k - 1)] : stream.dt;
    const bool use_inverse = options.mode == InverseMode::via_upi_inverse;
    const LsEstimate& second = use_inverse ? sigma : upi;
    const auto& prev_second = use_inverse ? prev_sigma : prev_upi;

    bool stop = cpi.rank_ok && second.rank_ok;
    if (stop) {
      const bool cpi_ok = std::isinf(tol.eta_cpi) ||
                          (prev_cpi && within((cpi.value - *prev_cpi).norm(), elapsed, tol.eta_cpi));
      const bool second_ok =
          std::isinf(tol.eta_upi) ||
          (prev_second && within((second.value - *prev_second).norm(), elapsed, tol.eta_upi));
      stop = cpi_ok && second_ok;
    }
    if (stop && !use_inverse && options.require_invertible) {
      stop = condition_number(upi.value) <= kConditionGate;
    }

    auto keep = [](const LsEstimate& e, Eigen::MatrixXd& latest,
                   std::optional<Eigen::MatrixXd>& prev) {
      if (e.rank_ok) {
        latest = e.value;
        prev = e.value;
      } else {
        prev.reset();
      }
    };
    keep(cpi, r.CPi, prev_cpi);
    keep(upi, r.UPi, prev_upi);
    if (sigma.rank_ok) r.Sigma = sigma.value;
    prev_sigma = sigma.rank_ok ? std::optional<Eigen::MatrixXd>(sigma.value) : std::nullopt;

    if (stop) {
      stopped = true;
      r.converged = true;
      r.k_stop = k;
      r.t_stop = tk;
      if (!options.continue_after_stop) break;
    }
  }
  if (!r.converged && processed > 0) {
    r.k_stop = processed - 1;
    r.t_stop = stream.t[static_cast<std::size_t>(processed - 1)];
  }
  r.dhat = work.dhat.leftCols(processed);
  return r;
}

}  // namespace tsmor
