#include "tsmor/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "tsmor/errors.hpp"
#include "tsmor/matrix_io.hpp"

namespace tsmor {

StateSpaceModel load_model(const std::filesystem::path& path) {
  std::error_code ec;
  if (std::filesystem::is_directory(path, ec)) {
    return StateSpaceModel(read_matrix_file(path / "A.txt"), read_matrix_file(path / "B.txt"),
                           read_matrix_file(path / "C.txt"));
  }
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model '" + path.string() + "'");
  const std::string origin = path.string();
  Eigen::MatrixXd A = read_matrix(in, origin + " (A)", false);
  Eigen::MatrixXd B = read_matrix(in, origin + " (B)", false);
  Eigen::MatrixXd C = read_matrix(in, origin + " (C)", true);
  return StateSpaceModel(std::move(A), std::move(B), std::move(C));
}

void ExperimentConfig::validate() const {
  if (model_path.empty()) throw InputError("no model given");
  if (set_S.frequencies().empty() || set_Q.frequencies().empty()) {
    throw InputError("both interpolation sets (set-s, set-q) are required");
  }
  if (!(dt > 0.0)) throw InputError("dt must be positive");
  if (!(duration_swapped > 0.0)) throw InputError("duration-swapped must be positive");
  if (!(duration_twosided > 0.0)) throw InputError("duration-twosided must be positive");
  tolerances.validate();
  if (!(bode_lo > 0.0) || !(bode_hi > bode_lo) || bode_points < 2) {
    throw InputError("invalid Bode grid");
  }
}

namespace {

std::string normalize_key(std::string key) {
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) {
    return c == '_' ? '-' : static_cast<char>(std::tolower(c));
  });
  return key;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size()) throw InputError("invalid number for " + key + ": '" + value + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw InputError("invalid boolean for " + key + ": '" + value + "'");
}

NoiseSpec& noise_of(ExperimentConfig& cfg) {
  if (!cfg.noise) cfg.noise = NoiseSpec{};
  return *cfg.noise;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string value = trim(raw);
  if (key == "model") {
    cfg.model_path = value;
  } else if (key == "set-s") {
    cfg.set_S = InterpolationSet::parse(value);
  } else if (key == "set-q") {
    cfg.set_Q = InterpolationSet::parse(value);
  } else if (key == "dt") {
    cfg.dt = to_double(key, value);
  } else if (key == "duration-swapped") {
    cfg.duration_swapped = to_double(key, value);
  } else if (key == "duration-twosided") {
    cfg.duration_twosided = to_double(key, value);
  } else if (key == "eta-cpi") {
    cfg.tolerances.eta_cpi = to_double(key, value);
  } else if (key == "eta-upi") {
    cfg.tolerances.eta_upi = to_double(key, value);
  } else if (key == "eta-ub") {
    cfg.tolerances.eta_ub = to_double(key, value);
  } else if (key == "rank-tol") {
    cfg.tolerances.rank_tol = to_double(key, value);
  } else if (key == "snr-v-db") {
    noise_of(cfg).snr_v_db = to_double(key, value);
  } else if (key == "snr-z-db") {
    noise_of(cfg).snr_z_db = to_double(key, value);
  } else if (key == "seed") {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size()) throw InputError("invalid seed '" + value + "'");
    noise_of(cfg).seed = v;
  } else if (key == "inverse-mode") {
    if (value == "via_upi" || value == "via-upi") {
      cfg.inverse_mode = InverseMode::via_upi;
    } else if (value == "via_upi_inverse" || value == "via-upi-inverse") {
      cfg.inverse_mode = InverseMode::via_upi_inverse;
    } else {
      throw InputError("inverse-mode must be via_upi or via_upi_inverse, got '" + value + "'");
    }
  } else if (key == "out") {
    cfg.output_dir = value;
  } else if (key == "full-trace") {
    cfg.full_trace = to_bool(key, value);
  } else if (key == "ub-at-end") {
    cfg.ub_at_end = to_bool(key, value);
  } else if (key == "write-trajectories") {
    cfg.write_trajectories = to_bool(key, value);
  } else if (key == "bode-lo") {
    cfg.bode_lo = to_double(key, value);
  } else if (key == "bode-hi") {
    cfg.bode_hi = to_double(key, value);
  } else if (key == "bode-points") {
    cfg.bode_points = static_cast<int>(to_double(key, value));
  } else if (key == "omega0") {
    if (value != "ones") throw InputError("omega0 supports only 'ones', got '" + value + "'");
  } else {
    throw InputError("unknown setting '" + raw_key + "'");
  }
}

ExperimentConfig parse_config(std::istream& in, const std::string& origin) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const InputError& e) {
      throw InputError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  ExperimentConfig cfg = parse_config(in, path.string());
  // Relative model paths are resolved against the config file location.
  if (!cfg.model_path.empty() && cfg.model_path.is_relative()) {
    cfg.model_path = path.parent_path() / cfg.model_path;
  }
  return cfg;
}

void write_config(std::ostream& out, const ExperimentConfig& cfg) {
  out << "model=" << cfg.model_path.string() << '\n';
  out << "set-s=" << cfg.set_S.to_string() << '\n';
  out << "set-q=" << cfg.set_Q.to_string() << '\n';
  out << "dt=" << format_double(cfg.dt) << '\n';
  out << "duration-swapped=" << format_double(cfg.duration_swapped) << '\n';
  out << "duration-twosided=" << format_double(cfg.duration_twosided) << '\n';
  out << "eta-cpi=" << format_double(cfg.tolerances.eta_cpi) << '\n';
  out << "eta-upi=" << format_double(cfg.tolerances.eta_upi) << '\n';
  out << "eta-ub=" << format_double(cfg.tolerances.eta_ub) << '\n';
  out << "rank-tol=" << format_double(cfg.tolerances.rank_tol) << '\n';
  if (cfg.noise) {
    if (cfg.noise->snr_v_db) out << "snr-v-db=" << format_double(*cfg.noise->snr_v_db) << '\n';
    if (cfg.noise->snr_z_db) out << "snr-z-db=" << format_double(*cfg.noise->snr_z_db) << '\n';
    out << "seed=" << cfg.noise->seed << '\n';
  }
  out << "inverse-mode="
      << (cfg.inverse_mode == InverseMode::via_upi ? "via_upi" : "via_upi_inverse") << '\n';
  out << "full-trace=" << (cfg.full_trace ? "true" : "false") << '\n';
  out << "ub-at-end=" << (cfg.ub_at_end ? "true" : "false") << '\n';
  out << "write-trajectories=" << (cfg.write_trajectories ? "true" : "false") << '\n';
  out << "bode-lo=" << format_double(cfg.bode_lo) << '\n';
  out << "bode-hi=" << format_double(cfg.bode_hi) << '\n';
  out << "bode-points=" << cfg.bode_points << '\n';
  out << "omega0=ones\n";
}

OracleOutcome run_oracle(const StateSpaceModel& m, const GeneratorPair& g) {
  OracleOutcome o;
  o.assumptions = check_assumptions(m, g);
  o.moments = exact_moment_matrices(m, g);
  if (!o.moments.upi_singular) {
    o.rom = build_rom_q_form(g, o.moments.CPi, o.moments.UB, UpiOperand::direct(o.moments.UPi));
    o.rom->provenance.source = "oracle";
  }
  return o;
}

void write_oracle_outputs(const std::filesystem::path& dir, const OracleOutcome& o) {
  std::filesystem::create_directories(dir);
  const auto& mm = o.moments;
  write_matrix_file(dir / "Pi.txt", mm.Pi);
  write_matrix_file(dir / "Upsilon.txt", mm.Upsilon);
  write_matrix_file(dir / "CPi.txt", mm.CPi);
  write_matrix_file(dir / "UB.txt", mm.UB);
  write_matrix_file(dir / "UPi.txt", mm.UPi);
  if (mm.UPi_inv) write_matrix_file(dir / "UPi_inv.txt", *mm.UPi_inv);
  std::ofstream rep(dir / "assumptions.txt");
  rep << o.assumptions.to_string();
  rep << "pi_residual=" << format_double(mm.pi_residual) << '\n';
  rep << "upsilon_residual=" << format_double(mm.upsilon_residual) << '\n';
  rep << "upi_condition=" << format_double(mm.upi_condition) << '\n';
  rep << (mm.upi_singular ? "FAIL" : "pass") << " UPi-invertible: condition gate "
      << format_double(kConditionGate) << '\n';
  if (o.rom) write_rom(dir, *o.rom, "oracle_rom_");
}

namespace {

std::vector<double> normalized_errors(const EstimateTrace& trace, const Eigen::MatrixXd& exact) {
  std::vector<double> out(trace.size(), std::numeric_limits<double>::quiet_NaN());
  const double scale = exact.norm();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace.values[i] && trace.values[i]->rows() == exact.rows() &&
        trace.values[i]->cols() == exact.cols()) {
      out[i] = (*trace.values[i] - exact).norm() / scale;
    }
  }
  return out;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const StateSpaceModel& m) {
  cfg.validate();
  ExperimentOutcome out;
  out.generators = build_generator_pair(cfg.set_S, cfg.set_Q);
  const GeneratorPair& g = out.generators;

  const AssumptionReport assumptions = check_assumptions(m, g, cfg.tolerances.rank_tol);
  for (const char* required : {"plant-stable", "S-A-disjoint", "Q-A-disjoint", "S-Q-disjoint"}) {
    const AssumptionCheck* c = assumptions.find(required);
    if (c && !c->passed) {
      throw InputError(std::string("assumption violated: ") + c->name + " (" + c->detail + ")");
    }
  }
  for (const auto& c : assumptions.checks) {
    if (!c.passed) out.messages.push_back("warning: " + c.name + " failed (" + c.detail + ")");
  }

  // Experiment 1: swapped interconnection under an impulse.
  out.swapped = simulate_swapped_impulse(m, g, cfg.dt, cfg.duration_swapped);
  out.upsilon_b = run_upsilon_b_estimation(out.swapped, g, cfg.tolerances.eta_ub, cfg.ub_at_end);
  if (!out.upsilon_b.converged) {
    out.messages.push_back("Upsilon B stopping rule did not trigger within the swapped run");
  }

  // Experiment 2: two-sided interconnection streamed through the online estimator.
  const Eigen::VectorXd omega0 = Eigen::VectorXd::Ones(g.nu);
  out.stream =
      simulate_two_sided(m, g, omega0, cfg.dt, cfg.duration_twosided, cfg.noise);
  Algorithm1Options opts;
  opts.mode = cfg.inverse_mode;
  opts.continue_after_stop = cfg.full_trace;
  out.estimates = run_algorithm1(out.stream, g, out.upsilon_b.estimate, cfg.tolerances, opts);
  if (!out.estimates.converged) {
    out.messages.push_back("online estimator stopping condition did not trigger within the stream");
  }

  try {
    out.oracle = exact_moment_matrices(m, g);
  } catch (const Error& e) {
    out.messages.push_back(std::string("oracle unavailable: ") + e.what());
  }
  if (out.oracle) {
    out.eps_cpi = normalized_errors(out.estimates.cpi_trace, out.oracle->CPi);
    out.eps_upi = normalized_errors(out.estimates.upi_trace, out.oracle->UPi);
    if (out.oracle->UPi_inv) {
      out.eps_sigma = normalized_errors(out.estimates.sigma_trace, *out.oracle->UPi_inv);
    }
    for (const auto& v : out.upsilon_b.trace.values) {
      out.eps_ub.push_back((*v - out.oracle->UB).norm());
    }
    out.eps_ub_final = (out.upsilon_b.estimate - out.oracle->UB).norm();
  }

  const auto& est = out.estimates;
  const bool have_second = cfg.inverse_mode == InverseMode::via_upi ? est.UPi.size() > 0
                                                                    : est.Sigma.has_value();
  if (est.CPi.size() > 0 && have_second) {
    try {
      const UpiOperand operand = cfg.inverse_mode == InverseMode::via_upi
                                     ? UpiOperand::direct(est.UPi)
                                     : UpiOperand::inverse(*est.Sigma);
      ReducedOrderModel rom = build_rom_q_form(g, est.CPi, out.upsilon_b.estimate, operand);
      rom.provenance.source = "data";
      rom.provenance.t_k = est.t_stop;
      rom.provenance.t_i = out.upsilon_b.time;
      out.report = moment_match_report(m, rom, g, log_grid(cfg.bode_lo, cfg.bode_hi, cfg.bode_points));
      out.rom = std::move(rom);
    } catch (const InvertibilityError& e) {
      out.messages.push_back(std::string("ROM not assembled: ") + e.what());
    }
  } else {
    out.messages.push_back("ROM not assembled: no valid estimates");
  }

  const bool ok = out.upsilon_b.converged && est.converged && out.rom.has_value();
  out.status = ok ? kExitConverged : kExitNotConverged;
  return out;
}

void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentOutcome& out) {
  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  const auto nu = out.generators.nu;
  const auto& est = out.estimates;

  write_trace_csv(dir / "ub_trace.csv", out.upsilon_b.trace, nu, 1);
  write_trace_csv(dir / "cpi_trace.csv", est.cpi_trace, 1, nu);
  write_trace_csv(dir / "upi_trace.csv", est.upi_trace, nu, nu);
  write_trace_csv(dir / "upi_inverse_trace.csv", est.sigma_trace, nu, nu);

  if (out.oracle) {
    std::ofstream ec(dir / "error_curves.csv");
    ec << "t_k,eps_cpi,eps_upi,eps_upi_inverse\n";
    auto cell = [&](const std::vector<double>& v, std::size_t i) {
      ec << ',';
      if (i < v.size() && std::isfinite(v[i])) ec << format_double(v[i]);
    };
    for (std::size_t i = 0; i < est.cpi_trace.size(); ++i) {
      ec << format_double(est.cpi_trace.times[i]);
      cell(out.eps_cpi, i);
      cell(out.eps_upi, i);
      cell(out.eps_sigma, i);
      ec << '\n';
    }
    std::ofstream eu(dir / "ub_error.csv");
    eu << "t_i,eps_ub\n";
    for (std::size_t i = 0; i < out.eps_ub.size(); ++i) {
      eu << format_double(out.upsilon_b.trace.times[i]) << ',' << format_double(out.eps_ub[i])
         << '\n';
    }
  }

  if (out.rom) write_rom(dir, *out.rom);
  if (out.report) {
    std::ofstream mr(dir / "moment_match.csv");
    write_moment_report(mr, *out.report);
    write_bode_csv(dir / "bode.csv", out.report->bode);
  }

  std::ofstream s(dir / "summary.txt");
  write_config(s, cfg);
  s << "nu=" << nu << '\n';
  s << "ub_converged=" << (out.upsilon_b.converged ? 1 : 0) << '\n';
  s << "t_i=" << format_double(out.upsilon_b.time) << '\n';
  if (out.upsilon_b.converged) s << "t_i_stop=" << format_double(out.upsilon_b.stop_time) << '\n';
  s << "algorithm1_converged=" << (est.converged ? 1 : 0) << '\n';
  s << "t_k=" << format_double(est.t_stop) << '\n';
  s << "w=" << est.w << "\np=" << est.p << '\n';
  if (out.oracle) {
    s << "eps_ub=" << format_double(out.eps_ub_final) << '\n';
    if (est.CPi.size()) {
      s << "eps_cpi=" << format_double((est.CPi - out.oracle->CPi).norm() / out.oracle->CPi.norm())
        << '\n';
    }
    if (est.UPi.size()) {
      s << "eps_upi=" << format_double((est.UPi - out.oracle->UPi).norm() / out.oracle->UPi.norm())
        << '\n';
    }
  }
  if (out.report) {
    s << "max_rel_error_interpolation=" << format_double(out.report->max_rel_error_interpolation())
      << '\n';
  }
  s << "status=" << out.status << '\n';
  for (const auto& msg : out.messages) s << "message=" << msg << '\n';

  if (cfg.write_trajectories) {
    Trajectory stream = out.stream;
    if (out.oracle) attach_exact_d(stream, out.oracle->Upsilon);
    if (est.dhat.cols() == stream.samples()) stream.dhat = est.dhat;
    write_trajectory_csv(dir / "swapped.csv", out.swapped);
    write_trajectory_csv(dir / "two_sided.csv", stream);
  }
}

}  // namespace tsmor
