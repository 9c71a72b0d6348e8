#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tsmor/convert.hpp"
#include "tsmor/errors.hpp"
#include "tsmor/experiment.hpp"
#include "tsmor/matrix_io.hpp"

namespace fs = std::filesystem;
using namespace tsmor;

namespace {

// Flag values collected as strings and applied on top of the config file.
struct Overrides {
  std::map<std::string, std::string> values;
  std::string config;

  void add(CLI::App* app, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        "--" + key, [this, key](const std::string& v) { values[key] = v; }, help);
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config_file(config);
    for (const auto& [k, v] : values) apply_setting(cfg, k, v);
    return cfg;
  }
};

void add_experiment_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "key = value configuration file");
  o.add(app, "model", "model directory (A.txt, B.txt, C.txt) or single file");
  o.add(app, "set-s", "comma separated nonnegative frequencies for S");
  o.add(app, "set-q", "comma separated nonnegative frequencies for Q");
  o.add(app, "out", "output directory");
}

void add_run_flags(CLI::App* app, Overrides& o) {
  for (const char* key : {"dt", "duration-swapped", "duration-twosided", "eta-cpi", "eta-upi",
                          "eta-ub", "rank-tol", "snr-v-db", "snr-z-db", "seed", "inverse-mode",
                          "full-trace", "ub-at-end", "write-trajectories", "bode-lo", "bode-hi",
                          "bode-points"}) {
    o.add(app, key, "");
  }
}

int cmd_oracle(const Overrides& o) {
  ExperimentConfig cfg = o.resolve();
  if (cfg.model_path.empty()) throw InputError("--model is required");
  const StateSpaceModel m = load_model(cfg.model_path);
  const GeneratorPair g = build_generator_pair(cfg.set_S, cfg.set_Q);
  const OracleOutcome out = run_oracle(m, g);
  write_oracle_outputs(cfg.output_dir, out);
  std::cout << out.assumptions.to_string();
  if (out.moments.upi_singular) {
    std::cout << "UPi is singular or ill conditioned (cond " << format_double(out.moments.upi_condition)
              << "); UPi_inv not written\n";
  }
  return out.assumptions.all_passed() && !out.moments.upi_singular ? kExitConverged
                                                                   : kExitInputError;
}

int cmd_run(const Overrides& o) {
  ExperimentConfig cfg = o.resolve();
  cfg.validate();
  const StateSpaceModel m = load_model(cfg.model_path);
  const ExperimentOutcome out = run_experiment(cfg, m);
  write_experiment_outputs(cfg, out);
  for (const auto& msg : out.messages) std::cerr << msg << '\n';
  std::cout << "t_i=" << format_double(out.upsilon_b.time) << " t_k="
            << format_double(out.estimates.t_stop);
  if (out.report) {
    std::cout << " max_rel_error=" << format_double(out.report->max_rel_error_interpolation());
  }
  std::cout << " status=" << out.status << '\n';
  return out.status;
}

std::vector<double> parse_freqs(const std::string& spec) {
  std::vector<double> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !(v >= 0.0)) throw InputError("invalid frequency '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("empty frequency list");
  return out;
}

TransferFunction load_rom_tf(const fs::path& path) {
  if (fs::is_directory(path) && fs::exists(path / "rom_F.txt")) {
    return {read_matrix_file(path / "rom_F.txt"), read_matrix_file(path / "rom_G.txt"),
            read_matrix_file(path / "rom_H.txt")};
  }
  const StateSpaceModel r = load_model(path);
  return {r.A(), r.B(), r.C()};
}

struct BodeArgs {
  std::string model;
  std::string rom;
  std::string freqs;
  double lo = 1e-2;
  double hi = 1e3;
  int points = 1000;
  std::string out;
};

int cmd_bode(const BodeArgs& a) {
  if (a.model.empty() && a.rom.empty()) throw InputError("bode needs --model and/or --rom");
  const std::vector<double> grid = a.freqs.empty() ? log_grid(a.lo, a.hi, a.points)
                                                   : parse_freqs(a.freqs);
  std::vector<BodeRow> rows(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) rows[i].freq = grid[i];
  if (!a.model.empty()) {
    const StateSpaceModel m = load_model(a.model);
    const auto pts = bode(TransferFunction(m.A(), m.B(), m.C()), grid);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      rows[i].mag_full_db = pts[i].mag_db;
      rows[i].phase_full_deg = pts[i].phase_deg;
    }
  }
  if (!a.rom.empty()) {
    const auto pts = bode(load_rom_tf(a.rom), grid);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      rows[i].mag_rom_db = pts[i].mag_db;
      rows[i].phase_rom_deg = pts[i].phase_deg;
    }
  }
  if (a.out.empty()) {
    write_bode_csv(std::cout, rows);
  } else {
    write_bode_csv(a.out, rows);
  }
  return kExitConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-domain moment matching from two-sided interconnection data"};
  app.require_subcommand(1);

  Overrides oracle_o;
  auto* oracle = app.add_subcommand("oracle", "exact moment matrices and assumption report");
  add_experiment_flags(oracle, oracle_o);

  Overrides run_o;
  auto* run = app.add_subcommand("run", "swapped and two-sided experiments, ROM, reports");
  add_experiment_flags(run, run_o);
  add_run_flags(run, run_o);

  BodeArgs bode_a;
  auto* bodec = app.add_subcommand("bode", "magnitude and phase CSV");
  bodec->add_option("--model", bode_a.model, "full model");
  bodec->add_option("--rom", bode_a.rom, "ROM directory (rom_F/G/H.txt) or model path");
  bodec->add_option("--freqs", bode_a.freqs, "comma separated frequencies (rad/s)");
  bodec->add_option("--lo", bode_a.lo, "grid start (rad/s)");
  bodec->add_option("--hi", bode_a.hi, "grid end (rad/s)");
  bodec->add_option("--points", bode_a.points, "grid size");
  bodec->add_option("--out", bode_a.out, "output CSV (stdout if omitted)");

  std::string conv_in;
  std::string conv_out = ".";
  auto* conv = app.add_subcommand("convert", ".mat or .mtx to dense text matrices");
  conv->add_option("input", conv_in, "input file")->required();
  conv->add_option("--out", conv_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInputError;
  }

  try {
    if (*oracle) return cmd_oracle(oracle_o);
    if (*run) return cmd_run(run_o);
    if (*bodec) return cmd_bode(bode_a);
    if (*conv) {
      for (const auto& [name, path] : convert_to_dense_text(conv_in, conv_out)) {
        std::cout << name << " -> " << path.string() << '\n';
      }
      return kExitConverged;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitInputError;
}
