#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsmor/estimators.hpp"
#include "tsmor/generators.hpp"
#include "tsmor/interconnect.hpp"
#include "tsmor/lti.hpp"
#include "tsmor/oracle.hpp"
#include "tsmor/reducer.hpp"

namespace tsmor {

// Process exit codes of the command-line tool.
inline constexpr int kExitConverged = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitNotConverged = 3;

// A model is either a directory holding A.txt, B.txt, C.txt or one text
// file with the three matrices back to back.
StateSpaceModel load_model(const std::filesystem::path& path);

struct ExperimentConfig {
  std::filesystem::path model_path;
  InterpolationSet set_S;
  InterpolationSet set_Q;
  double dt = 0.1;
  double duration_swapped = 25.0;
  double duration_twosided = 40.0;
  Tolerances tolerances;
  std::optional<NoiseSpec> noise;
  InverseMode inverse_mode = InverseMode::via_upi;
  std::filesystem::path output_dir = "out";
  // Keep estimating after the online estimator stops so the error curves cover the
  // whole two-sided experiment.
  bool full_trace = true;
  // Take Upsilon B at the end of the swapped run rather than at the first
  // sample meeting the stopping rule.
  bool ub_at_end = true;
  bool write_trajectories = false;
  double bode_lo = 1e-2;
  double bode_hi = 1e3;
  int bode_points = 1000;

  // Throws InputError on missing sets/model or non-positive durations.
  void validate() const;
};

// key = value lines; '#' starts a comment. Keys are the long CLI flag
// names with '-' or '_' (model, set-s, set-q, dt, duration-swapped, ...).
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>");
ExperimentConfig load_config_file(const std::filesystem::path& path);
void write_config(std::ostream& out, const ExperimentConfig& cfg);

struct OracleOutcome {
  MomentMatrices moments;
  AssumptionReport assumptions;
  std::optional<ReducedOrderModel> rom;
};

OracleOutcome run_oracle(const StateSpaceModel& m, const GeneratorPair& g);
// Pi.txt, Upsilon.txt, CPi.txt, UB.txt, UPi.txt, UPi_inv.txt (when it
// exists), assumptions.txt and the oracle ROM.
void write_oracle_outputs(const std::filesystem::path& dir, const OracleOutcome& o);

struct ExperimentOutcome {
  GeneratorPair generators;
  Trajectory swapped;
  Trajectory stream;
  UpsilonBResult upsilon_b;
  Algorithm1Result estimates;
  std::optional<MomentMatrices> oracle;
  std::optional<ReducedOrderModel> rom;
  std::optional<MomentMatchReport> report;
  // Normalized errors along the online estimator traces (NaN where no estimate).
  std::vector<double> eps_cpi;
  std::vector<double> eps_upi;
  std::vector<double> eps_sigma;
  // ||UB - UB_i|| along the swapped run.
  std::vector<double> eps_ub;
  double eps_ub_final = 0.0;
  int status = kExitConverged;
  std::vector<std::string> messages;
};

// Swapped experiment, then the two-sided stream through the online estimator, then
// ROM assembly and moment-match report. Pure computation, no files.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, const StateSpaceModel& m);
void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentOutcome& out);

}  // namespace tsmor
