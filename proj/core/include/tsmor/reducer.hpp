#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tsmor/generators.hpp"
#include "tsmor/lti.hpp"

namespace tsmor {

enum class RomForm { q_form, s_form };

struct RomProvenance {
  std::string source = "oracle";  // "oracle" or "data"
  std::optional<double> t_k;      // time of the C Pi / Upsilon Pi estimates
  std::optional<double> t_i;      // time of the Upsilon B estimate
  std::string inverse = "upi";    // "upi" (solve with UPi) or "upi_inverse" (Sigma)
};

// nu-order model  xi' = F xi + G u,  psi = H xi.
struct ReducedOrderModel {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::MatrixXd H;
  RomForm form = RomForm::q_form;
  RomProvenance provenance;
  std::vector<std::string> warnings;

  Eigen::Index order() const { return F.rows(); }
  TransferFunction transfer_function() const { return {F, G, H}; }
};

// Either Upsilon Pi itself (solved against, never inverted explicitly) or an
// estimate of its inverse, which is applied by multiplication.
struct UpiOperand {
  Eigen::MatrixXd matrix;
  bool is_inverse = false;

  static UpiOperand direct(Eigen::MatrixXd upi) { return {std::move(upi), false}; }
  static UpiOperand inverse(Eigen::MatrixXd sigma) { return {std::move(sigma), true}; }
};

// (Q - R H, UB, H) with H = CPi (Upsilon Pi)^{-1}.
// Throws InvertibilityError when cond(Upsilon Pi) exceeds kConditionGate.
ReducedOrderModel build_rom_q_form(const GeneratorPair& g, const Eigen::MatrixXd& CPi,
                                   const Eigen::MatrixXd& UB, const UpiOperand& upi);

// (S - G L, G, CPi) with G = (Upsilon Pi)^{-1} UB.
ReducedOrderModel build_rom_s_form(const GeneratorPair& g, const Eigen::MatrixXd& CPi,
                                   const Eigen::MatrixXd& UB, const UpiOperand& upi);

struct PointMatch {
  Complex s;
  Complex full;
  Complex rom;
  double abs_error = 0.0;
  double rel_error = 0.0;
  // False when s is (numerically) a pole of either model.
  bool evaluated = false;
  std::string origin;  // "S", "Q" or "grid"
};

struct BodeRow {
  double freq = 0.0;
  std::optional<double> mag_full_db;
  std::optional<double> phase_full_deg;
  std::optional<double> mag_rom_db;
  std::optional<double> phase_rom_deg;
};

struct MomentMatchReport {
  std::vector<PointMatch> interpolation;  // sigma(S) then sigma(Q)
  std::vector<PointMatch> grid;
  std::vector<BodeRow> bode;
  double max_rel_error_interpolation() const;
};

// Evaluates both models at every point of sigma(S) u sigma(Q) and on the
// imaginary axis at the grid frequencies.
MomentMatchReport moment_match_report(const StateSpaceModel& full, const ReducedOrderModel& rom,
                                      const GeneratorPair& g,
                                      const std::vector<double>& freq_grid = {});

// count points, log-spaced between lo and hi (rad/s).
std::vector<double> log_grid(double lo = 1e-2, double hi = 1e3, int count = 1000);

// Magnitude (dB) and unwrapped phase (deg) along a frequency grid; entries
// are empty where the response is exactly zero or at a pole.
struct BodePoint {
  double freq = 0.0;
  std::optional<double> mag_db;
  std::optional<double> phase_deg;
};
std::vector<BodePoint> bode(const TransferFunction& tf, const std::vector<double>& freqs);

// freq_rad_s,mag_full_db,phase_full_deg,mag_rom_db,phase_rom_deg
void write_bode_csv(std::ostream& out, const std::vector<BodeRow>& rows);
void write_bode_csv(const std::filesystem::path& path, const std::vector<BodeRow>& rows);

void write_moment_report(std::ostream& out, const MomentMatchReport& report);

// Writes <prefix>F.txt, <prefix>G.txt, <prefix>H.txt and <prefix>provenance.txt.
void write_rom(const std::filesystem::path& dir, const ReducedOrderModel& rom,
               const std::string& prefix = "rom_");

}  // namespace tsmor
