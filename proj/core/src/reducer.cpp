#include "tsmor/reducer.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include <Eigen/LU>

#include "tsmor/errors.hpp"
#include "tsmor/matrix_io.hpp"
#include "tsmor/oracle.hpp"

namespace tsmor {

namespace {

void check_inputs(const GeneratorPair& g, const Eigen::MatrixXd& CPi, const Eigen::MatrixXd& UB,
                  const UpiOperand& upi) {
  const auto nu = g.nu;
  if (CPi.rows() != 1 || CPi.cols() != nu || UB.rows() != nu || UB.cols() != 1 ||
      upi.matrix.rows() != nu || upi.matrix.cols() != nu) {
    throw StructuralError("ROM inputs must be CPi 1xnu, UB nux1 and UPi nuxnu with nu = " +
                          std::to_string(nu));
  }
}

// Applies (Upsilon Pi)^{-1} from the left to rhs.
Eigen::MatrixXd apply_inverse(const UpiOperand& upi, const Eigen::MatrixXd& rhs) {
  if (upi.is_inverse) return upi.matrix * rhs;
  const double cond = condition_number(upi.matrix);
  if (!(cond <= kConditionGate)) {
    throw InvertibilityError("Upsilon Pi fails the condition gate (cond = " +
                             format_double(cond) + ")");
  }
  return upi.matrix.partialPivLu().solve(rhs);
}

}  // namespace

ReducedOrderModel build_rom_q_form(const GeneratorPair& g, const Eigen::MatrixXd& CPi,
                                   const Eigen::MatrixXd& UB, const UpiOperand& upi) {
  check_inputs(g, CPi, UB, upi);
  ReducedOrderModel rom;
  rom.form = RomForm::q_form;
  // H = CPi (UPi)^{-1}  <=>  H^T = (UPi)^{-T} CPi^T.
  if (upi.is_inverse) {
    rom.H = CPi * upi.matrix;
  } else {
    rom.H = apply_inverse(UpiOperand::direct(upi.matrix.transpose()), CPi.transpose()).transpose();
  }
  rom.F = g.Q - g.R * rom.H;
  rom.G = UB;
  rom.provenance.inverse = upi.is_inverse ? "upi_inverse" : "upi";
  if (UB.isZero(0.0)) rom.warnings.emplace_back("UB is zero: the ROM has no input path");
  return rom;
}

ReducedOrderModel build_rom_s_form(const GeneratorPair& g, const Eigen::MatrixXd& CPi,
                                   const Eigen::MatrixXd& UB, const UpiOperand& upi) {
  check_inputs(g, CPi, UB, upi);
  ReducedOrderModel rom;
  rom.form = RomForm::s_form;
  rom.G = apply_inverse(upi, UB);
  rom.F = g.S - rom.G * g.L;
  rom.H = CPi;
  rom.provenance.inverse = upi.is_inverse ? "upi_inverse" : "upi";
  if (rom.G.isZero(0.0)) {
    rom.warnings.emplace_back(
        "G is zero: the ROM is the marginally stable generator with no input path");
  }
  return rom;
}

double MomentMatchReport::max_rel_error_interpolation() const {
  double worst = 0.0;
  for (const auto& p : interpolation) {
    worst = std::max(worst, p.evaluated ? p.rel_error : std::numeric_limits<double>::infinity());
  }
  return worst;
}

namespace {

PointMatch match_point(const TransferFunction& full, const TransferFunction& rom, Complex s,
                       const char* origin) {
  PointMatch pm;
  pm.s = s;
  pm.origin = origin;
  if (!full.try_eval(s, pm.full) || !rom.try_eval(s, pm.rom)) return pm;
  if (!std::isfinite(std::abs(pm.full)) || !std::isfinite(std::abs(pm.rom))) return pm;
  pm.evaluated = true;
  pm.abs_error = std::abs(pm.full - pm.rom);
  pm.rel_error = std::abs(pm.full) > 0.0 ? pm.abs_error / std::abs(pm.full) : pm.abs_error;
  return pm;
}

}  // namespace

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) {
    throw InputError("log_grid: need 0 < lo < hi and at least 2 points");
  }
  std::vector<double> f(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i) {
    f[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  }
  return f;
}

std::vector<BodePoint> bode(const TransferFunction& tf, const std::vector<double>& freqs) {
  std::vector<BodePoint> out;
  out.reserve(freqs.size());
  std::optional<double> last_phase;
  for (double f : freqs) {
    BodePoint bp;
    bp.freq = f;
    Complex w;
    if (tf.try_eval(Complex(0.0, f), w) && std::abs(w) > 0.0 && std::isfinite(std::abs(w))) {
      bp.mag_db = 20.0 * std::log10(std::abs(w));
      double ph = std::arg(w) * 180.0 / std::numbers::pi;
      if (last_phase) {
        while (ph - *last_phase > 180.0) ph -= 360.0;
        while (ph - *last_phase < -180.0) ph += 360.0;
      }
      bp.phase_deg = ph;
      last_phase = ph;
    }
    out.push_back(bp);
  }
  return out;
}

MomentMatchReport moment_match_report(const StateSpaceModel& full, const ReducedOrderModel& rom,
                                      const GeneratorPair& g,
                                      const std::vector<double>& freq_grid) {
  const TransferFunction wf(full);
  const TransferFunction wr = rom.transfer_function();
  MomentMatchReport rep;
  for (const Complex s : g.set_S.points()) rep.interpolation.push_back(match_point(wf, wr, s, "S"));
  for (const Complex s : g.set_Q.points()) rep.interpolation.push_back(match_point(wf, wr, s, "Q"));
  for (double f : freq_grid) rep.grid.push_back(match_point(wf, wr, Complex(0.0, f), "grid"));
  const auto bf = bode(wf, freq_grid);
  const auto br = bode(wr, freq_grid);
  for (std::size_t i = 0; i < freq_grid.size(); ++i) {
    rep.bode.push_back({freq_grid[i], bf[i].mag_db, bf[i].phase_deg, br[i].mag_db,
                        br[i].phase_deg});
  }
  return rep;
}

namespace {

void cell(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << format_double(*v);
}

}  // namespace

void write_bode_csv(std::ostream& out, const std::vector<BodeRow>& rows) {
  out << "freq_rad_s,mag_full_db,phase_full_deg,mag_rom_db,phase_rom_deg\n";
  for (const auto& r : rows) {
    out << format_double(r.freq);
    cell(out, r.mag_full_db);
    cell(out, r.phase_full_deg);
    cell(out, r.mag_rom_db);
    cell(out, r.phase_rom_deg);
    out << '\n';
  }
}

void write_bode_csv(const std::filesystem::path& path, const std::vector<BodeRow>& rows) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_bode_csv(out, rows);
}

void write_moment_report(std::ostream& out, const MomentMatchReport& report) {
  out << "origin,s_re,s_im,full_re,full_im,rom_re,rom_im,abs_error,rel_error,evaluated\n";
  auto row = [&](const PointMatch& p) {
    out << p.origin << ',' << format_double(p.s.real()) << ',' << format_double(p.s.imag());
    if (p.evaluated) {
      out << ',' << format_double(p.full.real()) << ',' << format_double(p.full.imag()) << ','
          << format_double(p.rom.real()) << ',' << format_double(p.rom.imag()) << ','
          << format_double(p.abs_error) << ',' << format_double(p.rel_error) << ",1\n";
    } else {
      out << ",,,,,,,0\n";
    }
  };
  for (const auto& p : report.interpolation) row(p);
  for (const auto& p : report.grid) row(p);
}

void write_rom(const std::filesystem::path& dir, const ReducedOrderModel& rom,
               const std::string& prefix) {
  write_matrix_file(dir / (prefix + "F.txt"), rom.F);
  write_matrix_file(dir / (prefix + "G.txt"), rom.G);
  write_matrix_file(dir / (prefix + "H.txt"), rom.H);
  std::ofstream out(dir / (prefix + "provenance.txt"));
  if (!out) throw InputError("cannot write ROM provenance in '" + dir.string() + "'");
  out << "form=" << (rom.form == RomForm::q_form ? "q_form" : "s_form") << '\n';
  out << "order=" << rom.order() << '\n';
  out << "source=" << rom.provenance.source << '\n';
  out << "inverse=" << rom.provenance.inverse << '\n';
  out << "t_k=" << (rom.provenance.t_k ? format_double(*rom.provenance.t_k) : "") << '\n';
  out << "t_i=" << (rom.provenance.t_i ? format_double(*rom.provenance.t_i) : "") << '\n';
  for (const auto& w : rom.warnings) out << "warning=" << w << '\n';
}

}  // namespace tsmor
