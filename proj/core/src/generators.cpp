#include "tsmor/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tsmor/errors.hpp"
#include "tsmor/matrix_io.hpp"

namespace tsmor {

InterpolationSet::InterpolationSet(std::vector<double> frequencies) : freqs_(std::move(frequencies)) {
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    const double f = freqs_[i];
    if (!std::isfinite(f) || f < 0.0) {
      throw InputError("interpolation frequency must be finite and non-negative, got " +
                       format_double(f));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(freqs_[j] - f) <= kDisjointTol) {
        throw InputError("repeated interpolation frequency " + format_double(f));
      }
    }
  }
}

InterpolationSet InterpolationSet::parse(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::string buf(text);
  std::stringstream ss(buf);
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
      throw InputError("empty entry in frequency list '" + buf + "'");
    }
    const auto last = item.find_last_not_of(" \t\r\n");
    const std::string token = item.substr(first, last - first + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw InputError("invalid frequency '" + token + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) {
    throw InputError("empty frequency list");
  }
  return InterpolationSet(std::move(out));
}

Eigen::Index InterpolationSet::order() const {
  Eigen::Index nu = 0;
  for (double f : freqs_) nu += f == 0.0 ? 1 : 2;
  return nu;
}

std::vector<Complex> InterpolationSet::points() const {
  std::vector<Complex> pts;
  for (double f : freqs_) {
    if (f == 0.0) {
      pts.emplace_back(0.0, 0.0);
    } else {
      pts.emplace_back(0.0, f);
      pts.emplace_back(0.0, -f);
    }
  }
  return pts;
}

std::string InterpolationSet::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < freqs_.size(); ++i) {
    if (i > 0) s += ',';
    s += format_double(freqs_[i]);
  }
  return s;
}

Eigen::MatrixXd rotation_generator(const InterpolationSet& set) {
  const auto nu = set.order();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(nu, nu);
  Eigen::Index k = 0;
  for (double f : set.frequencies()) {
    if (f == 0.0) {
      ++k;
      continue;
    }
    S(k, k + 1) = f;
    S(k + 1, k) = -f;
    k += 2;
  }
  return S;
}

Eigen::VectorXd rotation_port(const InterpolationSet& set) {
  Eigen::VectorXd p = Eigen::VectorXd::Zero(set.order());
  Eigen::Index k = 0;
  for (double f : set.frequencies()) {
    p(k) = 1.0;
    k += f == 0.0 ? 1 : 2;
  }
  return p;
}

GeneratorPair build_generator_pair(const InterpolationSet& set_S, const InterpolationSet& set_Q) {
  if (set_S.frequencies().empty() || set_Q.frequencies().empty()) {
    throw AssumptionError("both interpolation sets must be non-empty");
  }
  for (double fs : set_S.frequencies()) {
    for (double fq : set_Q.frequencies()) {
      if (std::abs(fs - fq) <= kDisjointTol) {
        throw AssumptionError("interpolation sets share the point " + format_double(fs) +
                              " (sigma(S) and sigma(Q) must be disjoint)");
      }
    }
  }
  if (set_S.order() != set_Q.order()) {
    throw AssumptionError("generator orders differ: nu_S = " + std::to_string(set_S.order()) +
                          ", nu_Q = " + std::to_string(set_Q.order()));
  }
  GeneratorPair g;
  g.nu = set_S.order();
  g.S = rotation_generator(set_S);
  g.L = rotation_port(set_S).transpose();
  g.omega0 = Eigen::VectorXd::Ones(g.nu);
  g.Q = rotation_generator(set_Q);
  g.R = rotation_port(set_Q);
  g.set_S = set_S;
  g.set_Q = set_Q;
  return g;
}

double spectral_gap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      gap = std::min(gap, std::abs(a(i) - b(j)));
    }
  }
  return gap;
}

namespace {

double self_gap(const Eigen::VectorXcd& ev) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) gap = std::min(gap, std::abs(ev(i) - ev(j)));
  }
  return gap;
}

AssumptionCheck simple_imaginary(const std::string& name, const Eigen::MatrixXd& M) {
  const Eigen::VectorXcd ev = eigenvalues(M);
  const double gap = self_gap(ev);
  const double re = ev.size() ? ev.real().cwiseAbs().maxCoeff() : 0.0;
  const bool ok = gap > kDisjointTol && re <= kDisjointTol;
  std::ostringstream d;
  d << "min eigenvalue separation " << gap << ", max |Re| " << re;
  return {name, ok, d.str()};
}

AssumptionCheck rank_check(const std::string& name, Eigen::Index rank, Eigen::Index want) {
  return {name, rank == want, "rank " + std::to_string(rank) + " of " + std::to_string(want)};
}

AssumptionCheck disjoint(const std::string& name, const Eigen::VectorXcd& a,
                         const Eigen::VectorXcd& b) {
  const double gap = spectral_gap(a, b);
  std::ostringstream d;
  d << "min distance " << gap;
  return {name, gap > kDisjointTol, d.str()};
}

}  // namespace

bool AssumptionReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck* AssumptionReport::find(std::string_view name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string AssumptionReport::to_string() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.passed ? "pass " : "FAIL ") << c.name << ": " << c.detail << '\n';
  }
  return out.str();
}

AssumptionReport check_assumptions(const StateSpaceModel& m, const GeneratorPair& g,
                                   double rank_tol) {
  AssumptionReport r;
  const auto nu = g.nu;
  const ValidationReport v = validate_model(m, rank_tol);
  {
    std::ostringstream d;
    d << "max Re sigma(A) = " << v.max_real_part;
    r.checks.push_back({"plant-stable", v.stable, d.str()});
  }
  r.checks.push_back({"plant-minimal", v.minimal,
                      "controllability rank " + std::to_string(v.controllability_rank) +
                          ", observability rank " + std::to_string(v.observability_rank) +
                          " of " + std::to_string(v.n)});
  r.checks.push_back(rank_check("S-L-observable",
                                krylov_rank(g.S.transpose(), g.L.row(0).transpose(), rank_tol), nu));
  r.checks.push_back(rank_check("Q-R-controllable", krylov_rank(g.Q, g.R.col(0), rank_tol), nu));
  r.checks.push_back(simple_imaginary("S-simple-imaginary", g.S));
  r.checks.push_back(rank_check("S-omega0-excitable", krylov_rank(g.S, g.omega0, rank_tol), nu));
  r.checks.push_back(simple_imaginary("Q-simple-imaginary", g.Q));

  const Eigen::VectorXcd ea = eigenvalues(m.A());
  const Eigen::VectorXcd es = eigenvalues(g.S);
  const Eigen::VectorXcd eq = eigenvalues(g.Q);
  r.checks.push_back(disjoint("S-A-disjoint", es, ea));
  r.checks.push_back(disjoint("Q-A-disjoint", eq, ea));
  r.checks.push_back(disjoint("S-Q-disjoint", es, eq));
  r.checks.push_back({"UPi-rank-possible", nu <= m.n(),
                      "rank(Upsilon Pi) <= min(n, nu) = " + std::to_string(std::min(nu, m.n())) +
                          ", need " + std::to_string(nu)});
  return r;
}

}  // namespace tsmor
