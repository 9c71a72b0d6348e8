#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tsmor/lti.hpp"

namespace tsmor {

// Interpolation points on the imaginary axis. Each nonzero frequency f
// stands for the conjugate pair +-f i; a zero entry stands for the point 0.
class InterpolationSet {
 public:
  InterpolationSet() = default;
  // Throws InputError on negative, non-finite or repeated entries.
  explicit InterpolationSet(std::vector<double> frequencies);

  // Parses "2.3, 19.89,11.77".
  static InterpolationSet parse(std::string_view text);

  const std::vector<double>& frequencies() const { return freqs_; }
  // 2 per nonzero frequency, 1 for zero.
  Eigen::Index order() const;
  // The complex points, in realization order (+f i, -f i per block).
  std::vector<Complex> points() const;
  std::string to_string() const;

 private:
  std::vector<double> freqs_;
};

// Real realizations of  w' = S w, theta = L w  and  varpi' = Q varpi + R kappa.
struct GeneratorPair {
  Eigen::MatrixXd S;
  Eigen::MatrixXd L;
  Eigen::VectorXd omega0;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::Index nu = 0;
  InterpolationSet set_S;
  InterpolationSet set_Q;
};

// Absolute tolerance for "no common eigenvalues".
inline constexpr double kDisjointTol = 1e-8;

// Block-diagonal rotation realization of one set:
// [[0, f], [-f, 0]] per nonzero f, [0] for f = 0.
Eigen::MatrixXd rotation_generator(const InterpolationSet& set);
// [1, 0] per rotation block, 1 per scalar block (as a column).
Eigen::VectorXd rotation_port(const InterpolationSet& set);

// Throws AssumptionError on overlapping sets or mismatched orders.
GeneratorPair build_generator_pair(const InterpolationSet& set_S, const InterpolationSet& set_Q);

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  bool all_passed() const;
  const AssumptionCheck* find(std::string_view name) const;
  std::string to_string() const;
};

// Reporting only: never throws for assumption failures.
AssumptionReport check_assumptions(const StateSpaceModel& m, const GeneratorPair& g,
                                   double rank_tol = kDefaultRankTol);

// Minimum pairwise distance between two spectra.
double spectral_gap(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b);

}  // namespace tsmor
