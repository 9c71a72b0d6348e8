#pragma once

#include <optional>

#include <Eigen/Dense>

#include "tsmor/generators.hpp"
#include "tsmor/lti.hpp"

namespace tsmor {

// Condition-number ceiling for any matrix the library inverts.
inline constexpr double kConditionGate = 1e12;

// Solves  M X - X N = F  for X.
//
// Bartels-Stewart on complex Schur forms M = U T U^*, N = V R V^*; the
// transformed equation T Y - Y R = U^* F V is solved column by column
// with upper-triangular back-substitution. The real part of U Y V^* is
// returned (the solution is real for real data).
//
// Throws UniquenessError when sigma(M) and sigma(N) are closer than
// kDisjointTol.
Eigen::MatrixXd solve_sylvester_schur(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                                      const Eigen::MatrixXd& F);

// Brute force: (I (x) M - N^T (x) I) vec(X) = vec(F) by dense LU.
// Intended for cross-checking; limited to n * nu <= 5000.
Eigen::MatrixXd solve_sylvester_kronecker(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                                          const Eigen::MatrixXd& F);

enum class SylvesterMethod { schur, kronecker };

// A Pi + B L = Pi S
Eigen::MatrixXd solve_sylvester_pi(const StateSpaceModel& m, const GeneratorPair& g,
                                   SylvesterMethod method = SylvesterMethod::schur);
// Q Upsilon = Upsilon A + R C
Eigen::MatrixXd solve_sylvester_upsilon(const StateSpaceModel& m, const GeneratorPair& g,
                                        SylvesterMethod method = SylvesterMethod::schur);

struct MomentMatrices {
  Eigen::MatrixXd Pi;       // n x nu
  Eigen::MatrixXd Upsilon;  // nu x n
  Eigen::MatrixXd CPi;      // 1 x nu
  Eigen::MatrixXd UB;       // nu x 1
  Eigen::MatrixXd UPi;      // nu x nu
  std::optional<Eigen::MatrixXd> UPi_inv;
  double upi_condition = 0.0;
  // Set when cond(UPi) exceeds the gate (Upsilon Pi treated as singular).
  bool upi_singular = false;
  double pi_residual = 0.0;       // ||A Pi + B L - Pi S|| / (||A|| ||Pi|| + ||B|| ||L||)
  double upsilon_residual = 0.0;  // ||Q Ups - Ups A - R C|| / (||Q|| ||Ups|| + ||R|| ||C||)
};

MomentMatrices exact_moment_matrices(const StateSpaceModel& m, const GeneratorPair& g,
                                     SylvesterMethod method = SylvesterMethod::schur);

double condition_number(const Eigen::MatrixXd& M);

}  // namespace tsmor
