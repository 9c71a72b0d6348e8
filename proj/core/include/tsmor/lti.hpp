#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace tsmor {

using Complex = std::complex<double>;

// Default relative threshold for numerical rank decisions.
inline constexpr double kDefaultRankTol = 1e-10;

// Continuous-time SISO plant  x' = A x + B u,  y = C x.
class StateSpaceModel {
 public:
  // Throws StructuralError unless A is n x n, B is n x 1 and C is 1 x n.
  StateSpaceModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C);

  const Eigen::MatrixXd& A() const { return a_; }
  const Eigen::MatrixXd& B() const { return b_; }
  const Eigen::MatrixXd& C() const { return c_; }
  Eigen::Index n() const { return a_.rows(); }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
  Eigen::MatrixXd c_;
};

struct ValidationReport {
  Eigen::Index n = 0;
  double max_real_part = 0.0;
  bool stable = false;
  Eigen::Index controllability_rank = 0;
  Eigen::Index observability_rank = 0;
  bool minimal = false;
  // Stable and minimal: usable as the plant of an interconnection experiment.
  bool accepted() const { return stable && minimal; }
};

ValidationReport validate_model(const StateSpaceModel& m, double rank_tol = kDefaultRankTol);

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& M);
double max_real_part(const Eigen::MatrixXd& M);

// Count of singular values above rank_tol * sigma_max.
Eigen::Index numerical_rank(const Eigen::MatrixXd& M, double rank_tol = kDefaultRankTol);

// Rank of the Krylov matrix [v, Mv, ..., M^{n-1} v], computed with an
// orthonormal (Arnoldi) staircase instead of forming the powers explicitly.
// A new direction counts when its orthogonal component exceeds
// rank_tol * max(||M||_2, ||v||-normalized).
Eigen::Index krylov_rank(const Eigen::MatrixXd& M, const Eigen::VectorXd& v,
                         double rank_tol = kDefaultRankTol);

// Explicit [B, AB, ..., A^{n-1}B]; only meaningful for small, well-scaled n.
Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C);

// W(s) = C (sI - A)^{-1} B with the eigenvalues of A cached for the
// singularity guard |s - lambda| <= 1e-9 (1 + |lambda|).
class TransferFunction {
 public:
  TransferFunction(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, const Eigen::MatrixXd& C);
  explicit TransferFunction(const StateSpaceModel& m);

  // Throws SingularityError when s is within tolerance of a pole.
  Complex operator()(Complex s) const;
  // Same evaluation without the pole guard; returns false when guarded.
  bool try_eval(Complex s, Complex& out) const;

  const Eigen::VectorXcd& poles() const { return poles_; }

 private:
  Eigen::MatrixXcd a_;
  Eigen::VectorXcd b_;
  Eigen::RowVectorXcd c_;
  Eigen::VectorXcd poles_;
};

Complex transfer_eval(const StateSpaceModel& m, Complex s);

// e^{M t} by scaling and squaring with a diagonal Pade approximant
// (degree chosen from ||M t||_1, up to 13).
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M, double t = 1.0);

// Phi = e^{M dt}; requires dt > 0.
Eigen::MatrixXd exact_discretize(const Eigen::MatrixXd& M, double dt);

// Exact zero-order-hold pair: Phi = e^{M dt}, Gamma = int_0^dt e^{M s} ds N.
struct ZohPair {
  Eigen::MatrixXd Phi;
  Eigen::MatrixXd Gamma;
};
ZohPair zoh_discretize(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N, double dt);

}  // namespace tsmor
