#include "tsmor/oracle.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "tsmor/errors.hpp"

namespace tsmor {

namespace {

void check_sylvester_dims(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                          const Eigen::MatrixXd& F) {
  if (M.rows() != M.cols() || N.rows() != N.cols() || F.rows() != M.rows() ||
      F.cols() != N.rows()) {
    throw StructuralError("Sylvester equation: dimension mismatch");
  }
}

void check_unique(const Eigen::VectorXcd& em, const Eigen::VectorXcd& en) {
  const double gap = spectral_gap(em, en);
  if (!(gap > kDisjointTol)) {
    throw UniquenessError("Sylvester equation has no unique solution: spectra overlap (gap " +
                          std::to_string(gap) + ")");
  }
}

}  // namespace

Eigen::MatrixXd solve_sylvester_schur(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                                      const Eigen::MatrixXd& F) {
  check_sylvester_dims(M, N, F);
  const auto n = M.rows();
  const auto k = N.rows();
  if (n == 0 || k == 0) return Eigen::MatrixXd::Zero(n, k);

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur_m(M.cast<Complex>());
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur_n(N.cast<Complex>());
  if (schur_m.info() != Eigen::Success || schur_n.info() != Eigen::Success) {
    throw Error("Schur decomposition did not converge");
  }
  const Eigen::MatrixXcd& T = schur_m.matrixT();
  const Eigen::MatrixXcd& U = schur_m.matrixU();
  const Eigen::MatrixXcd& Rt = schur_n.matrixT();
  const Eigen::MatrixXcd& V = schur_n.matrixU();
  check_unique(T.diagonal(), Rt.diagonal());

  const Eigen::MatrixXcd Ft = U.adjoint() * F.cast<Complex>() * V;
  Eigen::MatrixXcd Y(n, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXcd rhs = Ft.col(j);
    if (j > 0) rhs.noalias() += Y.leftCols(j) * Rt.col(j).head(j);
    Eigen::MatrixXcd shifted = T;
    shifted.diagonal().array() -= Rt(j, j);
    Y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return (U * Y * V.adjoint()).real();
}

Eigen::MatrixXd solve_sylvester_kronecker(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N,
                                          const Eigen::MatrixXd& F) {
  check_sylvester_dims(M, N, F);
  const auto n = M.rows();
  const auto k = N.rows();
  if (n * k > 5000) {
    throw InputError("Kronecker Sylvester solve limited to n*nu <= 5000");
  }
  check_unique(eigenvalues(M), eigenvalues(N));
  // vec(M X) = (I_k (x) M) vec X,  vec(X N) = (N^T (x) I_n) vec X.
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * k, n * k);
  for (Eigen::Index j = 0; j < k; ++j) {
    K.block(j * n, j * n, n, n) += M;
    for (Eigen::Index i = 0; i < k; ++i) {
      K.block(j * n, i * n, n, n).diagonal().array() -= N(i, j);
    }
  }
  const Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(F.data(), n * k);
  const Eigen::VectorXd x = K.fullPivLu().solve(f);
  return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, k);
}

namespace {

Eigen::MatrixXd solve(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N, const Eigen::MatrixXd& F,
                      SylvesterMethod method) {
  return method == SylvesterMethod::schur ? solve_sylvester_schur(M, N, F)
                                          : solve_sylvester_kronecker(M, N, F);
}

}  // namespace

Eigen::MatrixXd solve_sylvester_pi(const StateSpaceModel& m, const GeneratorPair& g,
                                   SylvesterMethod method) {
  // A Pi - Pi S = -B L
  return solve(m.A(), g.S, -m.B() * g.L, method);
}

Eigen::MatrixXd solve_sylvester_upsilon(const StateSpaceModel& m, const GeneratorPair& g,
                                        SylvesterMethod method) {
  // Q Ups - Ups A = R C
  return solve(g.Q, m.A(), g.R * m.C(), method);
}

double condition_number(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double smin = sv(sv.size() - 1);
  if (smin == 0.0) return std::numeric_limits<double>::infinity();
  return sv(0) / smin;
}

MomentMatrices exact_moment_matrices(const StateSpaceModel& m, const GeneratorPair& g,
                                     SylvesterMethod method) {
  MomentMatrices mm;
  mm.Pi = solve_sylvester_pi(m, g, method);
  mm.Upsilon = solve_sylvester_upsilon(m, g, method);
  mm.CPi = m.C() * mm.Pi;
  mm.UB = mm.Upsilon * m.B();
  mm.UPi = mm.Upsilon * mm.Pi;

  const double pi_scale = m.A().norm() * mm.Pi.norm() + m.B().norm() * g.L.norm();
  mm.pi_residual = (m.A() * mm.Pi + m.B() * g.L - mm.Pi * g.S).norm() / pi_scale;
  const double ups_scale = g.Q.norm() * mm.Upsilon.norm() + g.R.norm() * m.C().norm();
  mm.upsilon_residual = (g.Q * mm.Upsilon - mm.Upsilon * m.A() - g.R * m.C()).norm() / ups_scale;

  mm.upi_condition = condition_number(mm.UPi);
  mm.upi_singular = !(mm.upi_condition <= kConditionGate);
  if (!mm.upi_singular) {
    const auto nu = mm.UPi.rows();
    mm.UPi_inv = mm.UPi.partialPivLu().solve(Eigen::MatrixXd::Identity(nu, nu));
  }
  return mm;
}

}  // namespace tsmor
