#include "tsmor/lti.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "tsmor/errors.hpp"

namespace tsmor {

StateSpaceModel::StateSpaceModel(Eigen::MatrixXd A, Eigen::MatrixXd B, Eigen::MatrixXd C)
    : a_(std::move(A)), b_(std::move(B)), c_(std::move(C)) {
  const auto n = a_.rows();
  if (n == 0 || a_.cols() != n) {
    throw StructuralError("A must be square and non-empty, got " + std::to_string(a_.rows()) +
                          "x" + std::to_string(a_.cols()));
  }
  if (b_.rows() != n || b_.cols() != 1) {
    throw StructuralError("B must be " + std::to_string(n) + "x1, got " +
                          std::to_string(b_.rows()) + "x" + std::to_string(b_.cols()));
  }
  if (c_.rows() != 1 || c_.cols() != n) {
    throw StructuralError("C must be 1x" + std::to_string(n) + ", got " +
                          std::to_string(c_.rows()) + "x" + std::to_string(c_.cols()));
  }
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite()) {
    throw StructuralError("model matrices contain non-finite entries");
  }
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) {
    throw Error("eigenvalue computation did not converge");
  }
  return es.eigenvalues();
}

double max_real_part(const Eigen::MatrixXd& M) {
  return eigenvalues(M).real().maxCoeff();
}

Eigen::Index numerical_rank(const Eigen::MatrixXd& M, double rank_tol) {
  if (M.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double threshold = rank_tol * sv(0);
  return static_cast<Eigen::Index>((sv.array() > threshold).count());
}

Eigen::Index krylov_rank(const Eigen::MatrixXd& M, const Eigen::VectorXd& v, double rank_tol) {
  const auto n = M.rows();
  if (M.cols() != n || v.size() != n) {
    throw StructuralError("krylov_rank: dimension mismatch");
  }
  const double vnorm = v.norm();
  if (n == 0 || vnorm == 0.0) return 0;
  const double mnorm = n <= 400 ? Eigen::JacobiSVD<Eigen::MatrixXd>(M).singularValues()(0)
                                : M.norm();
  const double threshold = rank_tol * mnorm;

  Eigen::MatrixXd basis(n, n);
  basis.col(0) = v / vnorm;
  Eigen::Index rank = 1;
  while (rank < n) {
    Eigen::VectorXd w = M * basis.col(rank - 1);
    // Two passes of classical Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      const Eigen::VectorXd h = basis.leftCols(rank).transpose() * w;
      w.noalias() -= basis.leftCols(rank) * h;
    }
    const double h = w.norm();
    if (!(h > threshold)) break;
    basis.col(rank) = w / h;
    ++rank;
  }
  return rank;
}

Eigen::MatrixXd controllability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  const auto n = A.rows();
  Eigen::MatrixXd K(n, n * B.cols());
  K.leftCols(B.cols()) = B;
  for (Eigen::Index i = 1; i < n; ++i) {
    K.middleCols(i * B.cols(), B.cols()) = A * K.middleCols((i - 1) * B.cols(), B.cols());
  }
  return K;
}

Eigen::MatrixXd observability_matrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& C) {
  return controllability_matrix(A.transpose(), C.transpose()).transpose();
}

ValidationReport validate_model(const StateSpaceModel& m, double rank_tol) {
  ValidationReport r;
  r.n = m.n();
  r.max_real_part = max_real_part(m.A());
  r.stable = r.max_real_part < 0.0;
  r.controllability_rank = krylov_rank(m.A(), m.B().col(0), rank_tol);
  r.observability_rank = krylov_rank(m.A().transpose(), m.C().row(0).transpose(), rank_tol);
  r.minimal = r.controllability_rank == r.n && r.observability_rank == r.n;
  return r;
}

TransferFunction::TransferFunction(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                   const Eigen::MatrixXd& C)
    : a_(A.cast<Complex>()),
      b_(B.col(0).cast<Complex>()),
      c_(C.row(0).cast<Complex>()),
      poles_(eigenvalues(A)) {}

TransferFunction::TransferFunction(const StateSpaceModel& m)
    : TransferFunction(m.A(), m.B(), m.C()) {}

bool TransferFunction::try_eval(Complex s, Complex& out) const {
  for (Eigen::Index i = 0; i < poles_.size(); ++i) {
    if (std::abs(s - poles_(i)) <= 1e-9 * (1.0 + std::abs(poles_(i)))) return false;
  }
  Eigen::MatrixXcd shifted = -a_;
  shifted.diagonal().array() += s;
  const Eigen::VectorXcd x = shifted.partialPivLu().solve(b_);
  out = (c_ * x)(0);
  return true;
}

Complex TransferFunction::operator()(Complex s) const {
  Complex out;
  if (!try_eval(s, out)) {
    throw SingularityError("transfer function evaluated at a pole: s = (" +
                           std::to_string(s.real()) + "," + std::to_string(s.imag()) + ")");
  }
  return out;
}

Complex transfer_eval(const StateSpaceModel& m, Complex s) { return TransferFunction(m)(s); }

namespace {

// Pade coefficients b_0..b_m for the [m/m] approximant of exp.
constexpr double kPade3[] = {120.0, 60.0, 12.0, 1.0};
constexpr double kPade5[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
constexpr double kPade7[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                             25200.0,    1512.0,    56.0,      1.0};
constexpr double kPade9[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
                             2162160.0,     110880.0,     3960.0,       90.0,        1.0};
constexpr double kPade13[] = {64764752532480000.0,
                              32382376266240000.0,
                              7771770303897600.0,
                              1187353796428800.0,
                              129060195264000.0,
                              10559470521600.0,
                              670442572800.0,
                              33522128640.0,
                              1323241920.0,
                              40840800.0,
                              960960.0,
                              16380.0,
                              182.0,
                              1.0};

// theta_m bounds on ||A||_1 for double precision (Higham 2005).
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
Eigen::MatrixXd pade_low(const Eigen::MatrixXd& A, const double (&b)[N]) {
  const auto n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd A2 = A * A;
  Eigen::MatrixXd U = b[1] * I;
  Eigen::MatrixXd V = b[0] * I;
  Eigen::MatrixXd power = I;
  for (std::size_t k = 2; k < N; k += 2) {
    power = power * A2;
    U += b[k + 1] * power;
    V += b[k] * power;
  }
  U = A * U;
  return (V - U).partialPivLu().solve(V + U);
}

Eigen::MatrixXd pade13(const Eigen::MatrixXd& A) {
  const auto& b = kPade13;
  const auto n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd A2 = A * A;
  const Eigen::MatrixXd A4 = A2 * A2;
  const Eigen::MatrixXd A6 = A4 * A2;
  const Eigen::MatrixXd U =
      A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
           b[1] * I);
  const Eigen::MatrixXd V =
      A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
  return (V - U).partialPivLu().solve(V + U);
}

}  // namespace

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M, double t) {
  if (M.rows() != M.cols()) {
    throw StructuralError("matrix_exponential: matrix must be square");
  }
  if (!M.allFinite() || !std::isfinite(t)) {
    throw Error("matrix_exponential: non-finite input");
  }
  const Eigen::MatrixXd A = M * t;
  if (A.rows() == 0) return A;
  const double norm1 = A.cwiseAbs().colwise().sum().maxCoeff();
  Eigen::MatrixXd E;
  if (norm1 <= kTheta3) {
    E = pade_low(A, kPade3);
  } else if (norm1 <= kTheta5) {
    E = pade_low(A, kPade5);
  } else if (norm1 <= kTheta7) {
    E = pade_low(A, kPade7);
  } else if (norm1 <= kTheta9) {
    E = pade_low(A, kPade9);
  } else {
    int squarings = 0;
    if (norm1 > kTheta13) {
      squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
    }
    E = pade13(A / std::ldexp(1.0, squarings));
    for (int k = 0; k < squarings; ++k) E = E * E;
  }
  if (!E.allFinite()) {
    throw Error("matrix_exponential: overflow");
  }
  return E;
}

Eigen::MatrixXd exact_discretize(const Eigen::MatrixXd& M, double dt) {
  if (!(dt > 0.0)) {
    throw InputError("exact_discretize: dt must be positive");
  }
  return matrix_exponential(M, dt);
}

ZohPair zoh_discretize(const Eigen::MatrixXd& M, const Eigen::MatrixXd& N, double dt) {
  if (!(dt > 0.0)) {
    throw InputError("zoh_discretize: dt must be positive");
  }
  const auto n = M.rows();
  const auto m = N.cols();
  if (M.cols() != n || N.rows() != n) {
    throw StructuralError("zoh_discretize: dimension mismatch");
  }
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = M;
  aug.topRightCorner(n, m) = N;
  const Eigen::MatrixXd E = matrix_exponential(aug, dt);
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

}  // namespace tsmor
