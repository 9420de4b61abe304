#include "qefctl/gramians.hpp"

#include "qefctl/error.hpp"

namespace qefctl {

RMatrix solve_lyapunov(const RMatrix& a, const RMatrix& w) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || w.rows() != n || w.cols() != n) {
    fail(ErrorCategory::kValidation, "solve_lyapunov: dimension mismatch");
  }
  if (!is_hurwitz(a)) {
    fail(ErrorCategory::kInadmissible,
         "solve_lyapunov: coefficient matrix is not Hurwitz");
  }
  Eigen::ComplexSchur<CMatrix> schur(a.cast<Complex>());
  if (schur.info() != Eigen::Success) {
    fail(ErrorCategory::kNumerical, "solve_lyapunov: Schur decomposition failed");
  }
  const CMatrix& t = schur.matrixT();
  const CMatrix& u = schur.matrixU();
  // T Y + Y T^* = F with F = -U^* W U; column j couples to columns k > j.
  const CMatrix f = -(u.adjoint() * w.cast<Complex>() * u);
  CMatrix y = CMatrix::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = f.col(j);
    for (Eigen::Index k = j + 1; k < n; ++k) {
      rhs -= std::conj(t(j, k)) * y.col(k);
    }
    CMatrix shifted = t;
    shifted.diagonal().array() += std::conj(t(j, j));
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  RMatrix x = (u * y * u.adjoint()).real();
  return 0.5 * (x + x.transpose());
}

GramianSet compute_gramians(const ClosedLoop& cl) {
  GramianSet g;
  g.sP = solve_lyapunov(cl.calA, cl.calB * cl.calB.transpose());
  g.Sigma = g.sP;
  g.sQ = solve_lyapunov(cl.calA.transpose(), cl.calC.transpose() * cl.calC);
  g.sH = g.sQ * g.sP;
  return g;
}

double lqg_cost(const ClosedLoop& cl) {
  const RMatrix sigma = solve_lyapunov(cl.calA, cl.calB * cl.calB.transpose());
  return 0.5 * (cl.calC * sigma * cl.calC.transpose()).trace();
}

RMatrix chi0(const ClosedLoop& cl) {
  const GramianSet g = compute_gramians(cl);
  const Eigen::Index n2 = cl.calA.rows();
  RMatrix t = RMatrix::Zero(n2 + cl.nu, n2 + cl.m);
  t.topLeftCorner(n2, n2) = g.sH;
  t.topRightCorner(n2, cl.m) = g.sQ * cl.calB;
  t.bottomLeftCorner(cl.nu, n2) = cl.calC * g.sP;
  return t.transpose();
}

}  // namespace qefctl
