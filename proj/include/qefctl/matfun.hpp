#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qefctl {

using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

namespace matfun {

// The fixed set of entire functions whose Gateaux derivatives the gradient
// path needs. sinc is entire (sin z / z with sinc 0 = 1).
enum class EntireFn { kExp, kCos, kSin, kSinc };

/// Matrix exponential by scaling and squaring with a Pade kernel.
/// Throws a validation error on non-finite input.
CMatrix exp(const CMatrix& m);
RMatrix exp(const RMatrix& m);

/// cos M = (e^{iM} + e^{-iM}) / 2 and sin M = (e^{iM} - e^{-iM}) / 2i,
/// always through the exponential so defective arguments are fine.
CMatrix cos(const CMatrix& m);
CMatrix sin(const CMatrix& m);

/// Real-argument versions; the imaginary residue is checked and discarded.
RMatrix cos(const RMatrix& m);
RMatrix sin(const RMatrix& m);

/// sinc M. Skew-Hermitian arguments go through the eigendecomposition of the
/// Hermitian matrix iM; anything else through the integral
/// sinc M = \int_0^1 cos(tM) dt evaluated with an augmented exponential.
CMatrix sinc(const CMatrix& m);

/// tanc M = tan M / M. Throws when an eigenvalue of M lies within 1e-8 of an
/// odd multiple of pi/2.
CMatrix tanc(const CMatrix& m);

/// f(M) for the enumerated functions.
CMatrix evaluate(EntireFn f, const CMatrix& m);

/// Gateaux derivative f'(beta)[gamma], read off as the (2,1) block of
/// f([[beta, 0], [gamma, beta]]).
CMatrix gateaux(EntireFn f, const CMatrix& beta, const CMatrix& gamma);
CMatrix gateaux_cos(const CMatrix& beta, const CMatrix& gamma);
CMatrix gateaux_sin(const CMatrix& beta, const CMatrix& gamma);

struct TraceAdjointPair {
  Complex lhs;  // Tr(alpha f'(beta)[dbeta])
  Complex rhs;  // Tr(f'(beta)[alpha] dbeta)
};

// Both sides of the trace adjoint identity for the first variation of f.
TraceAdjointPair trace_adjoint_check(EntireFn f, const CMatrix& alpha,
                                     const CMatrix& beta,
                                     const CMatrix& dbeta);

/// Principal matrix logarithm. Rejects eigenvalues within 1e-10 of the closed
/// negative real axis.
CMatrix logm(const CMatrix& m);

/// log det M from a partially pivoted LU factorization. The imaginary part is
/// the principal argument of det M, so it agrees with Tr(logm M) modulo 2*pi.
Complex logdet(const CMatrix& m);

/// Applies a scalar function to a Hermitian matrix through its eigenbasis.
template <typename ScalarFn>
CMatrix hermitian_function(const CMatrix& h, ScalarFn&& fn) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const Eigen::VectorXd& ev = es.eigenvalues();
  Eigen::VectorXcd fv(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) fv(k) = fn(ev(k));
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

bool is_skew_hermitian(const CMatrix& m, double rel_tol = 1e-13);
bool is_finite(const CMatrix& m);

}  // namespace matfun
}  // namespace qefctl
