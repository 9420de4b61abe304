#include "qefctl/matfun.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

#include "qefctl/error.hpp"

namespace qefctl::matfun {
namespace {

constexpr Complex kI{0.0, 1.0};

void require_square(const CMatrix& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    fail(ErrorCategory::kValidation,
         std::string(who) + ": expected a non-empty square matrix");
  }
}

void require_finite(const CMatrix& m, const char* who) {
  if (!is_finite(m)) {
    fail(ErrorCategory::kValidation,
         std::string(who) + ": matrix has non-finite entries");
  }
}

// sinh(h)/h and tanh(h)/h with the removable singularity at 0 handled by
// truncated Taylor series.
double sinhc(double h) {
  if (std::abs(h) < 1e-4) {
    const double h2 = h * h;
    return 1.0 + h2 / 6.0 + h2 * h2 / 120.0;
  }
  return std::sinh(h) / h;
}

double tanhc(double h) {
  if (std::abs(h) < 1e-4) {
    const double h2 = h * h;
    return 1.0 - h2 / 3.0 + 2.0 * h2 * h2 / 15.0;
  }
  return std::tanh(h) / h;
}

// Hermitian part of i*M for an (approximately) skew-Hermitian M.
CMatrix hermitian_of_skew(const CMatrix& m) {
  const CMatrix h = kI * m;
  return 0.5 * (h + h.adjoint());
}

// phi1(X) = \int_0^1 e^{tX} dt, the top-right block of exp([[X, I], [0, 0]]).
CMatrix phi1(const CMatrix& x) {
  const Eigen::Index n = x.rows();
  CMatrix aug = CMatrix::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = x;
  aug.topRightCorner(n, n).setIdentity();
  return exp(aug).topRightCorner(n, n);
}

RMatrix real_part_checked(const CMatrix& z, const char* who) {
  const double scale = std::max(1.0, z.cwiseAbs().maxCoeff());
  if (z.imag().cwiseAbs().maxCoeff() > 1e-13 * scale) {
    fail(ErrorCategory::kNumerical,
         std::string(who) + ": imaginary residue for a real argument");
  }
  return z.real();
}

void check_tan_poles(const CMatrix& m) {
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  const double half_pi = 0.5 * std::numbers::pi;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const Complex z = es.eigenvalues()(k);
    // nearest odd multiple of pi/2
    const double j = std::round((z.real() / half_pi - 1.0) / 2.0);
    const double pole = (2.0 * j + 1.0) * half_pi;
    if (std::abs(z - Complex(pole, 0.0)) < 1e-8) {
      fail(ErrorCategory::kNumerical,
           "tanc: eigenvalue within 1e-8 of a pole of tan");
    }
  }
}

}  // namespace

bool is_finite(const CMatrix& m) {
  return m.real().allFinite() && m.imag().allFinite();
}

bool is_skew_hermitian(const CMatrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m + m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

CMatrix exp(const CMatrix& m) {
  require_square(m, "exp");
  require_finite(m, "exp");
  return m.exp();
}

RMatrix exp(const RMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    fail(ErrorCategory::kValidation, "exp: expected a square matrix");
  }
  if (!m.allFinite()) {
    fail(ErrorCategory::kValidation, "exp: matrix has non-finite entries");
  }
  return m.exp();
}

CMatrix cos(const CMatrix& m) {
  return 0.5 * (exp(CMatrix(kI * m)) + exp(CMatrix(-kI * m)));
}

CMatrix sin(const CMatrix& m) {
  return (exp(CMatrix(kI * m)) - exp(CMatrix(-kI * m))) / (2.0 * kI);
}

RMatrix cos(const RMatrix& m) {
  return real_part_checked(cos(CMatrix(m.cast<Complex>())), "cos");
}

RMatrix sin(const RMatrix& m) {
  return real_part_checked(sin(CMatrix(m.cast<Complex>())), "sin");
}

CMatrix sinc(const CMatrix& m) {
  require_square(m, "sinc");
  require_finite(m, "sinc");
  if (is_skew_hermitian(m)) {
    // M = -iH, sinc(-ih) = sinh(h)/h
    return hermitian_function(hermitian_of_skew(m),
                              [](double h) { return Complex(sinhc(h), 0.0); });
  }
  return 0.5 * (phi1(CMatrix(kI * m)) + phi1(CMatrix(-kI * m)));
}

CMatrix tanc(const CMatrix& m) {
  require_square(m, "tanc");
  require_finite(m, "tanc");
  if (is_skew_hermitian(m)) {
    // spectrum on the imaginary axis: tanc(-ih) = tanh(h)/h, no poles
    return hermitian_function(hermitian_of_skew(m),
                              [](double h) { return Complex(tanhc(h), 0.0); });
  }
  check_tan_poles(m);
  return cos(m).partialPivLu().solve(sinc(m));
}

CMatrix evaluate(EntireFn f, const CMatrix& m) {
  switch (f) {
    case EntireFn::kExp:
      return exp(m);
    case EntireFn::kCos:
      return cos(m);
    case EntireFn::kSin:
      return sin(m);
    case EntireFn::kSinc:
      return sinc(m);
  }
  fail(ErrorCategory::kValidation, "evaluate: unknown function");
}

CMatrix gateaux(EntireFn f, const CMatrix& beta, const CMatrix& gamma) {
  require_square(beta, "gateaux");
  if (gamma.rows() != beta.rows() || gamma.cols() != beta.cols()) {
    fail(ErrorCategory::kValidation, "gateaux: dimension mismatch");
  }
  const Eigen::Index n = beta.rows();
  CMatrix block = CMatrix::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = beta;
  block.bottomRightCorner(n, n) = beta;
  block.bottomLeftCorner(n, n) = gamma;
  return evaluate(f, block).bottomLeftCorner(n, n);
}

CMatrix gateaux_cos(const CMatrix& beta, const CMatrix& gamma) {
  return gateaux(EntireFn::kCos, beta, gamma);
}

CMatrix gateaux_sin(const CMatrix& beta, const CMatrix& gamma) {
  return gateaux(EntireFn::kSin, beta, gamma);
}

TraceAdjointPair trace_adjoint_check(EntireFn f, const CMatrix& alpha,
                                     const CMatrix& beta,
                                     const CMatrix& dbeta) {
  if (alpha.rows() != beta.rows() || alpha.cols() != beta.cols() ||
      dbeta.rows() != beta.rows() || dbeta.cols() != beta.cols()) {
    fail(ErrorCategory::kValidation, "trace_adjoint_check: dimension mismatch");
  }
  return {(alpha * gateaux(f, beta, dbeta)).trace(),
          (gateaux(f, beta, alpha) * dbeta).trace()};
}

CMatrix logm(const CMatrix& m) {
  require_square(m, "logm");
  require_finite(m, "logm");
  Eigen::ComplexEigenSolver<CMatrix> es(m, false);
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const Complex z = es.eigenvalues()(k);
    if (z.real() <= 1e-10 && std::abs(z.imag()) <= 1e-10) {
      fail(ErrorCategory::kNumerical,
           "logm: eigenvalue on or near the closed negative real axis");
    }
  }
  return m.log();
}

Complex logdet(const CMatrix& m) {
  require_square(m, "logdet");
  require_finite(m, "logdet");
  Eigen::PartialPivLU<CMatrix> lu(m);
  const CMatrix& packed = lu.matrixLU();
  double log_abs = 0.0;
  double arg = 0.0;
  for (Eigen::Index k = 0; k < packed.rows(); ++k) {
    const Complex u = packed(k, k);
    if (u == Complex(0.0, 0.0)) {
      fail(ErrorCategory::kNumerical, "logdet: singular matrix");
    }
    log_abs += std::log(std::abs(u));
    arg += std::arg(u);
  }
  if (lu.permutationP().determinant() < 0) arg += std::numbers::pi;
  // principal branch of the argument
  arg = std::remainder(arg, 2.0 * std::numbers::pi);
  return {log_abs, arg};
}

}  // namespace qefctl::matfun
