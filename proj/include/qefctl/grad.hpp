#pragma once

#include <span>
#include <vector>

#include "qefctl/freq.hpp"
#include "qefctl/model.hpp"
#include "qefctl/quadrature.hpp"

namespace qefctl {

/// How psi is formed at a frequency.
///   kPrinted:  the block-triangular sin/cos expression with Psi^{-1};
///              rejects nodes where cond(Psi) > 1e8.
///   kRegular:  theta sinc'(theta Psi)[Delta^{-1} Phi] - cos'(theta Psi)[Delta^{-1}],
///              the same matrix without Psi^{-1}.
///   kAuto:     printed where Psi is well conditioned, regular elsewhere.
enum class PsiRoute { kAuto, kPrinted, kRegular };

/// phi = sinc(theta Psi) Delta^{-1}.
CMatrix phi_fn(const CMatrix& Phi, const CMatrix& Psi, const CMatrix& Delta,
               double theta);

/// psi by the printed expression; requires an invertible Psi.
CMatrix psi_fn(const CMatrix& Phi, const CMatrix& Psi, const CMatrix& Delta,
               double theta);

/// psi without Psi^{-1}; agrees with psi_fn wherever Psi is invertible.
CMatrix psi_fn_regular(const CMatrix& Phi, const CMatrix& Psi,
                       const CMatrix& Delta, double theta);

/// K1 = [[0, E], [I, 0], [0, K]] and K2 = [[0, I, 0], [C, 0, D]].
RMatrix build_K1(const DerivedPlant& plant, const Weights& w);
RMatrix build_K2(const DerivedPlant& plant);

struct ControllerGradient {
  RMatrix da;  // n x n
  RMatrix db;  // n x r
  RMatrix dc;  // d x n
};

/// Blocks (1,1), (1,2), (2,1) of scale * K1^T chi^T K2^T.
ControllerGradient sandwich(const DerivedPlant& plant, const Weights& w,
                            const RMatrix& chi, double scale);

struct GradReport {
  double ups = 0.0;  // growth rate from the same quadrature pass
  RMatrix chi;       // (2n+m) x (2n+nu), bottom-right m x nu block zero
  RMatrix dUps_da;
  RMatrix dUps_db;
  RMatrix dUps_dc;
  double quad_error = 0.0;     // max error estimate over all components
  int printed_nodes = 0;       // nodes where psi used the printed form
  int regular_nodes = 0;
  double lambda_max = 0.0;
  std::vector<Panel> panels;
};

struct GradOptions {
  QuadratureConfig quad;
  PsiRoute psi_route = PsiRoute::kAuto;
  double psi_cond_limit = 1e8;
};

/// Matrix of derivatives of the growth rate with respect to (cA, cB, cC),
/// per frequency before the real part and the 1/(2pi) factor:
/// [G cB; I] (F^*(phi + phi^*) + J F^*(psi - psi^*)) [cC G, I].
CMatrix chi_integrand(const ClosedLoop& cl, const FreqSample& s,
                      const CMatrix& phi, const CMatrix& psi);

/// chi = (1/4pi) Re \int_R P(chi_integrand), computed together with the
/// growth rate in a single adaptive pass.
GradReport chi_matrix(const ClosedLoop& cl, double theta,
                      const GradOptions& opts = {});

/// Growth rate and its Frechet derivatives with respect to (a, b, c).
GradReport frechet_derivatives(const DerivedPlant& plant, const Weights& w,
                               const ControllerParams& ctrl, double theta,
                               const GradOptions& opts = {});

/// Same on a fixed panel set (no adaptivity).
GradReport frechet_derivatives(const DerivedPlant& plant, const Weights& w,
                               const ControllerParams& ctrl, double theta,
                               double lambda_max, std::span<const Panel> panels,
                               const GradOptions& opts = {});

/// Frobenius norm of the stacked (da, db, dc).
double optimality_residual(const GradReport& report);
double optimality_residual(const ControllerGradient& g);

}  // namespace qefctl
