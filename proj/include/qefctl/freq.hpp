#pragma once

#include <span>
#include <utility>
#include <vector>

#include "qefctl/matfun.hpp"
#include "qefctl/model.hpp"
#include "qefctl/quadrature.hpp"

namespace qefctl {

/// G(i lambda) = (i lambda I - cA)^{-1}, by LU solve.
CMatrix resolvent(const RMatrix& calA, double lambda);

/// F(i lambda) = cC G(i lambda) cB.
CMatrix transfer(const ClosedLoop& cl, double lambda);

/// (Phi, Psi) = (F F^*, F J F^*).
std::pair<CMatrix, CMatrix> spectral_pair(const ClosedLoop& cl, double lambda);

/// Delta = cos(theta Psi) - theta Phi sinc(theta Psi).
CMatrix delta_matrix(const CMatrix& phi, const CMatrix& psi, double theta);

/// Everything the cost and gradient integrands need at one frequency.
struct FreqSample {
  double lambda = 0.0;
  CMatrix G;      // resolvent, 2n x 2n
  CMatrix GB;     // G cB, 2n x m
  CMatrix F;      // nu x m
  CMatrix Phi;    // Hermitian PSD
  CMatrix Psi;    // skew-Hermitian
  CMatrix Delta;
};

FreqSample sample(const ClosedLoop& cl, double lambda, double theta);

/// theta * lambda_max(Phi tanc(theta Psi)), via the Hermitian form
/// sqrt(T) Phi sqrt(T) with T = tanc(theta Psi).
double spec_value(const CMatrix& phi, const CMatrix& psi, double theta);

/// sigma_min(Psi) / sigma_max(Psi); 0 when Psi vanishes.
double psi_relative_sigma(const CMatrix& psi);

struct AdmissibilityReport {
  bool stable = false;
  double spec_sup = 0.0;          // sup over lambda of the spec value
  double spec_argmax = 0.0;       // frequency where it was attained
  double min_psi_rel_sigma = 0.0; // min over grid of sigma_min/sigma_max
  double psi_lambda = 0.0;        // frequency of that minimum
  bool spec_ok = false;           // spec_sup < 1 - margin
  bool psidet_ok = false;         // min_psi_rel_sigma > psi_threshold
  bool admissible = false;        // stable && spec_ok (see psidet note below)
  int grid_size = 0;
};

struct AdmissibilityConfig {
  double margin = 0.05;
  double psi_threshold = 1e-8;
  // When true, a singular Psi also makes the controller inadmissible.
  bool require_psidet = false;
};

/// Evaluates the spectral radius condition on the given frequency grid,
/// refined threefold, then polishes the maximizer with a golden-section
/// search.
AdmissibilityReport check_admissible(const ClosedLoop& cl, double theta,
                                     std::span<const double> grid,
                                     const AdmissibilityConfig& cfg = {});

/// Same, on a grid built from the adaptive quadrature nodes of Tr Phi.
AdmissibilityReport check_admissible(const ClosedLoop& cl, double theta,
                                     const AdmissibilityConfig& cfg = {});

/// sup over lambda of lambda_max(Phi(lambda)): the theta -> 0 scale of the
/// spectral condition (theta must stay below roughly its inverse).
double phi_peak(const ClosedLoop& cl);

/// theta at which the supremum of the spectral value equals level, located by
/// bisection (the supremum is nondecreasing in theta).
double theta_at_spec_level(const ClosedLoop& cl, double level, double rel_tol = 1e-6);

/// Largest theta that satisfies the spectral condition (without margin).
/// The supremum can approach 1 only asymptotically (tanh-like saturation
/// when Phi and i Psi share a rank-one direction); the value returned then
/// marks where it rounds to 1 in double precision.
double critical_theta(const ClosedLoop& cl, double rel_tol = 1e-6);

double default_lambda_max(const ClosedLoop& cl);

struct GrowthRate {
  double value = 0.0;
  double error_estimate = 0.0;
  double analytic_tail = 0.0;  // leading-order tail beyond lambda_max
  double lambda_max = 0.0;
  std::vector<Panel> panels;
  int evaluations = 0;
};

/// Per-frequency log det Delta(lambda). Under the spectral condition det Delta
/// is real and positive; a determinant off the positive axis throws an
/// inadmissibility error.
double log_det_delta(const CMatrix& delta);

/// Same quantity from (Phi, Psi) through the factored form
/// det Delta = det cosh(-i theta Psi) det(I - theta T^1/2 Phi T^1/2); accurate
/// where Delta is close to the identity.
double log_det_delta(const CMatrix& phi, const CMatrix& psi, double theta);

/// Upsilon = -(1/4pi) \int_R ln det Delta = -(1/2pi) \int_0^inf ln det Delta.
GrowthRate qef_growth_rate(const ClosedLoop& cl, double theta,
                           const QuadratureConfig& quad = {});

GrowthRate qef_growth_rate(const ClosedLoop& cl, double theta,
                           double lambda_max, std::span<const Panel> panels);

}  // namespace qefctl
