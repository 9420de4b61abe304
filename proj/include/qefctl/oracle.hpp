#pragma once

#include <span>
#include <vector>

#include "qefctl/matfun.hpp"
#include "qefctl/model.hpp"

namespace qefctl {

/// Two-point CCR kernel Lambda(tau) = e^{tau cA} Gamma (tau >= 0) and
/// Gamma e^{-tau cA^T} (tau < 0), sampled on a grid.
struct CCRKernel {
  int n = 0;
  std::vector<double> tau;
  std::vector<RMatrix> lambda;  // 2n x 2n each

  // (row, col) n x n block of Lambda at sample k; row, col in {0, 1}.
  RMatrix block(std::size_t k, int row, int col) const {
    return lambda[k].block(row * n, col * n, n, n);
  }
};

CCRKernel ccr_kernel(const ClosedLoop& cl, std::span<const double> tau);

/// Nystrom discretization of the commutator and covariance operators on
/// [0, T] with trapezoidal weights and symmetric sqrt(w) scaling, so that L
/// is exactly antisymmetric and P exactly symmetric.
struct OracleGrid {
  double T = 0.0;
  int N = 0;
  int nu = 0;
  double theta = 0.0;
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  RMatrix L;  // N nu x N nu, real antisymmetric
  RMatrix P;  // N nu x N nu, real symmetric PSD
  // Spectral data of L^T L = -L^2; L has eigenvalues +- i sigma.
  Eigen::VectorXd l_sigma;  // sigma >= 0, ascending
  RMatrix l_vectors;
  RMatrix K;  // tanc(theta L), real symmetric with spectrum in (0, 1]
};

/// mho(tau) = cC Lambda(tau) cC^T.
RMatrix mho_kernel(const ClosedLoop& cl, double tau);
/// P(tau) = cC e^{tau cA} Sigma cC^T for tau >= 0, P(-tau)^T otherwise.
RMatrix covariance_kernel(const ClosedLoop& cl, const RMatrix& sigma,
                          double tau);

OracleGrid build_operators(const ClosedLoop& cl, double theta, double T, int N);

/// tanc(theta L) from the stored spectral data.
RMatrix tanc_operator(const OracleGrid& grid, double theta);

/// Eigenvalues of tanc(theta L): tanh(theta sigma) / (theta sigma).
Eigen::VectorXd tanc_spectrum(const OracleGrid& grid, double theta);

struct OracleOptions {
  // Reject when min |eig(L)| < 1e-8 max |eig(L)|.
  bool reject_zero_eigenvalues = false;
};

struct OracleResult {
  double ln_xi = 0.0;
  double spec_value = 0.0;       // theta * lambda_max(P K)
  double min_rel_l_sigma = 0.0;  // min |eig L| / max |eig L|
  double min_pk_eig = 0.0;       // smallest eigenvalue of sqrt(K) P sqrt(K)
};

/// ln Xi_T = -1/2 Tr(ln cos(theta L) + ln(I - theta P K)).
OracleResult finite_horizon_qef(const OracleGrid& grid, double theta,
                                const OracleOptions& opts = {});

/// Smallest eigenvalue of the Hermitian operator P + iL.
double quantum_covariance_min_eig(const OracleGrid& grid);

struct GrowthEstimate {
  double T = 0.0;
  double ln_xi_over_T = 0.0;
};

std::vector<GrowthEstimate> growth_rate_estimate(const ClosedLoop& cl,
                                                 double theta,
                                                 std::span<const double> horizons,
                                                 int N);

/// 40 / |Re lambda_max(cA)|.
double default_oracle_horizon(const ClosedLoop& cl);

}  // namespace qefctl
