#include "qefctl/oracle.hpp"

#include <cmath>
#include <numbers>

#include "qefctl/detail/dense_eigen.hpp"
#include "qefctl/error.hpp"
#include "qefctl/gramians.hpp"

namespace qefctl {
namespace {

double tanhc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0;
  }
  return std::tanh(x) / x;
}

double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

void require_stable(const ClosedLoop& cl) {
  if (!is_hurwitz(cl.calA)) {
    fail(ErrorCategory::kInadmissible, "oracle: closed loop is not Hurwitz");
  }
}

// Q diag(d) Q^T
RMatrix spectral_synthesis(const RMatrix& q, const Eigen::VectorXd& d) {
  return (q * d.asDiagonal()) * q.transpose();
}

Eigen::VectorXd tanc_values(const Eigen::VectorXd& sigma, double theta) {
  Eigen::VectorXd k(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) k(i) = tanhc(theta * sigma(i));
  return k;
}

}  // namespace

CCRKernel ccr_kernel(const ClosedLoop& cl, std::span<const double> tau) {
  CCRKernel k;
  k.n = cl.n;
  for (double t : tau) {
    k.tau.push_back(t);
    if (t >= 0.0) {
      k.lambda.push_back(matfun::exp(RMatrix(t * cl.calA)) * cl.Gamma);
    } else {
      k.lambda.push_back(cl.Gamma * matfun::exp(RMatrix(-t * cl.calA.transpose())));
    }
  }
  return k;
}

RMatrix mho_kernel(const ClosedLoop& cl, double tau) {
  const double t[] = {tau};
  return cl.calC * ccr_kernel(cl, t).lambda[0] * cl.calC.transpose();
}

RMatrix covariance_kernel(const ClosedLoop& cl, const RMatrix& sigma,
                          double tau) {
  const RMatrix p = cl.calC * matfun::exp(RMatrix(std::abs(tau) * cl.calA)) *
                    sigma * cl.calC.transpose();
  return tau >= 0.0 ? p : RMatrix(p.transpose());
}

OracleGrid build_operators(const ClosedLoop& cl, double theta, double T, int N) {
  require_stable(cl);
  if (N < 2) fail(ErrorCategory::kValidation, "oracle: N must be >= 2");
  if (!(T > 0.0)) fail(ErrorCategory::kValidation, "oracle: T must be positive");
  if (!(theta >= 0.0)) fail(ErrorCategory::kValidation, "oracle: theta must be >= 0");

  OracleGrid g;
  g.T = T;
  g.N = N;
  g.nu = cl.nu;
  g.theta = theta;
  const double h = T / (N - 1);
  g.nodes = Eigen::VectorXd::LinSpaced(N, 0.0, T);
  g.weights = Eigen::VectorXd::Constant(N, h);
  g.weights(0) = g.weights(N - 1) = 0.5 * h;

  // Kernel samples at lags k h, k >= 0.
  const RMatrix sigma = solve_lyapunov(cl.calA, cl.calB * cl.calB.transpose());
  const RMatrix step = matfun::exp(RMatrix(h * cl.calA));
  const RMatrix ct = cl.calC.transpose();
  std::vector<RMatrix> mho(N), cov(N);
  RMatrix power = RMatrix::Identity(cl.calA.rows(), cl.calA.rows());
  for (int k = 0; k < N; ++k) {
    mho[k] = cl.calC * power * cl.Gamma * ct;
    cov[k] = cl.calC * power * sigma * ct;
    power = step * power;
  }
  mho[0] = 0.5 * (mho[0] - mho[0].transpose()).eval();
  cov[0] = 0.5 * (cov[0] + cov[0].transpose()).eval();

  const int nu = cl.nu;
  const Eigen::Index dim = static_cast<Eigen::Index>(N) * nu;
  g.L.resize(dim, dim);
  g.P.resize(dim, dim);
  const Eigen::VectorXd sw = g.weights.cwiseSqrt();
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double s = sw(i) * sw(j);
      const RMatrix lb = s * mho[i - j];
      const RMatrix pb = s * cov[i - j];
      g.L.block(i * nu, j * nu, nu, nu) = lb;
      g.P.block(i * nu, j * nu, nu, nu) = pb;
      if (i != j) {
        g.L.block(j * nu, i * nu, nu, nu) = -lb.transpose();
        g.P.block(j * nu, i * nu, nu, nu) = pb.transpose();
      }
    }
  }

  detail::SymmetricEigen es =
      detail::symmetric_eigen(g.L.transpose() * g.L, /*with_vectors=*/true);
  g.l_sigma = es.values.cwiseMax(0.0).cwiseSqrt();
  g.l_vectors = std::move(es.vectors);
  g.K = spectral_synthesis(g.l_vectors, tanc_values(g.l_sigma, theta));
  return g;
}

RMatrix tanc_operator(const OracleGrid& grid, double theta) {
  return spectral_synthesis(grid.l_vectors, tanc_values(grid.l_sigma, theta));
}

Eigen::VectorXd tanc_spectrum(const OracleGrid& grid, double theta) {
  return tanc_values(grid.l_sigma, theta);
}

OracleResult finite_horizon_qef(const OracleGrid& grid, double theta,
                                const OracleOptions& opts) {
  OracleResult out;
  const double smax = grid.l_sigma.size() ? grid.l_sigma.maxCoeff() : 0.0;
  out.min_rel_l_sigma = smax > 0.0 ? grid.l_sigma.minCoeff() / smax : 0.0;
  if (opts.reject_zero_eigenvalues && out.min_rel_l_sigma < 1e-8) {
    fail(ErrorCategory::kNumerical,
         "oracle: the commutator operator has a (numerically) zero eigenvalue");
  }

  double log_cos = 0.0;
  for (Eigen::Index k = 0; k < grid.l_sigma.size(); ++k) {
    log_cos += log_cosh(theta * grid.l_sigma(k));
  }

  // sqrt(K) P sqrt(K) in the eigenbasis of L^T L: D (Q^T P Q) D.
  const RMatrix& q = grid.l_vectors;
  const Eigen::VectorXd root = tanc_values(grid.l_sigma, theta).cwiseSqrt();
  RMatrix m = q.transpose() * grid.P * q;
  m = root.asDiagonal() * m * root.asDiagonal();
  m = 0.5 * (m + m.transpose()).eval();
  const Eigen::VectorXd mu = detail::symmetric_eigen(std::move(m), false).values;

  const double top = mu.maxCoeff();
  out.min_pk_eig = mu.minCoeff();
  out.spec_value = theta * top;
  if (out.min_pk_eig < -1e-9 * std::max(1.0, std::abs(top))) {
    fail(ErrorCategory::kNumerical,
         "oracle: discretized covariance operator is not PSD; refine the grid");
  }
  if (out.spec_value >= 1.0) {
    fail(ErrorCategory::kInadmissible,
         "oracle: theta * lambda_max(P K) >= 1, the exponential moment diverges");
  }
  double log_det = 0.0;
  for (Eigen::Index k = 0; k < mu.size(); ++k) log_det += std::log1p(-theta * mu(k));
  out.ln_xi = -0.5 * (log_cos + log_det);
  return out;
}

double quantum_covariance_min_eig(const OracleGrid& grid) {
  CMatrix h = grid.P.cast<Complex>() + Complex(0.0, 1.0) * grid.L.cast<Complex>();
  return detail::hermitian_eigenvalues(std::move(h)).minCoeff();
}

std::vector<GrowthEstimate> growth_rate_estimate(const ClosedLoop& cl,
                                                 double theta,
                                                 std::span<const double> horizons,
                                                 int N) {
  std::vector<GrowthEstimate> out;
  for (double T : horizons) {
    const OracleGrid g = build_operators(cl, theta, T, N);
    out.push_back({T, finite_horizon_qef(g, theta).ln_xi / T});
  }
  return out;
}

double default_oracle_horizon(const ClosedLoop& cl) {
  require_stable(cl);
  return 40.0 / std::abs(spectral_abscissa(cl.calA));
}

}  // namespace qefctl
