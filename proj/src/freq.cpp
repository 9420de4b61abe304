#include "qefctl/freq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qefctl/error.hpp"

namespace qefctl {
namespace {

constexpr Complex kI{0.0, 1.0};

double tanhc(double h) {
  if (std::abs(h) < 1e-4) {
    const double h2 = h * h;
    return 1.0 - h2 / 3.0 + 2.0 * h2 * h2 / 15.0;
  }
  return std::tanh(h) / h;
}

void require_stable(const ClosedLoop& cl, const char* who) {
  if (!is_hurwitz(cl.calA)) {
    fail(ErrorCategory::kInadmissible,
         std::string(who) + ": closed-loop matrix is not Hurwitz");
  }
}

// Grid for the spectral-condition supremum: adaptive quadrature nodes of
// Tr Phi, which cluster where the resolvent has structure.
std::vector<double> spectral_grid(const ClosedLoop& cl) {
  const double lmax = default_lambda_max(cl);
  QuadratureConfig q;
  q.abs_tol = 1e-12;
  q.rel_tol = 1e-6;
  const auto f = [&](double lambda) {
    Eigen::VectorXd v(1);
    v(0) = transfer(cl, lambda).squaredNorm();
    return v;
  };
  const QuadratureResult r = integrate_half_line(f, 1, lmax, q);
  std::vector<double> nodes = quadrature_nodes(r.panels, lmax);
  nodes.insert(nodes.begin(), 0.0);
  return nodes;
}

// Threefold refinement of a sorted grid.
std::vector<double> refine3(std::span<const double> grid) {
  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    out.push_back(sorted[k]);
    if (k + 1 < sorted.size()) {
      const double h = (sorted[k + 1] - sorted[k]) / 3.0;
      out.push_back(sorted[k] + h);
      out.push_back(sorted[k] + 2.0 * h);
    }
  }
  return out;
}

template <typename Fn>
std::pair<double, double> grid_max(std::span<const double> grid, Fn&& fn) {
  std::size_t best = 0;
  std::vector<double> vals(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    vals[k] = fn(grid[k]);
    if (vals[k] > vals[best]) best = k;
  }
  // golden-section polish between the neighbours of the best node
  double lo = grid[best > 0 ? best - 1 : 0];
  double hi = grid[best + 1 < grid.size() ? best + 1 : best];
  double arg = grid[best];
  double val = vals[best];
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo);
  double x2 = lo + g * (hi - lo);
  double f1 = fn(x1);
  double f2 = fn(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-12 * (1.0 + std::abs(hi)); ++it) {
    if (f1 > f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = fn(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = fn(x2);
    }
  }
  if (f1 > val) {
    val = f1;
    arg = x1;
  }
  if (f2 > val) {
    val = f2;
    arg = x2;
  }
  return {val, arg};
}

double sup_spec(const ClosedLoop& cl, double theta,
                std::span<const double> grid) {
  return grid_max(grid, [&](double lambda) {
           const auto [phi, psi] = spectral_pair(cl, lambda);
           return spec_value(phi, psi, theta);
         }).first;
}

}  // namespace

CMatrix resolvent(const RMatrix& calA, double lambda) {
  const Eigen::Index n = calA.rows();
  CMatrix shifted = -calA.cast<Complex>();
  shifted.diagonal().array() += Complex(0.0, lambda);
  Eigen::PartialPivLU<CMatrix> lu(shifted);
  const CMatrix id = CMatrix::Identity(n, n);
  CMatrix g = lu.solve(id);
  const double residual = (shifted * g - id).cwiseAbs().maxCoeff();
  if (!g.allFinite() || residual > 1e-11 * std::max(1.0, g.cwiseAbs().maxCoeff() *
                                                            shifted.cwiseAbs().maxCoeff())) {
    fail(ErrorCategory::kInadmissible,
         "resolvent: i*lambda is (numerically) an eigenvalue of the closed loop");
  }
  return g;
}

CMatrix transfer(const ClosedLoop& cl, double lambda) {
  return cl.calC.cast<Complex>() * resolvent(cl.calA, lambda) *
         cl.calB.cast<Complex>();
}

std::pair<CMatrix, CMatrix> spectral_pair(const ClosedLoop& cl, double lambda) {
  const CMatrix f = transfer(cl, lambda);
  CMatrix phi = f * f.adjoint();
  CMatrix psi = f * cl.J.cast<Complex>() * f.adjoint();
  // exact symmetry classes
  phi = 0.5 * (phi + phi.adjoint()).eval();
  psi = 0.5 * (psi - psi.adjoint()).eval();
  return {phi, psi};
}

CMatrix delta_matrix(const CMatrix& phi, const CMatrix& psi, double theta) {
  if (theta == 0.0) return CMatrix::Identity(phi.rows(), phi.cols());
  const CMatrix arg = theta * psi;
  return matfun::cos(arg) - theta * phi * matfun::sinc(arg);
}

FreqSample sample(const ClosedLoop& cl, double lambda, double theta) {
  FreqSample s;
  s.lambda = lambda;
  s.G = resolvent(cl.calA, lambda);
  s.GB = s.G * cl.calB.cast<Complex>();
  s.F = cl.calC.cast<Complex>() * s.GB;
  s.Phi = s.F * s.F.adjoint();
  s.Phi = 0.5 * (s.Phi + s.Phi.adjoint()).eval();
  s.Psi = s.F * cl.J.cast<Complex>() * s.F.adjoint();
  s.Psi = 0.5 * (s.Psi - s.Psi.adjoint()).eval();
  s.Delta = delta_matrix(s.Phi, s.Psi, theta);
  return s;
}

double spec_value(const CMatrix& phi, const CMatrix& psi, double theta) {
  const CMatrix h = kI * theta * psi;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()));
  Eigen::VectorXd root(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < root.size(); ++k) {
    root(k) = std::sqrt(tanhc(es.eigenvalues()(k)));
  }
  const CMatrix& v = es.eigenvectors();
  const CMatrix sqrt_t = v * root.cast<Complex>().asDiagonal() * v.adjoint();
  CMatrix sym = sqrt_t * phi * sqrt_t;
  sym = 0.5 * (sym + sym.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> top(sym, Eigen::EigenvaluesOnly);
  return theta * top.eigenvalues().maxCoeff();
}

double psi_relative_sigma(const CMatrix& psi) {
  Eigen::JacobiSVD<CMatrix> svd(psi);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

AdmissibilityReport check_admissible(const ClosedLoop& cl, double theta,
                                     std::span<const double> grid,
                                     const AdmissibilityConfig& cfg) {
  AdmissibilityReport rep;
  rep.stable = is_hurwitz(cl.calA);
  if (!rep.stable) return rep;
  const std::vector<double> fine = refine3(grid);
  rep.grid_size = static_cast<int>(fine.size());
  const auto [sup, arg] = grid_max(fine, [&](double lambda) {
    const auto [phi, psi] = spectral_pair(cl, lambda);
    return spec_value(phi, psi, theta);
  });
  rep.spec_sup = sup;
  rep.spec_argmax = arg;
  rep.min_psi_rel_sigma = std::numeric_limits<double>::infinity();
  for (double lambda : fine) {
    const double s = psi_relative_sigma(spectral_pair(cl, lambda).second);
    if (s < rep.min_psi_rel_sigma) {
      rep.min_psi_rel_sigma = s;
      rep.psi_lambda = lambda;
    }
  }
  rep.spec_ok = rep.spec_sup < 1.0 - cfg.margin;
  rep.psidet_ok = rep.min_psi_rel_sigma > cfg.psi_threshold;
  rep.admissible = rep.stable && rep.spec_ok &&
                   (rep.psidet_ok || !cfg.require_psidet);
  return rep;
}

AdmissibilityReport check_admissible(const ClosedLoop& cl, double theta,
                                     const AdmissibilityConfig& cfg) {
  if (!is_hurwitz(cl.calA)) return {};
  return check_admissible(cl, theta, spectral_grid(cl), cfg);
}

double phi_peak(const ClosedLoop& cl) {
  require_stable(cl, "phi_peak");
  const std::vector<double> fine = refine3(spectral_grid(cl));
  return grid_max(fine, [&](double lambda) {
           const CMatrix f = transfer(cl, lambda);
           Eigen::SelfAdjointEigenSolver<CMatrix> es(f * f.adjoint(),
                                                     Eigen::EigenvaluesOnly);
           return es.eigenvalues().maxCoeff();
         }).first;
}

double theta_at_spec_level(const ClosedLoop& cl, double level, double rel_tol) {
  require_stable(cl, "theta_at_spec_level");
  if (!(level > 0.0)) fail(ErrorCategory::kValidation, "spectral level must be positive");
  // theta tanhc(i theta Psi) grows in the Loewner order with theta, so the
  // supremum is monotone and bisection applies.
  const std::vector<double> fine = refine3(spectral_grid(cl));
  double lo = 0.0;
  double hi = 1.0;
  while (sup_spec(cl, hi, fine) < level) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (sup_spec(cl, mid, fine) < level) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double critical_theta(const ClosedLoop& cl, double rel_tol) {
  return theta_at_spec_level(cl, 1.0, rel_tol);
}

double default_lambda_max(const ClosedLoop& cl) {
  return 50.0 * std::max(spectral_radius(cl.calA), 1e-3);
}

double log_det_delta(const CMatrix& delta) {
  const Complex ld = matfun::logdet(delta);
  if (std::abs(ld.imag()) > 1e-6) {
    fail(ErrorCategory::kInadmissible,
         "det Delta left the positive real axis: the risk parameter violates "
         "the spectral condition");
  }
  return ld.real();
}

double log_det_delta(const CMatrix& phi, const CMatrix& psi, double theta) {
  if (theta == 0.0) return 0.0;
  // Psi is anti-Hermitian; with K = -i theta Psi (Hermitian),
  // det Delta = det cosh(K) det(I - theta T^1/2 Phi T^1/2), T = tanhc(K).
  // Both factors go through log1p, so Delta close to I loses nothing.
  CMatrix k = -kI * theta * psi;
  k = 0.5 * (k + k.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(k);
  const Eigen::VectorXd& x = es.eigenvalues();
  double ld = 0.0;
  Eigen::VectorXd root(x.size());
  for (Eigen::Index q = 0; q < x.size(); ++q) {
    const double a = std::abs(x(q));
    if (a < 1.0) {
      const double h = std::sinh(0.5 * a);
      ld += std::log1p(2.0 * h * h);
    } else {
      ld += a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
    }
    root(q) = std::sqrt(tanhc(a));
  }
  const CMatrix& v = es.eigenvectors();
  const CMatrix sqrt_t = v * root.cast<Complex>().asDiagonal() * v.adjoint();
  CMatrix y = theta * sqrt_t * phi * sqrt_t;
  y = 0.5 * (y + y.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> ey(y, Eigen::EigenvaluesOnly);
  for (Eigen::Index q = 0; q < ey.eigenvalues().size(); ++q) {
    const double yq = ey.eigenvalues()(q);
    if (yq >= 1.0) {
      fail(ErrorCategory::kInadmissible,
           "det Delta left the positive real axis: the risk parameter violates "
           "the spectral condition");
    }
    ld += std::log1p(-yq);
  }
  return ld;
}

namespace {

GrowthRate finish(const ClosedLoop& cl, double theta, double lambda_max,
                  const QuadratureResult& r) {
  GrowthRate g;
  g.value = r.value(0);
  g.error_estimate = r.error(0);
  g.lambda_max = lambda_max;
  g.panels = r.panels;
  g.evaluations = r.evaluations;
  g.analytic_tail = theta * (cl.calC * cl.calB).squaredNorm() /
                    (2.0 * std::numbers::pi * lambda_max);
  return g;
}

VectorIntegrand ups_integrand(const ClosedLoop& cl, double theta) {
  return [&cl, theta](double lambda) {
    const auto [phi, psi] = spectral_pair(cl, lambda);
    Eigen::VectorXd v(1);
    v(0) = -log_det_delta(phi, psi, theta) /
           (2.0 * std::numbers::pi);
    return v;
  };
}

void check_theta(double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    fail(ErrorCategory::kValidation, "risk parameter theta must be >= 0");
  }
}

}  // namespace

GrowthRate qef_growth_rate(const ClosedLoop& cl, double theta,
                           const QuadratureConfig& quad) {
  check_theta(theta);
  require_stable(cl, "qef_growth_rate");
  const double lmax =
      quad.lambda_max > 0.0 ? quad.lambda_max : default_lambda_max(cl);
  if (theta == 0.0) return GrowthRate{0.0, 0.0, 0.0, lmax, {}, 0};
  return finish(cl, theta, lmax,
                integrate_half_line(ups_integrand(cl, theta), 1, lmax, quad));
}

GrowthRate qef_growth_rate(const ClosedLoop& cl, double theta,
                           double lambda_max, std::span<const Panel> panels) {
  check_theta(theta);
  require_stable(cl, "qef_growth_rate");
  return finish(cl, theta, lambda_max,
                integrate_on_panels(ups_integrand(cl, theta), 1, lambda_max,
                                    panels));
}

}  // namespace qefctl
