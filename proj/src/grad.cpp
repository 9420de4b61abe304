#include "qefctl/grad.hpp"

#include <cmath>
#include <numbers>

#include "qefctl/error.hpp"
#include "qefctl/matfun.hpp"

namespace qefctl {
namespace {

Eigen::PartialPivLU<CMatrix> factor_delta(const CMatrix& delta) {
  Eigen::PartialPivLU<CMatrix> lu(delta);
  if (!(lu.rcond() > 1e-13)) {
    fail(ErrorCategory::kInadmissible,
         "Delta is numerically singular (spectral condition saturated)");
  }
  return lu;
}

double condition_number(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

// X with X * M = Y, i.e. Y M^{-1}.
CMatrix right_divide(const CMatrix& y, const Eigen::PartialPivLU<CMatrix>& lu_t) {
  return lu_t.solve(y.transpose()).transpose();
}

}  // namespace

CMatrix phi_fn(const CMatrix& Phi, const CMatrix& Psi, const CMatrix& Delta,
               double theta) {
  (void)Phi;
  factor_delta(Delta);
  const Eigen::PartialPivLU<CMatrix> lu_t(Delta.transpose());
  return right_divide(matfun::sinc(CMatrix(theta * Psi)), lu_t);
}

CMatrix psi_fn(const CMatrix& Phi, const CMatrix& Psi, const CMatrix& Delta,
               double theta) {
  if (condition_number(Psi) > 1e8) {
    fail(ErrorCategory::kInadmissible,
         "Psi is singular at this frequency; the printed psi needs Psi^{-1}");
  }
  const CMatrix delta_inv = factor_delta(Delta).inverse();
  const Eigen::PartialPivLU<CMatrix> psi_t(Psi.transpose());
  const CMatrix x = right_divide(delta_inv * Phi, psi_t);  // Delta^-1 Phi Psi^-1
  const CMatrix arg = theta * Psi;
  return matfun::gateaux_sin(arg, x) - matfun::gateaux_cos(arg, delta_inv) -
         matfun::sinc(arg) * x;
}

CMatrix psi_fn_regular(const CMatrix& Phi, const CMatrix& Psi,
                       const CMatrix& Delta, double theta) {
  const CMatrix delta_inv = factor_delta(Delta).inverse();
  const CMatrix arg = theta * Psi;
  return theta * matfun::gateaux(matfun::EntireFn::kSinc, arg, delta_inv * Phi) -
         matfun::gateaux_cos(arg, delta_inv);
}

RMatrix build_K1(const DerivedPlant& p, const Weights& w) {
  const int n = p.n;
  const int nu = w.nu();
  RMatrix k1 = RMatrix::Zero(2 * n + nu, n + p.d);
  k1.block(0, n, n, p.d) = p.E;
  k1.block(n, 0, n, n).setIdentity();
  k1.block(2 * n, n, nu, p.d) = w.K;
  return k1;
}

RMatrix build_K2(const DerivedPlant& p) {
  const int n = p.n;
  RMatrix k2 = RMatrix::Zero(n + p.r, 2 * n + p.m);
  k2.block(0, n, n, n).setIdentity();
  k2.block(n, 0, p.r, n) = p.C;
  k2.block(n, 2 * n, p.r, p.m) = p.D;
  return k2;
}

ControllerGradient sandwich(const DerivedPlant& p, const Weights& w,
                            const RMatrix& chi, double scale) {
  const RMatrix z =
      scale * build_K1(p, w).transpose() * chi.transpose() * build_K2(p).transpose();
  return {z.topLeftCorner(p.n, p.n), z.block(0, p.n, p.n, p.r),
          z.block(p.n, 0, p.d, p.n)};
}

CMatrix chi_integrand(const ClosedLoop& cl, const FreqSample& s,
                      const CMatrix& phi, const CMatrix& psi) {
  const Eigen::Index n2 = cl.calA.rows();
  const CMatrix fstar = s.F.adjoint();
  const CMatrix mid = fstar * (phi + phi.adjoint()) +
                      cl.J.cast<Complex>() * fstar * (psi - psi.adjoint());
  CMatrix left(n2 + cl.m, cl.m);
  left << s.GB, CMatrix::Identity(cl.m, cl.m);
  CMatrix right(cl.nu, n2 + cl.nu);
  right << cl.calC.cast<Complex>() * s.G, CMatrix::Identity(cl.nu, cl.nu);
  return left * mid * right;
}

namespace {

struct NodeCounters {
  int printed = 0;
  int regular = 0;
};

// Component 0: growth-rate integrand; components 1..: Re of the chi integrand
// (column-major), both already divided by 2 pi for the half line.
VectorIntegrand combined_integrand(const ClosedLoop& cl, double theta,
                                   const GradOptions& opts,
                                   NodeCounters& counters) {
  return [&cl, theta, &opts, &counters](double lambda) {
    const FreqSample s = sample(cl, lambda, theta);
    const CMatrix phi = phi_fn(s.Phi, s.Psi, s.Delta, theta);
    CMatrix psi;
    bool printed = false;
    switch (opts.psi_route) {
      case PsiRoute::kPrinted:
        printed = true;
        break;
      case PsiRoute::kRegular:
        printed = false;
        break;
      case PsiRoute::kAuto:
        printed = condition_number(s.Psi) <= opts.psi_cond_limit;
        break;
    }
    if (printed) {
      psi = psi_fn(s.Phi, s.Psi, s.Delta, theta);
      ++counters.printed;
    } else {
      psi = psi_fn_regular(s.Phi, s.Psi, s.Delta, theta);
      ++counters.regular;
    }
    CMatrix m = chi_integrand(cl, s, phi, psi);
    // Projection applied per frequency: this block only decays like
    // 1/lambda and would spoil convergence on the mapped tail.
    m.bottomRightCorner(cl.m, cl.nu).setZero();
    Eigen::VectorXd v(1 + m.size());
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    v(0) = -log_det_delta(s.Phi, s.Psi, theta) / kTwoPi;
    v.tail(m.size()) = Eigen::Map<const Eigen::VectorXd>(
                           m.real().eval().data(), m.size()) /
                       kTwoPi;
    return v;
  };
}

GradReport pack(const ClosedLoop& cl, const QuadratureResult& r,
                const NodeCounters& counters, double lambda_max) {
  const Eigen::Index n2 = cl.calA.rows();
  GradReport rep;
  rep.ups = r.value(0);
  rep.chi = Eigen::Map<const RMatrix>(r.value.data() + 1, n2 + cl.m, n2 + cl.nu);
  rep.chi.bottomRightCorner(cl.m, cl.nu).setZero();
  rep.quad_error = r.error.maxCoeff();
  rep.printed_nodes = counters.printed;
  rep.regular_nodes = counters.regular;
  rep.lambda_max = lambda_max;
  rep.panels = r.panels;
  return rep;
}

void check_theta(double theta) {
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    fail(ErrorCategory::kValidation, "risk parameter theta must be >= 0");
  }
}

void attach_derivatives(GradReport& rep, const DerivedPlant& p,
                        const Weights& w, double theta) {
  const ControllerGradient g = sandwich(p, w, rep.chi, theta);
  rep.dUps_da = g.da;
  rep.dUps_db = g.db;
  rep.dUps_dc = g.dc;
}

}  // namespace

GradReport chi_matrix(const ClosedLoop& cl, double theta,
                      const GradOptions& opts) {
  check_theta(theta);
  if (!is_hurwitz(cl.calA)) {
    fail(ErrorCategory::kInadmissible, "chi_matrix: closed loop is not Hurwitz");
  }
  const double lmax = opts.quad.lambda_max > 0.0 ? opts.quad.lambda_max
                                                 : default_lambda_max(cl);
  const Eigen::Index n2 = cl.calA.rows();
  NodeCounters counters;
  const QuadratureResult r = integrate_half_line(
      combined_integrand(cl, theta, opts, counters),
      1 + (n2 + cl.m) * (n2 + cl.nu), lmax, opts.quad);
  return pack(cl, r, counters, lmax);
}

GradReport frechet_derivatives(const DerivedPlant& p, const Weights& w,
                               const ControllerParams& ctrl, double theta,
                               const GradOptions& opts) {
  const ClosedLoop cl = assemble_closed_loop(p, w, ctrl);
  GradReport rep = chi_matrix(cl, theta, opts);
  attach_derivatives(rep, p, w, theta);
  return rep;
}

GradReport frechet_derivatives(const DerivedPlant& p, const Weights& w,
                               const ControllerParams& ctrl, double theta,
                               double lambda_max, std::span<const Panel> panels,
                               const GradOptions& opts) {
  check_theta(theta);
  const ClosedLoop cl = assemble_closed_loop(p, w, ctrl);
  if (!is_hurwitz(cl.calA)) {
    fail(ErrorCategory::kInadmissible,
         "frechet_derivatives: closed loop is not Hurwitz");
  }
  const Eigen::Index n2 = cl.calA.rows();
  NodeCounters counters;
  const QuadratureResult r = integrate_on_panels(
      combined_integrand(cl, theta, opts, counters),
      1 + (n2 + cl.m) * (n2 + cl.nu), lambda_max, panels);
  GradReport rep = pack(cl, r, counters, lambda_max);
  attach_derivatives(rep, p, w, theta);
  return rep;
}

double optimality_residual(const ControllerGradient& g) {
  return std::sqrt(g.da.squaredNorm() + g.db.squaredNorm() + g.dc.squaredNorm());
}

double optimality_residual(const GradReport& r) {
  return std::sqrt(r.dUps_da.squaredNorm() + r.dUps_db.squaredNorm() +
                   r.dUps_dc.squaredNorm());
}

}  // namespace qefctl
