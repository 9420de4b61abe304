#include "qefctl/model.hpp"

#include <string>

#include "qefctl/error.hpp"

namespace qefctl {
namespace {

constexpr double kSymTol = 1e-12;
constexpr double kPrTol = 1e-10;

double max_abs(const RMatrix& x) {
  return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff();
}

void require_shape(const RMatrix& x, Eigen::Index rows, Eigen::Index cols,
                   const std::string& name) {
  if (x.rows() != rows || x.cols() != cols) {
    fail(ErrorCategory::kValidation,
         name + " has shape " + std::to_string(x.rows()) + "x" +
             std::to_string(x.cols()) + ", expected " + std::to_string(rows) +
             "x" + std::to_string(cols));
  }
  if (!x.allFinite()) {
    fail(ErrorCategory::kValidation, name + " has non-finite entries");
  }
}

}  // namespace

double& ControllerParams::entry(int k) {
  if (k < a.size()) return a.data()[k];
  k -= static_cast<int>(a.size());
  if (k < b.size()) return b.data()[k];
  k -= static_cast<int>(b.size());
  return c.data()[k];
}

double ControllerParams::entry(int k) const {
  return const_cast<ControllerParams*>(this)->entry(k);
}

RMatrix build_J(int m) {
  if (m < 2 || m % 2 != 0) {
    fail(ErrorCategory::kValidation,
         "number of field channels m must be even and >= 2, got " +
             std::to_string(m));
  }
  const int h = m / 2;
  RMatrix j = RMatrix::Zero(m, m);
  j.topRightCorner(h, h).setIdentity();
  j.bottomLeftCorner(h, h) = -RMatrix::Identity(h, h);
  return j;
}

void validate_measurement(const RMatrix& D, const RMatrix& J) {
  if (D.cols() != J.rows()) {
    fail(ErrorCategory::kValidation, "measurement matrix D must have m columns");
  }
  const RMatrix ddt = D * D.transpose();
  Eigen::SelfAdjointEigenSolver<RMatrix> es(ddt, Eigen::EigenvaluesOnly);
  if (D.rows() == 0 || es.eigenvalues().minCoeff() <= 1e-10) {
    fail(ErrorCategory::kValidation,
         "measurement condition D D^T > 0 violated (D must have full row rank)");
  }
  if (max_abs(D * J * D.transpose()) > 1e-12) {
    fail(ErrorCategory::kValidation,
         "measurement condition D J D^T = 0 violated (observations must "
         "commute)");
  }
}

void validate_plant_spec(const PlantSpec& s) {
  if (s.n < 2 || s.n % 2 != 0) {
    fail(ErrorCategory::kValidation,
         "number of plant variables n must be even and >= 2");
  }
  if (s.m < 2 || s.m % 2 != 0) {
    fail(ErrorCategory::kValidation,
         "number of field channels m must be even and >= 2");
  }
  if (s.d < 1) fail(ErrorCategory::kValidation, "actuator dimension d must be >= 1");
  if (s.r < 1) fail(ErrorCategory::kValidation, "observation count r must be >= 1");
  if (2 * s.r > s.m) {
    fail(ErrorCategory::kValidation,
         "observation count must satisfy r <= m/2 (D has at most m/2 rows)");
  }
  require_shape(s.Theta, s.n, s.n, "Theta");
  require_shape(s.R, s.n, s.n, "R");
  require_shape(s.M, s.m, s.n, "M");
  require_shape(s.N, s.d, s.n, "N");
  require_shape(s.D, s.r, s.m, "D");
  const double theta_scale = std::max(1.0, max_abs(s.Theta));
  if (max_abs(s.Theta + s.Theta.transpose()) > kSymTol * theta_scale) {
    fail(ErrorCategory::kValidation,
         "CCR matrix Theta must be real antisymmetric ([X, X^T] = 2i Theta)");
  }
  if (max_abs(s.R - s.R.transpose()) > kSymTol * std::max(1.0, max_abs(s.R))) {
    fail(ErrorCategory::kValidation, "energy matrix R must be symmetric");
  }
  validate_measurement(s.D, build_J(s.m));
}

DerivedPlant derive_plant(const PlantSpec& s) {
  validate_plant_spec(s);
  DerivedPlant p;
  p.n = s.n;
  p.m = s.m;
  p.d = s.d;
  p.r = s.r;
  p.Theta = s.Theta;
  p.D = s.D;
  p.J = build_J(s.m);
  p.A = 2.0 * s.Theta * (s.R + s.M.transpose() * p.J * s.M);
  p.B = 2.0 * s.Theta * s.M.transpose();
  p.E = 2.0 * s.Theta * s.N.transpose();
  p.C = 2.0 * s.D * p.J * s.M;
  p.Omega = CMatrix::Identity(s.m, s.m) + Complex(0.0, 1.0) * p.J.cast<Complex>();

  const double scale = std::max(
      1.0, max_abs(p.A) * max_abs(p.Theta) + max_abs(p.B) * max_abs(p.B));
  if (pr_residual_dynamics(p) > kPrTol * scale) {
    fail(ErrorCategory::kValidation,
         "realizability identity A Theta + Theta A^T + B J B^T = 0 violated");
  }
  if (pr_residual_measurement(p) > kPrTol * scale) {
    fail(ErrorCategory::kValidation,
         "realizability identity Theta C^T + B J D^T = 0 violated");
  }
  return p;
}

void validate_weights(const DerivedPlant& p, const Weights& w) {
  if (w.S.rows() < 1) fail(ErrorCategory::kValidation, "weight S must have >= 1 row");
  require_shape(w.S, w.S.rows(), p.n, "S");
  require_shape(w.K, w.S.rows(), p.d, "K");
}

void validate_controller(const DerivedPlant& p, const ControllerParams& k) {
  require_shape(k.a, p.n, p.n, "controller a");
  require_shape(k.b, p.n, p.r, "controller b");
  require_shape(k.c, p.d, p.n, "controller c");
}

ClosedLoop assemble_closed_loop(const DerivedPlant& p, const Weights& w,
                                const ControllerParams& k) {
  validate_weights(p, w);
  validate_controller(p, k);
  const int n = p.n;
  ClosedLoop cl;
  cl.n = n;
  cl.m = p.m;
  cl.nu = w.nu();
  cl.J = p.J;
  cl.calA.resize(2 * n, 2 * n);
  cl.calA << p.A, p.E * k.c, k.b * p.C, k.a;
  cl.calB.resize(2 * n, p.m);
  cl.calB << p.B, k.b * p.D;
  cl.calC.resize(cl.nu, 2 * n);
  cl.calC << w.S, w.K * k.c;
  cl.Gamma = RMatrix::Zero(2 * n, 2 * n);
  cl.Gamma.topLeftCorner(n, n) = p.Theta;

  const double scale =
      std::max(1.0, max_abs(cl.calA) * max_abs(cl.Gamma) +
                        max_abs(cl.calB) * max_abs(cl.calB));
  if (pr_residual_closed_loop(cl) > kPrTol * scale) {
    fail(ErrorCategory::kValidation,
         "closed-loop realizability identity violated");
  }
  return cl;
}

double pr_residual_dynamics(const DerivedPlant& p) {
  return max_abs(p.A * p.Theta + p.Theta * p.A.transpose() +
                 p.B * p.J * p.B.transpose());
}

double pr_residual_measurement(const DerivedPlant& p) {
  return max_abs(p.Theta * p.C.transpose() + p.B * p.J * p.D.transpose());
}

double pr_residual_closed_loop(const ClosedLoop& cl) {
  return max_abs(cl.calA * cl.Gamma + cl.Gamma * cl.calA.transpose() +
                 cl.calB * cl.J * cl.calB.transpose());
}

double spectral_abscissa(const RMatrix& a) {
  Eigen::EigenSolver<RMatrix> es(a, false);
  return es.eigenvalues().real().maxCoeff();
}

double spectral_radius(const RMatrix& a) {
  Eigen::EigenSolver<RMatrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_hurwitz(const RMatrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0 || !a.allFinite()) return false;
  return spectral_abscissa(a) < -1e-9;
}

}  // namespace qefctl
