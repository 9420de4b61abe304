#include "qefctl/synth.hpp"

#include <cmath>

#include "qefctl/error.hpp"
#include "qefctl/gramians.hpp"

namespace qefctl {
namespace {

RMatrix matrix_sign(RMatrix z) {
  const double dim = static_cast<double>(z.rows());
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<RMatrix> lu(z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det)) {
      fail(ErrorCategory::kNumerical,
           "Riccati: Hamiltonian has eigenvalues on the imaginary axis");
    }
    const double c = std::pow(det, 1.0 / dim);
    RMatrix next = 0.5 * (z / c + c * lu.inverse());
    const double change = (next - z).lpNorm<1>();
    z = std::move(next);
    if (change <= 1e-13 * z.lpNorm<1>()) return z;
  }
  fail(ErrorCategory::kNumerical, "Riccati: sign iteration did not converge");
}

double care_residual(const RMatrix& A, const RMatrix& B, const RMatrix& Q,
                     const RMatrix& Rinv, const RMatrix& S, const RMatrix& X) {
  const RMatrix g = X * B + S;
  return (A.transpose() * X + X * A - g * Rinv * g.transpose() + Q)
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace

RMatrix solve_care(const RMatrix& A, const RMatrix& B, const RMatrix& Q,
                   const RMatrix& R, const RMatrix& S) {
  const Eigen::Index n = A.rows();
  Eigen::LLT<RMatrix> r_llt(R);
  if (r_llt.info() != Eigen::Success) {
    fail(ErrorCategory::kValidation, "Riccati: weight R must be positive definite");
  }
  const RMatrix Rinv = r_llt.solve(RMatrix::Identity(R.rows(), R.cols()));
  // Remove the cross term: A_s = A - B R^-1 S^T, Q_s = Q - S R^-1 S^T.
  const RMatrix As = A - B * Rinv * S.transpose();
  RMatrix Qs = Q - S * Rinv * S.transpose();
  Qs = 0.5 * (Qs + Qs.transpose()).eval();
  RMatrix H(2 * n, 2 * n);
  H << As, -B * Rinv * B.transpose(), -Qs, -As.transpose();

  const RMatrix W = matrix_sign(H);
  RMatrix lhs(2 * n, n), rhs(2 * n, n);
  lhs << W.topRightCorner(n, n), W.bottomRightCorner(n, n) + RMatrix::Identity(n, n);
  rhs << W.topLeftCorner(n, n) + RMatrix::Identity(n, n), W.bottomLeftCorner(n, n);
  RMatrix X = lhs.colPivHouseholderQr().solve(-rhs);
  X = 0.5 * (X + X.transpose()).eval();

  // Newton-Kleinman polish.
  for (int it = 0; it < 4; ++it) {
    const RMatrix gain = Rinv * (B.transpose() * X + S.transpose());
    const RMatrix Ak = A - B * gain;
    if (!is_hurwitz(Ak)) break;
    const RMatrix W2 = Q - S * gain - gain.transpose() * S.transpose() +
                       gain.transpose() * R * gain;
    X = solve_lyapunov(Ak.transpose(), 0.5 * (W2 + W2.transpose()));
  }

  const double scale = std::max({1.0, Q.cwiseAbs().maxCoeff(), X.cwiseAbs().maxCoeff() *
                                          A.cwiseAbs().maxCoeff()});
  if (!X.allFinite() || care_residual(A, B, Q, Rinv, S, X) > 1e-8 * scale) {
    fail(ErrorCategory::kNumerical, "Riccati solution did not converge");
  }
  const RMatrix gain = Rinv * (B.transpose() * X + S.transpose());
  if (!is_hurwitz(A - B * gain)) {
    fail(ErrorCategory::kNumerical,
         "Riccati: no stabilizing solution (stabilizability/detectability fails)");
  }
  return X;
}

ControllerParams lqg_controller(const DerivedPlant& p, const Weights& w) {
  validate_weights(p, w);
  const RMatrix ktk = w.K.transpose() * w.K;
  if (Eigen::LLT<RMatrix>(ktk).info() != Eigen::Success ||
      ktk.ldlt().vectorD().minCoeff() <= 1e-12) {
    fail(ErrorCategory::kValidation,
         "LQG: control weight K^T K must be positive definite");
  }
  // Control Riccati equation, weights (S^T S, S^T K, K^T K).
  const RMatrix X = solve_care(p.A, p.E, w.S.transpose() * w.S, ktk,
                               w.S.transpose() * w.K);
  const RMatrix feedback = ktk.llt().solve(p.E.transpose() * X + w.K.transpose() * w.S);
  // Filtering Riccati equation, noise covariances (B B^T, D D^T, B D^T).
  const RMatrix ddt = p.D * p.D.transpose();
  const RMatrix Y = solve_care(p.A.transpose(), p.C.transpose(),
                               p.B * p.B.transpose(), ddt, p.B * p.D.transpose());
  const RMatrix gain =
      ddt.llt().solve(p.C * Y + p.D * p.B.transpose()).transpose();

  ControllerParams k;
  k.c = -feedback;
  k.b = gain;
  k.a = p.A + p.E * k.c - k.b * p.C;
  return k;
}

std::string to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::kStationary:
      return "stationary";
    case TerminationReason::kMaxIters:
      return "max_iters";
    case TerminationReason::kLineSearchFailed:
      return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct Trial {
  bool ok = false;
  double ups = 0.0;
  AdmissibilityReport adm;
};

Trial try_point(const DerivedPlant& p, const Weights& w,
                const ControllerParams& x, double theta, double lambda_max,
                const std::vector<Panel>& panels, const SynthesisConfig& cfg) {
  Trial t;
  const ClosedLoop cl = assemble_closed_loop(p, w, x);
  if (!is_hurwitz(cl.calA)) return t;
  t.adm = check_admissible(cl, theta, cfg.admissibility);
  if (!t.adm.admissible) return t;
  try {
    t.ups = qef_growth_rate(cl, theta, lambda_max, panels).value;
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::kInadmissible) return t;
    throw;
  }
  t.ok = true;
  return t;
}

double fixed_ups(const DerivedPlant& p, const Weights& w,
                 const ControllerParams& x, double theta, double lambda_max,
                 const std::vector<Panel>& panels) {
  return qef_growth_rate(assemble_closed_loop(p, w, x), theta, lambda_max, panels)
      .value;
}

ControllerParams gradient_of(const GradReport& g) {
  return {g.dUps_da, g.dUps_db, g.dUps_dc};
}

// Descent at a single theta; appends to the report and updates x.
void descend(const DerivedPlant& p, const Weights& w, double theta,
             const SynthesisConfig& cfg, ControllerParams& x,
             SynthesisReport& rep, int& iter) {
  double last_step = 0.0;
  bool first_record = true;
  for (int refresh = 0;; ++refresh) {
    // Node set for this pass: adapted at the current point, then frozen so
    // the objective seen by the line search is one smooth function.
    GradReport ev = frechet_derivatives(p, w, x, theta, cfg.grad);
    const std::vector<Panel> panels = ev.panels;
    const double lmax = ev.lambda_max;

    while (true) {
      const double tol =
          cfg.grad_tol > 0.0 ? cfg.grad_tol : 1e-6 * (1.0 + std::abs(ev.ups));
      rep.grad_tol = tol;
      const double res = optimality_residual(ev);
      if (first_record) {
        rep.iterates.push_back({iter, theta, ev.ups, res, 0.0});
        rep.admissibility.push_back(
            check_admissible(assemble_closed_loop(p, w, x), theta, cfg.admissibility));
        first_record = false;
      }
      if (res <= tol) {
        // Confirm on a fresh node set before declaring stationarity.
        const GradReport fresh = frechet_derivatives(p, w, x, theta, cfg.grad);
        if (optimality_residual(fresh) <= tol || refresh >= cfg.max_panel_refreshes) {
          rep.reason = TerminationReason::kStationary;
          return;
        }
        break;  // refresh panels
      }
      if (iter >= cfg.max_iters) {
        rep.reason = TerminationReason::kMaxIters;
        return;
      }

      const ControllerParams g = gradient_of(ev);
      const double gnorm2 = g.squared_norm();
      double step = last_step > 0.0 ? 2.0 * last_step
                                    : cfg.initial_step / (1.0 + std::sqrt(gnorm2));
      const double ups_now = ev.ups;
      const double ups_floor = rep.iterates.back().ups;
      Trial accepted;
      ControllerParams next;
      while (step >= cfg.min_step) {
        next = x - g * step;
        const Trial t = try_point(p, w, next, theta, lmax, panels, cfg);
        if (t.ok && t.ups <= ups_now - cfg.armijo_c * step * gnorm2 &&
            t.ups < ups_floor) {
          accepted = t;
          break;
        }
        step *= cfg.backtrack_factor;
      }
      if (!accepted.ok) {
        rep.reason = TerminationReason::kLineSearchFailed;
        return;
      }

      if (cfg.spot_check_every > 0 && (iter + 1) % cfg.spot_check_every == 0) {
        // Directional derivative along the unit descent direction.
        const double gnorm = std::sqrt(gnorm2);
        const double eps = 1e-5 * (1.0 + std::sqrt(x.squared_norm())) / gnorm;
        const double up = fixed_ups(p, w, x - g * eps, theta, lmax, panels);
        const double um = fixed_ups(p, w, x + g * eps, theta, lmax, panels);
        const double fd = (up - um) / (2.0 * eps * gnorm);
        const double err = std::abs(fd + gnorm) / gnorm;
        rep.max_spot_check_error = std::max(rep.max_spot_check_error, err);
        ++rep.spot_checks;
      }

      x = next;
      last_step = step;
      ++iter;
      ev = frechet_derivatives(p, w, x, theta, lmax, panels, cfg.grad);
      rep.iterates.push_back({iter, theta, ev.ups, optimality_residual(ev), step});
      rep.admissibility.push_back(accepted.adm);
    }
  }
}

}  // namespace

SynthesisReport synthesize_from(const DerivedPlant& p, const Weights& w,
                                const ControllerParams& start,
                                const SynthesisConfig& cfg) {
  if (!(cfg.theta > 0.0)) {
    fail(ErrorCategory::kValidation, "synthesis: theta must be positive");
  }
  if (!(cfg.backtrack_factor > 0.0 && cfg.backtrack_factor < 1.0) ||
      !(cfg.armijo_c > 0.0 && cfg.armijo_c < 1.0) || !(cfg.initial_step > 0.0) ||
      cfg.max_iters < 0) {
    fail(ErrorCategory::kValidation, "synthesis: invalid line-search settings");
  }
  validate_controller(p, start);

  SynthesisReport rep;
  rep.initial_controller = start;
  const ClosedLoop cl0 = assemble_closed_loop(p, w, start);
  const bool admissible_at_target =
      check_admissible(cl0, cfg.theta, cfg.admissibility).admissible;

  if (!cfg.theta_continuation.empty()) {
    rep.stages = cfg.theta_continuation;
    if (rep.stages.back() != cfg.theta) rep.stages.push_back(cfg.theta);
  } else if (admissible_at_target) {
    rep.stages = {cfg.theta};
  } else {
    rep.stages = {cfg.theta / 8.0, cfg.theta / 4.0, cfg.theta / 2.0, cfg.theta};
  }
  for (std::size_t k = 1; k < rep.stages.size(); ++k) {
    if (!(rep.stages[k] > rep.stages[k - 1])) {
      fail(ErrorCategory::kValidation, "synthesis: theta ladder must be ascending");
    }
  }
  rep.initial_ups = admissible_at_target
                        ? qef_growth_rate(cl0, cfg.theta, cfg.grad.quad).value
                        : std::numeric_limits<double>::quiet_NaN();

  ControllerParams x = start;
  int iter = 0;
  for (double theta : rep.stages) {
    const ClosedLoop cl = assemble_closed_loop(p, w, x);
    if (!check_admissible(cl, theta, cfg.admissibility).admissible) {
      fail(ErrorCategory::kInadmissible,
           "synthesis: controller is inadmissible at continuation stage theta = " +
               std::to_string(theta));
    }
    descend(p, w, theta, cfg, x, rep, iter);
  }
  rep.controller = x;
  const GradReport fin = frechet_derivatives(p, w, x, cfg.theta, cfg.grad);
  rep.final_ups = fin.ups;
  rep.final_residual = optimality_residual(fin);
  return rep;
}

SynthesisReport synthesize(const DerivedPlant& p, const Weights& w,
                           const SynthesisConfig& cfg) {
  return synthesize_from(p, w, lqg_controller(p, w), cfg);
}

}  // namespace qefctl
