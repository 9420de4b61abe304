#include "qefctl/commands.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "qefctl/error.hpp"
#include "qefctl/gramians.hpp"
#include "qefctl/oracle.hpp"

namespace qefctl {

void apply_overrides(ProblemInstance& inst, const Overrides& o) {
  if (o.theta) {
    if (!(*o.theta >= 0.0) || !std::isfinite(*o.theta)) {
      fail(ErrorCategory::kValidation, "--theta must be a finite non-negative number");
    }
    inst.theta = *o.theta;
    inst.synthesis.theta = *o.theta;
  }
  if (o.quad_tol) {
    if (!(*o.quad_tol > 0.0)) fail(ErrorCategory::kValidation, "--quad-tol must be positive");
    inst.quadrature.rel_tol = *o.quad_tol;
    inst.quadrature.abs_tol = 1e-2 * *o.quad_tol;
    inst.synthesis.grad.quad.rel_tol = *o.quad_tol;
    inst.synthesis.grad.quad.abs_tol = 1e-2 * *o.quad_tol;
  }
  if (o.lambda_max) {
    if (!(*o.lambda_max > 0.0)) fail(ErrorCategory::kValidation, "--lambda-max must be positive");
    inst.quadrature.lambda_max = *o.lambda_max;
  }
  if (o.oracle_T) {
    if (!(*o.oracle_T > 0.0)) fail(ErrorCategory::kValidation, "--oracle-T must be positive");
    inst.oracle.T = *o.oracle_T;
  }
  if (o.oracle_N) {
    if (*o.oracle_N < 2) fail(ErrorCategory::kValidation, "--oracle-N must be at least 2");
    inst.oracle.N = *o.oracle_N;
  }
  inst.synthesis.grad.quad.lambda_max = inst.quadrature.lambda_max;
}

ControllerParams controller_or_lqg(const ProblemInstance& inst, const DerivedPlant& plant,
                                   bool* used_lqg) {
  if (used_lqg) *used_lqg = !inst.controller.has_value();
  if (inst.controller) return *inst.controller;
  return lqg_controller(plant, inst.weights);
}

EvaluateResult evaluate_instance(const ProblemInstance& inst) {
  const DerivedPlant plant = derive_plant(inst.plant);
  EvaluateResult r;
  r.theta = inst.theta;
  const ControllerParams k = controller_or_lqg(inst, plant, &r.lqg_controller);
  const ClosedLoop cl = assemble_closed_loop(plant, inst.weights, k);
  if (!is_hurwitz(cl.calA)) {
    fail(ErrorCategory::kInadmissible, "closed loop is not Hurwitz (controller not stabilizing)");
  }
  r.ups0 = lqg_cost(cl);
  r.theta_limit = theta_at_spec_level(cl, 1.0 - AdmissibilityConfig{}.margin);
  r.admissibility = check_admissible(cl, inst.theta);
  if (!r.admissibility.admissible) {
    fail(ErrorCategory::kInadmissible,
         "spectral condition fails: theta * sup lambda_max = " +
             format_double(r.admissibility.spec_sup) + " (admissible up to theta " +
             format_double(r.theta_limit) + ")");
  }
  r.growth = qef_growth_rate(cl, inst.theta, inst.quadrature);
  r.ups = r.growth.value;
  return r;
}

GradCheckResult grad_check(const ProblemInstance& inst, const GradOptions& opts) {
  const DerivedPlant plant = derive_plant(inst.plant);
  const ControllerParams k = controller_or_lqg(inst, plant);
  GradOptions o = opts;
  if (inst.quadrature.lambda_max > 0.0) o.quad.lambda_max = inst.quadrature.lambda_max;
  const ClosedLoop cl = assemble_closed_loop(plant, inst.weights, k);
  if (!check_admissible(cl, inst.theta).admissible) {
    fail(ErrorCategory::kInadmissible, "grad-check: controller is inadmissible at theta");
  }
  const GradReport g = frechet_derivatives(plant, inst.weights, k, inst.theta, o);
  const ControllerParams analytic{g.dUps_da, g.dUps_db, g.dUps_dc};

  auto ups_at = [&](const ControllerParams& x) {
    return qef_growth_rate(assemble_closed_loop(plant, inst.weights, x), inst.theta,
                           g.lambda_max, g.panels)
        .value;
  };

  GradCheckResult r;
  r.ups = g.ups;
  const int total = k.size();
  std::vector<double> fd(total);
  for (int idx = 0; idx < total; ++idx) {
    const double h = 1e-5 * (1.0 + std::abs(k.entry(idx)));
    ControllerParams up = k, dn = k;
    up.entry(idx) += h;
    dn.entry(idx) -= h;
    fd[idx] = (ups_at(up) - ups_at(dn)) / (2.0 * h);
  }
  double fd_scale = 0.0;
  for (double v : fd) fd_scale = std::max(fd_scale, std::abs(v));

  const int na = static_cast<int>(k.a.size());
  const int nb = static_cast<int>(k.b.size());
  for (int idx = 0; idx < total; ++idx) {
    GradCheckEntry e;
    int local = idx;
    const RMatrix* blk = &k.a;
    e.block = "a";
    if (idx >= na + nb) {
      local = idx - na - nb;
      blk = &k.c;
      e.block = "c";
    } else if (idx >= na) {
      local = idx - na;
      blk = &k.b;
      e.block = "b";
    }
    e.row = local % static_cast<int>(blk->rows());
    e.col = local / static_cast<int>(blk->rows());
    e.analytic = analytic.entry(idx);
    e.finite_difference = fd[idx];
    const double denom = std::max(std::abs(fd[idx]), 1e-3 * fd_scale);
    e.rel_error = denom > 0.0 ? std::abs(e.analytic - fd[idx]) / denom
                              : std::abs(e.analytic - fd[idx]);
    r.max_rel_error = std::max(r.max_rel_error, e.rel_error);
    r.entries.push_back(e);
  }
  return r;
}

std::vector<OracleRow> oracle_compare(const ProblemInstance& inst) {
  const DerivedPlant plant = derive_plant(inst.plant);
  const ControllerParams k = controller_or_lqg(inst, plant);
  const ClosedLoop cl = assemble_closed_loop(plant, inst.weights, k);
  if (!is_hurwitz(cl.calA)) {
    fail(ErrorCategory::kInadmissible, "closed loop is not Hurwitz (controller not stabilizing)");
  }
  if (!check_admissible(cl, inst.theta).admissible) {
    fail(ErrorCategory::kInadmissible, "oracle-compare: controller is inadmissible at theta");
  }
  const double ups = qef_growth_rate(cl, inst.theta, inst.quadrature).value;
  const double T = inst.oracle.T > 0.0 ? inst.oracle.T : default_oracle_horizon(cl);
  const std::vector<double> horizons{T / 4.0, T / 2.0, T};
  std::vector<OracleRow> rows;
  for (const GrowthEstimate& e : growth_rate_estimate(cl, inst.theta, horizons, inst.oracle.N)) {
    OracleRow row;
    row.T = e.T;
    row.ln_xi_over_T = e.ln_xi_over_T;
    row.ups_freq = ups;
    row.rel_gap = ups != 0.0 ? std::abs(e.ln_xi_over_T - ups) / std::abs(ups)
                             : std::abs(e.ln_xi_over_T);
    rows.push_back(row);
  }
  return rows;
}

SynthesisReport synthesize_instance(const ProblemInstance& inst, bool from_instance) {
  const DerivedPlant plant = derive_plant(inst.plant);
  SynthesisConfig cfg = inst.synthesis;
  cfg.theta = inst.theta;
  if (inst.quadrature.lambda_max > 0.0) cfg.grad.quad.lambda_max = inst.quadrature.lambda_max;
  if (from_instance) {
    if (!inst.controller) {
      fail(ErrorCategory::kValidation, "synthesize: --start instance needs a controller in the instance");
    }
    return synthesize_from(plant, inst.weights, *inst.controller, cfg);
  }
  return synthesize(plant, inst.weights, cfg);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_grad_check_csv(std::ostream& out, const GradCheckResult& r) {
  out << "block,row,col,analytic,finite_difference,rel_error\n";
  for (const GradCheckEntry& e : r.entries) {
    out << e.block << ',' << e.row << ',' << e.col << ',' << format_double(e.analytic) << ','
        << format_double(e.finite_difference) << ',' << format_double(e.rel_error) << '\n';
  }
}

void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows) {
  out << "T,lnXi_over_T,ups_freq,rel_gap\n";
  for (const OracleRow& r : rows) {
    out << format_double(r.T) << ',' << format_double(r.ln_xi_over_T) << ','
        << format_double(r.ups_freq) << ',' << format_double(r.rel_gap) << '\n';
  }
}

void write_trace_csv(std::ostream& out, const SynthesisReport& r) {
  out << "iter,ups,residual,step\n";
  for (const SynthesisIterate& it : r.iterates) {
    out << it.iter << ',' << format_double(it.ups) << ',' << format_double(it.residual) << ','
        << format_double(it.step) << '\n';
  }
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kValidation:
      return 2;
    case ErrorCategory::kInadmissible:
      return 3;
    case ErrorCategory::kNumerical:
      return 4;
    case ErrorCategory::kIo:
      return 5;
  }
  return 1;
}

}  // namespace qefctl
