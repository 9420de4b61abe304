#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qefctl/error.hpp"
#include "qefctl/freq.hpp"
#include "qefctl/instance.hpp"
#include "qefctl/synth.hpp"

namespace qefctl {

/// Command-line overrides of instance settings.
struct Overrides {
  std::optional<double> theta;
  std::optional<double> quad_tol;  // relative tolerance; absolute is 1e-2 of it
  std::optional<double> lambda_max;
  std::optional<double> oracle_T;
  std::optional<int> oracle_N;
};

void apply_overrides(ProblemInstance& inst, const Overrides& o);

/// Instance controller, or the LQG controller when the instance has none.
ControllerParams controller_or_lqg(const ProblemInstance& inst, const DerivedPlant& plant,
                                   bool* used_lqg = nullptr);

struct EvaluateResult {
  double theta = 0.0;
  bool lqg_controller = false;
  double ups = 0.0;
  double ups0 = 0.0;  // LQG cost 1/2 Tr(cC Sigma cC^T)
  GrowthRate growth;
  AdmissibilityReport admissibility;
  double theta_limit = 0.0;  // theta where the spectral supremum reaches 1 - margin
};

EvaluateResult evaluate_instance(const ProblemInstance& inst);

struct GradCheckEntry {
  std::string block;  // "a", "b" or "c"
  int row = 0;
  int col = 0;
  double analytic = 0.0;
  double finite_difference = 0.0;
  double rel_error = 0.0;
};

struct GradCheckResult {
  double ups = 0.0;
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
};

/// Analytic derivatives against central differences with step
/// 1e-5 (1 + |entry|). Each perturbed growth rate is recomputed in full on the
/// node set adapted at the base point, so the differenced function is smooth.
/// The relative error of an entry is measured against max(|fd|, 1e-3 max|fd|).
GradCheckResult grad_check(const ProblemInstance& inst,
                           const GradOptions& opts = SynthesisConfig::default_grad_options());

struct OracleRow {
  double T = 0.0;
  double ln_xi_over_T = 0.0;
  double ups_freq = 0.0;
  double rel_gap = 0.0;
};

/// Horizons T/4, T/2, T with T from the instance (or 40 / |spectral abscissa|).
std::vector<OracleRow> oracle_compare(const ProblemInstance& inst);

/// Descent from the LQG controller, or from the instance controller when
/// from_instance is set.
SynthesisReport synthesize_instance(const ProblemInstance& inst, bool from_instance = false);

std::string format_double(double x);  // 17 significant digits
void write_grad_check_csv(std::ostream& out, const GradCheckResult& r);
void write_oracle_csv(std::ostream& out, const std::vector<OracleRow>& rows);
void write_trace_csv(std::ostream& out, const SynthesisReport& r);

int exit_code(ErrorCategory c);

}  // namespace qefctl
