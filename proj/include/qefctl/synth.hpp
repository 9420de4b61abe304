#pragma once

#include <string>
#include <vector>

#include "qefctl/freq.hpp"
#include "qefctl/grad.hpp"
#include "qefctl/model.hpp"

namespace qefctl {

/// Stabilizing solution of
///   A^T X + X A - (X B + S) R^{-1} (B^T X + S^T) + Q = 0
/// by the matrix sign function of the Hamiltonian, polished with
/// Newton-Kleinman steps.
RMatrix solve_care(const RMatrix& A, const RMatrix& B, const RMatrix& Q,
                   const RMatrix& R, const RMatrix& S);

/// Classical LQG controller for dx = (Ax + Eu)dt + B dw, dz = Cx dt + D dw
/// with cost density |S x + K u|^2, in the observer form
/// a = A + E c - b C, b = Kalman gain, c = -feedback gain.
ControllerParams lqg_controller(const DerivedPlant& plant, const Weights& w);

struct SynthesisConfig {
  double theta = 0.0;
  int max_iters = 500;
  double grad_tol = 0.0;  // <= 0 selects 1e-6 * (1 + |Upsilon|)
  double initial_step = 1.0;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  double min_step = 1e-14;
  std::vector<double> theta_continuation;  // optional ascending ladder
  AdmissibilityConfig admissibility;       // margin 5% by default
  GradOptions grad = default_grad_options();
  int spot_check_every = 10;  // 0 disables the directional-derivative check
  int max_panel_refreshes = 8;

  static GradOptions default_grad_options() {
    GradOptions g;
    g.quad.abs_tol = 1e-14;
    g.quad.rel_tol = 1e-11;
    return g;
  }
};

enum class TerminationReason { kStationary, kMaxIters, kLineSearchFailed };
std::string to_string(TerminationReason r);

struct SynthesisIterate {
  int iter = 0;
  double theta = 0.0;
  double ups = 0.0;
  double residual = 0.0;
  double step = 0.0;  // step accepted to reach this iterate (0 for the start)
};

struct SynthesisReport {
  std::vector<SynthesisIterate> iterates;
  std::vector<AdmissibilityReport> admissibility;  // one per iterate
  ControllerParams controller;
  ControllerParams initial_controller;
  TerminationReason reason = TerminationReason::kMaxIters;
  std::vector<double> stages;
  double initial_ups = 0.0;  // growth rate of the LQG controller at theta
  double final_ups = 0.0;    // fresh adaptive evaluation at the end
  double final_residual = 0.0;
  double grad_tol = 0.0;     // threshold used in the last stage
  double max_spot_check_error = 0.0;
  int spot_checks = 0;
};

/// Gradient descent on the growth rate over (a, b, c) starting from the LQG
/// controller, with a backtracking line search that keeps every iterate
/// stabilizing and inside the spectral condition.
SynthesisReport synthesize(const DerivedPlant& plant, const Weights& w,
                           const SynthesisConfig& cfg);

/// Same, from a given admissible starting controller.
SynthesisReport synthesize_from(const DerivedPlant& plant, const Weights& w,
                                const ControllerParams& start,
                                const SynthesisConfig& cfg);

}  // namespace qefctl
