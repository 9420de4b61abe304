#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace qefctl {

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  double lambda_max = 0.0;  // <= 0 selects 50 * spectral radius of cA
  int max_subdivisions = 4000;
};

// A quadrature panel. Panels with mapped == true live in u in (0, 1] and
// cover the tail [lambda_max, inf) through lambda = lambda_max / u.
struct Panel {
  double lo = 0.0;
  double hi = 0.0;
  bool mapped = false;
};

struct QuadratureResult {
  Eigen::VectorXd value;
  Eigen::VectorXd error;   // per component, summed QUADPACK-style panel estimates
  std::vector<Panel> panels;
  int evaluations = 0;
  bool converged = false;
};

using VectorIntegrand = std::function<Eigen::VectorXd(double)>;

/// Adaptive Gauss-Kronrod (7/15) integration of a vector-valued function
/// over [0, inf). Component k is converged when its error estimate is at most
/// max(abs_tol, rel_tol * |value_k|, 1e3 eps * integral of |f_k|). Throws a numerical error if the
/// subdivision budget runs out first.
QuadratureResult integrate_half_line(const VectorIntegrand& f, Eigen::Index dim,
                                     double lambda_max,
                                     const QuadratureConfig& cfg);

/// Same rule on a fixed panel set, no refinement. Used to evaluate nearby
/// parameter values on an identical node set.
QuadratureResult integrate_on_panels(const VectorIntegrand& f,
                                     Eigen::Index dim, double lambda_max,
                                     std::span<const Panel> panels);

/// All frequency nodes (in lambda) that a panel set evaluates.
std::vector<double> quadrature_nodes(std::span<const Panel> panels,
                                     double lambda_max);

}  // namespace qefctl
