#include "qefctl/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "qefctl/error.hpp"

namespace qefctl {
namespace {

// Kronrod abscissae on [0, 1]; odd indices are the 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kRoundoffFloor = 1e3 * std::numeric_limits<double>::epsilon();

struct PanelEval {
  Panel panel;
  Eigen::VectorXd value;
  Eigen::VectorXd error;
  Eigen::VectorXd l1;  // integral of |f| over the panel
};

double to_lambda(const Panel& p, double x, double lambda_max) {
  return p.mapped ? lambda_max / x : x;
}

Eigen::VectorXd eval_point(const VectorIntegrand& f, const Panel& p, double x,
                           double lambda_max, Eigen::Index dim) {
  Eigen::VectorXd v = f(to_lambda(p, x, lambda_max));
  if (v.size() != dim) {
    fail(ErrorCategory::kNumerical, "quadrature: integrand size changed");
  }
  if (p.mapped) v *= lambda_max / (x * x);
  return v;
}

PanelEval eval_panel(const VectorIntegrand& f, const Panel& p,
                     double lambda_max, Eigen::Index dim, int& evaluations) {
  const double center = 0.5 * (p.lo + p.hi);
  const double half = 0.5 * (p.hi - p.lo);
  std::array<Eigen::VectorXd, 15> fv;
  fv[7] = eval_point(f, p, center, lambda_max, dim);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    fv[j] = eval_point(f, p, center - dx, lambda_max, dim);
    fv[14 - j] = eval_point(f, p, center + dx, lambda_max, dim);
  }
  evaluations += 15;
  auto weight = [](int k) { return kWgk[k <= 7 ? k : 14 - k]; };

  Eigen::VectorXd kronrod = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd gauss = kWg[3] * fv[7];
  Eigen::VectorXd resabs = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < 15; ++k) {
    kronrod += weight(k) * fv[k];
    resabs += weight(k) * fv[k].cwiseAbs();
  }
  for (int j = 1; j < 7; j += 2) gauss += kWg[j / 2] * (fv[j] + fv[14 - j]);
  const Eigen::VectorXd mean = 0.5 * kronrod;
  Eigen::VectorXd resasc = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < 15; ++k) resasc += weight(k) * (fv[k] - mean).cwiseAbs();

  PanelEval out{p, half * kronrod, Eigen::VectorXd(dim), half * resabs};
  // QUADPACK's scaling of |K - G| and its roundoff floor.
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (Eigen::Index i = 0; i < dim; ++i) {
    double err = std::abs(half * (kronrod(i) - gauss(i)));
    const double asc = half * resasc(i);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    out.error(i) = std::max(err, 50.0 * eps * out.l1(i));
  }
  if (!out.value.allFinite()) {
    fail(ErrorCategory::kNumerical, "quadrature: non-finite integrand");
  }
  return out;
}

std::vector<Panel> initial_panels(double lambda_max) {
  std::vector<Panel> panels;
  const double scale = lambda_max / 50.0;
  const double knee = std::min(2.0 * scale, lambda_max);
  for (int k = 0; k < 8; ++k) {
    panels.push_back({knee * k / 8.0, knee * (k + 1) / 8.0, false});
  }
  for (double lo = knee; lo < lambda_max;) {
    const double hi = std::min(2.0 * lo, lambda_max);
    panels.push_back({lo, hi, false});
    lo = hi;
  }
  for (int k = 0; k < 4; ++k) panels.push_back({k / 4.0, (k + 1) / 4.0, true});
  return panels;
}

bool panel_less(const Panel& a, const Panel& b) {
  if (a.mapped != b.mapped) return !a.mapped;
  return a.lo < b.lo;
}

// Fixed summation order (by position) so results do not depend on the
// refinement history.
QuadratureResult reduce(std::vector<PanelEval>& evals, Eigen::Index dim) {
  std::sort(evals.begin(), evals.end(), [](const auto& a, const auto& b) {
    return panel_less(a.panel, b.panel);
  });
  QuadratureResult r;
  r.value = Eigen::VectorXd::Zero(dim);
  r.error = Eigen::VectorXd::Zero(dim);
  for (const auto& e : evals) {
    r.value += e.value;
    r.error += e.error;
    r.panels.push_back(e.panel);
  }
  return r;
}

void check_lambda_max(double lambda_max) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    fail(ErrorCategory::kValidation, "quadrature: lambda_max must be positive");
  }
}

}  // namespace

QuadratureResult integrate_half_line(const VectorIntegrand& f, Eigen::Index dim,
                                     double lambda_max,
                                     const QuadratureConfig& cfg) {
  check_lambda_max(lambda_max);
  if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0)) {
    fail(ErrorCategory::kValidation, "quadrature: tolerances must be positive");
  }
  int evaluations = 0;
  std::vector<PanelEval> evals;
  for (const Panel& p : initial_panels(lambda_max)) {
    evals.push_back(eval_panel(f, p, lambda_max, dim, evaluations));
  }

  while (true) {
    Eigen::VectorXd value = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd error = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd l1 = Eigen::VectorXd::Zero(dim);
    for (const auto& e : evals) {
      value += e.value;
      error += e.error;
      l1 += e.l1;
    }
    // Accuracy below the roundoff level of the integral of |f| cannot be
    // certified, so the target never drops beneath it.
    const Eigen::VectorXd tol = (cfg.rel_tol * value.cwiseAbs())
                                    .cwiseMax(cfg.abs_tol)
                                    .cwiseMax(kRoundoffFloor * l1);
    if ((error.array() <= tol.array()).all()) break;
    if (static_cast<int>(evals.size()) >= cfg.max_subdivisions) {
      fail(ErrorCategory::kNumerical,
           "quadrature did not converge within the subdivision budget");
    }

    // Split every panel carrying more than its share of the worst
    // component's error budget.
    const double share = 1.0 / static_cast<double>(evals.size());
    std::vector<double> ratio(evals.size());
    double worst = 0.0;
    for (std::size_t p = 0; p < evals.size(); ++p) {
      ratio[p] = (evals[p].error.array() / tol.array()).maxCoeff();
      worst = std::max(worst, ratio[p]);
    }
    std::vector<PanelEval> next;
    next.reserve(2 * evals.size());
    for (std::size_t p = 0; p < evals.size(); ++p) {
      const bool split = ratio[p] > share || ratio[p] == worst;
      if (!split) {
        next.push_back(std::move(evals[p]));
        continue;
      }
      const Panel& q = evals[p].panel;
      const double mid = 0.5 * (q.lo + q.hi);
      next.push_back(eval_panel(f, {q.lo, mid, q.mapped}, lambda_max, dim,
                                evaluations));
      next.push_back(eval_panel(f, {mid, q.hi, q.mapped}, lambda_max, dim,
                                evaluations));
    }
    evals = std::move(next);
  }

  QuadratureResult r = reduce(evals, dim);
  r.evaluations = evaluations;
  r.converged = true;
  return r;
}

QuadratureResult integrate_on_panels(const VectorIntegrand& f,
                                     Eigen::Index dim, double lambda_max,
                                     std::span<const Panel> panels) {
  check_lambda_max(lambda_max);
  int evaluations = 0;
  std::vector<PanelEval> evals;
  evals.reserve(panels.size());
  for (const Panel& p : panels) {
    evals.push_back(eval_panel(f, p, lambda_max, dim, evaluations));
  }
  QuadratureResult r = reduce(evals, dim);
  r.evaluations = evaluations;
  r.converged = true;
  return r;
}

std::vector<double> quadrature_nodes(std::span<const Panel> panels,
                                     double lambda_max) {
  std::vector<double> nodes;
  for (const Panel& p : panels) {
    const double center = 0.5 * (p.lo + p.hi);
    const double half = 0.5 * (p.hi - p.lo);
    nodes.push_back(to_lambda(p, center, lambda_max));
    for (int j = 0; j < 7; ++j) {
      nodes.push_back(to_lambda(p, center - half * kXgk[j], lambda_max));
      nodes.push_back(to_lambda(p, center + half * kXgk[j], lambda_max));
    }
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

}  // namespace qefctl
