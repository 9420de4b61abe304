#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qefctl/error.hpp"
#include "qefctl/quadrature.hpp"

using namespace qefctl;

TEST_CASE("half-line integrals with closed forms") {
  const VectorIntegrand f = [](double x) {
    Eigen::VectorXd v(4);
    v << std::exp(-x), 1.0 / (1.0 + x * x), 1.0 / ((1.0 + x * x) * (1.0 + x * x)),
        std::exp(-x) * std::cos(3.0 * x);
    return v;
  };
  QuadratureConfig cfg;
  cfg.abs_tol = 1e-13;
  cfg.rel_tol = 1e-12;
  const QuadratureResult r = integrate_half_line(f, 4, 5.0, cfg);
  CHECK(r.converged);
  CHECK(r.value(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.value(1) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
  CHECK(r.value(2) == doctest::Approx(std::numbers::pi / 4).epsilon(1e-12));
  CHECK(r.value(3) == doctest::Approx(0.1).epsilon(1e-12));
  for (int k = 0; k < 4; ++k) CHECK(r.error(k) <= 1e-11);
  CHECK(r.evaluations > 0);

  // Replaying the adapted panels reproduces the value exactly.
  const QuadratureResult again = integrate_on_panels(f, 4, 5.0, r.panels);
  CHECK((again.value - r.value).cwiseAbs().maxCoeff() == 0.0);
  CHECK(again.evaluations == static_cast<int>(15 * r.panels.size()));
  CHECK(r.evaluations >= again.evaluations);
  // 15 nodes per panel.
  CHECK(quadrature_nodes(r.panels, 5.0).size() == 15 * r.panels.size());
}

TEST_CASE("the split point does not change the integral") {
  const VectorIntegrand f = [](double x) {
    return Eigen::VectorXd::Constant(1, 2.0 / (4.0 + x * x));  // integral pi/2
  };
  for (double lmax : {0.5, 2.0, 40.0, 1e3}) {
    const QuadratureResult r = integrate_half_line(f, 1, lmax, {});
    CHECK(r.value(0) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-9));
  }
}

TEST_CASE("subdivision budget exhaustion is a numerical error") {
  const VectorIntegrand f = [](double x) {
    return Eigen::VectorXd::Constant(1, std::sin(200.0 * x) * std::exp(-0.01 * x));
  };
  QuadratureConfig cfg;
  cfg.max_subdivisions = 3;
  try {
    integrate_half_line(f, 1, 10.0, cfg);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::kNumerical);
  }
}
