#include <doctest.h>

#include <random>

#include "qefctl/gramians.hpp"
#include "qefctl/model.hpp"
#include "support/testing.hpp"

using namespace qefctl;
using namespace qefctl::testing;

namespace {

double max_abs(const RMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("Lyapunov solver: scalar and diagonal examples") {
  CHECK(solve_lyapunov(RMatrix{{-1.0}}, RMatrix{{2.0}})(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  const RMatrix x = solve_lyapunov(RMatrix{{-1.0, 0.0}, {0.0, -2.0}}, RMatrix::Identity(2, 2));
  CHECK(max_abs(x - RMatrix{{0.5, 0.0}, {0.0, 0.25}}) < 1e-15);
}

TEST_CASE("Lyapunov solver agrees with the Kronecker solve") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 8;
    const RMatrix a = random_stable(rng, n, 0.2);
    const RMatrix g = random_real(rng, n, n);
    const RMatrix w = g * g.transpose();
    const RMatrix x = solve_lyapunov(a, w);
    const RMatrix ref = kronecker_lyapunov(a, w);
    CHECK(rel_gap(x, ref) < 1e-9);
    CHECK(max_abs(x - x.transpose()) == 0.0);
    CHECK(max_abs(a * x + x * a.transpose() + w) <= 1e-10 * (1.0 + max_abs(a) * max_abs(x)));
    CHECK(x.selfadjointView<Eigen::Lower>().ldlt().vectorD().minCoeff() > -1e-10 * x.norm());
  }
}

TEST_CASE("Gramians of the canonical loop") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const ClosedLoop cl = assemble_closed_loop(p, canonical_weights(), canonical_offset_controller());
  REQUIRE(is_hurwitz(cl.calA));
  const GramianSet g = compute_gramians(cl);
  const auto res = [](const RMatrix& r) { return r.cwiseAbs().maxCoeff(); };
  CHECK(res(cl.calA * g.Sigma + g.Sigma * cl.calA.transpose() + cl.calB * cl.calB.transpose()) < 1e-12);
  CHECK(res(cl.calA.transpose() * g.sQ + g.sQ * cl.calA + cl.calC.transpose() * cl.calC) < 1e-12);
  CHECK(max_abs(g.sP - g.Sigma) < 1e-14);
  CHECK(max_abs(g.sH - g.sQ * g.sP) < 1e-14);
  // Both forms of the LQG cost agree.
  const double viaQ = 0.5 * (cl.calB.transpose() * g.sQ * cl.calB).trace();
  CHECK(lqg_cost(cl) == doctest::Approx(viaQ).epsilon(1e-12));
  CHECK(lqg_cost(cl) > 0.0);
}

TEST_CASE("LQG cost: scalar example") {
  // dx = -x dt + dW, V = x: Sigma = 1/2, cost = 1/4.
  ClosedLoop cl;
  cl.n = 1;
  cl.m = 1;
  cl.nu = 1;
  cl.calA = RMatrix{{-1.0}};
  cl.calB = RMatrix{{1.0}};
  cl.calC = RMatrix{{1.0}};
  CHECK(lqg_cost(cl) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("LQG cost is invariant under controller state coordinates") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const Weights w = canonical_weights();
  const ControllerParams k = canonical_offset_controller();
  const double base = lqg_cost(assemble_closed_loop(p, w, k));
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const RMatrix t = RMatrix::Identity(2, 2) + 0.5 * random_real(rng, 2, 2);
    const RMatrix ti = t.inverse();
    const ControllerParams kt{t * k.a * ti, t * k.b, k.c * ti};
    CHECK(lqg_cost(assemble_closed_loop(p, w, kt)) == doctest::Approx(base).epsilon(1e-11));
  }
}

TEST_CASE("small-risk gradient matrix layout") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const ClosedLoop cl = assemble_closed_loop(p, canonical_weights(), canonical_offset_controller());
  const GramianSet g = compute_gramians(cl);
  const RMatrix x = chi0(cl);
  CHECK(x.rows() == 2 * cl.n + cl.m);
  CHECK(x.cols() == 2 * cl.n + cl.nu);
  const RMatrix xt = x.transpose();
  CHECK(max_abs(xt.topLeftCorner(4, 4) - g.sH) < 1e-14);
  CHECK(max_abs(xt.topRightCorner(4, 2) - g.sQ * cl.calB) < 1e-14);
  CHECK(max_abs(xt.bottomLeftCorner(3, 4) - cl.calC * g.sP) < 1e-14);
  CHECK(max_abs(xt.bottomRightCorner(3, 2)) == 0.0);
}
