#include <doctest.h>

#include <cmath>
#include <random>

#include "qefctl/error.hpp"
#include "qefctl/grad.hpp"
#include "qefctl/gramians.hpp"
#include "qefctl/matfun.hpp"
#include "qefctl/random_instance.hpp"
#include "qefctl/synth.hpp"
#include "support/testing.hpp"

using namespace qefctl;
using namespace qefctl::testing;

namespace {

struct SpectralData {
  CMatrix phi, psi, delta;
};

// Phi = F F^*, Psi = F J F^* from a random square F, so Psi is invertible.
SpectralData random_spectral(std::mt19937_64& rng, int m, double scale) {
  const CMatrix f = random_complex(rng, m, m, scale);
  const CMatrix j = build_J(m).cast<Complex>();
  return {f * f.adjoint(), f * j * f.adjoint(), {}};
}

GradOptions tight() {
  GradOptions g;
  g.quad.abs_tol = 1e-14;
  g.quad.rel_tol = 1e-11;
  return g;
}

double directional_fd(const DerivedPlant& p, const Weights& w, const ControllerParams& k,
                      const ControllerParams& dir, double theta, const GradReport& base) {
  const double h = 1e-5;
  const auto ups = [&](double t) {
    const ClosedLoop cl = assemble_closed_loop(p, w, k + dir * t);
    return qef_growth_rate(cl, theta, base.lambda_max, base.panels).value;
  };
  return central_difference(ups, 0.0, h);
}

double pairing(const GradReport& g, const ControllerParams& dir) {
  return (g.dUps_da.cwiseProduct(dir.a)).sum() + (g.dUps_db.cwiseProduct(dir.b)).sum() +
         (g.dUps_dc.cwiseProduct(dir.c)).sum();
}

}  // namespace

TEST_CASE("phi solves phi Delta = sinc(theta Psi)") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    SpectralData s = random_spectral(rng, 2 + 2 * (trial % 2), 0.5);
    const double theta = 0.3;
    s.delta = delta_matrix(s.phi, s.psi, theta);
    const CMatrix phi = phi_fn(s.phi, s.psi, s.delta, theta);
    const CMatrix sinc = matfun::sinc(CMatrix(theta * s.psi));
    CHECK(rel_gap(CMatrix(phi * s.delta), sinc) < 1e-12);
  }
}

TEST_CASE("psi: printed and regular forms agree where Psi is invertible") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    SpectralData s = random_spectral(rng, 2 + 2 * (trial % 2), 0.6);
    const double theta = 0.2 + 0.02 * trial;
    s.delta = delta_matrix(s.phi, s.psi, theta);
    const CMatrix printed = psi_fn(s.phi, s.psi, s.delta, theta);
    const CMatrix regular = psi_fn_regular(s.phi, s.psi, s.delta, theta);
    CHECK(rel_gap(printed, regular) < 1e-8);
  }
}

TEST_CASE("K1 and K2 sandwich the controller perturbation into the closed loop") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const Weights w = canonical_weights();
  const RMatrix k1 = build_K1(p, w);
  const RMatrix k2 = build_K2(p);
  CHECK(k1.rows() == 2 * p.n + w.nu());
  CHECK(k1.cols() == p.n + p.d);
  CHECK(k2.rows() == p.n + p.r);
  CHECK(k2.cols() == 2 * p.n + p.m);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const ControllerParams k0{random_real(rng, 2, 2), random_real(rng, 2, 1), random_real(rng, 1, 2)};
    const ControllerParams dk{random_real(rng, 2, 2), random_real(rng, 2, 1), random_real(rng, 1, 2)};
    const ClosedLoop c0 = assemble_closed_loop(p, w, k0);
    const ClosedLoop c1 = assemble_closed_loop(p, w, k0 + dk);
    RMatrix dl = RMatrix::Zero(4 + w.nu(), 4 + p.m);
    dl.topLeftCorner(4, 4) = c1.calA - c0.calA;
    dl.topRightCorner(4, p.m) = c1.calB - c0.calB;
    dl.bottomLeftCorner(w.nu(), 4) = c1.calC - c0.calC;
    RMatrix blocks = RMatrix::Zero(p.n + p.d, p.n + p.r);
    blocks.topLeftCorner(2, 2) = dk.a;
    blocks.topRightCorner(2, 1) = dk.b;
    blocks.bottomLeftCorner(1, 2) = dk.c;
    CHECK((k1 * blocks * k2 - dl).cwiseAbs().maxCoeff() < 1e-14);

    // Adjoint: <sandwich(chi), dk> = scale Tr(chi dL).
    const RMatrix chi = random_real(rng, 4 + p.m, 4 + w.nu());
    const double scale = 1.7;
    const ControllerGradient g = sandwich(p, w, chi, scale);
    const double lhs = g.da.cwiseProduct(dk.a).sum() + g.db.cwiseProduct(dk.b).sum() +
                       g.dc.cwiseProduct(dk.c).sum();
    CHECK(lhs == doctest::Approx(scale * (chi * dl).trace()).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches finite differences of the growth rate") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const ProblemInstance inst = random_instance(seed);
    const DerivedPlant p = derive_plant(inst.plant);
    const ControllerParams k = *inst.controller;
    const GradReport g = frechet_derivatives(p, inst.weights, k, inst.theta, tight());
    CHECK(g.ups == doctest::Approx(
                       qef_growth_rate(assemble_closed_loop(p, inst.weights, k), inst.theta).value)
                       .epsilon(1e-7));
    std::mt19937_64 rng(seed);
    for (int trial = 0; trial < 3; ++trial) {
      const ControllerParams dir{random_real(rng, p.n, p.n), random_real(rng, p.n, p.r),
                                 random_real(rng, p.d, p.n)};
      const double fd = directional_fd(p, inst.weights, k, dir, inst.theta, g);
      CHECK(pairing(g, dir) == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
    }
  }
}

TEST_CASE("gradient on the canonical plant with an offset controller") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const Weights w = canonical_weights();
  const ControllerParams k = canonical_offset_controller();
  const GradReport g = frechet_derivatives(p, w, k, 0.5, tight());
  CHECK(optimality_residual(g) > 1e-2);
  for (int e = 0; e < k.size(); ++e) {
    ControllerParams dir = ControllerParams::zeros(2, 1, 1);
    dir.entry(e) = 1.0;
    const double fd = directional_fd(p, w, k, dir, 0.5, g);
    CHECK(pairing(g, dir) == doctest::Approx(fd).epsilon(1e-6).scale(1e-3));
  }
  CHECK(g.printed_nodes + g.regular_nodes > 0);
  CHECK(g.chi.rows() == 4 + p.m);
  CHECK(g.chi.cols() == 4 + w.nu());
  CHECK(g.chi.bottomRightCorner(p.m, w.nu()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psi route does not change the gradient") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const Weights w = canonical_weights();
  const ControllerParams k = canonical_offset_controller();
  GradOptions regular = tight();
  regular.psi_route = PsiRoute::kRegular;
  const GradReport a = frechet_derivatives(p, w, k, 0.4, tight());
  const GradReport b = frechet_derivatives(p, w, k, 0.4, regular);
  CHECK(b.printed_nodes == 0);
  CHECK(rel_gap(a.chi, b.chi) < 1e-7);
}

TEST_CASE("canonical LQG controller is stationary") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const Weights w = canonical_weights();
  const GradReport g = frechet_derivatives(p, w, lqg_controller(p, w), 0.5, tight());
  CHECK(g.ups == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(optimality_residual(g) < 1e-8);
}

TEST_CASE("no dependence on c without actuation or control penalty") {
  PlantSpec s = canonical_spec();
  s.N.setZero();
  const DerivedPlant p = derive_plant(s);
  Weights w = canonical_weights();
  w.K.setZero();
  const GradReport g = frechet_derivatives(p, w, canonical_offset_controller(), 0.3, tight());
  CHECK(g.dUps_dc.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("small-theta gradient approaches theta times the LQG gradient") {
  const DerivedPlant p = derive_plant(canonical_spec());
  const Weights w = canonical_weights();
  const ControllerParams k = canonical_offset_controller();
  const ClosedLoop cl = assemble_closed_loop(p, w, k);
  const double theta = 1e-5 / phi_peak(cl);
  const GradReport g = frechet_derivatives(p, w, k, theta, tight());
  const ControllerGradient g0 = sandwich(p, w, chi0(cl), theta);
  CHECK(rel_gap(g.dUps_da, g0.da) < 1e-3);
  CHECK(rel_gap(g.dUps_db, g0.db) < 1e-3);
  CHECK(rel_gap(g.dUps_dc, g0.dc) < 1e-3);
}
