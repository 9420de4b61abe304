#include "qefctl/random_instance.hpp"

#include <cmath>

#include "qefctl/error.hpp"
#include "qefctl/freq.hpp"

namespace qefctl {
namespace {

RMatrix gaussian(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  RMatrix out(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) out(i, j) = dist(rng);
  }
  return out;
}

}  // namespace

PlantSpec random_plant_spec(std::mt19937_64& rng, int n, int m, int d, int r) {
  if (n < 2 || n % 2 != 0 || m < 2 || m % 2 != 0 || d < 0 || r < 0 || 2 * r > m) {
    fail(ErrorCategory::kValidation, "random plant: invalid dimensions");
  }
  PlantSpec p;
  p.n = n;
  p.m = m;
  p.d = d;
  p.r = r;
  const RMatrix q = RMatrix::Identity(n, n) + gaussian(rng, n, n, 0.3);
  p.Theta = q * build_J(n) * q.transpose();
  p.Theta = 0.5 * (p.Theta - p.Theta.transpose()).eval();
  const RMatrix x = gaussian(rng, n, n);
  p.R = 0.5 * (x + x.transpose());
  p.M = gaussian(rng, m, n);
  p.N = gaussian(rng, d, n);
  p.D = RMatrix::Zero(r, m);
  p.D.leftCols(m / 2) = gaussian(rng, r, m / 2);
  return p;
}

ProblemInstance random_instance(std::uint64_t seed, const RandomInstanceConfig& cfg) {
  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < 200; ++attempt) {
    ProblemInstance inst;
    inst.plant = random_plant_spec(rng, cfg.n, cfg.m, cfg.d, cfg.r);
    inst.weights.S = gaussian(rng, cfg.nu, cfg.n);
    inst.weights.K = gaussian(rng, cfg.nu, cfg.d);
    try {
      const DerivedPlant plant = derive_plant(inst.plant);
      const ControllerParams lqg = lqg_controller(plant, inst.weights);
      ControllerParams k = lqg;
      const double scale = std::sqrt(lqg.squared_norm() / lqg.size());
      const ControllerParams noise{gaussian(rng, cfg.n, cfg.n), gaussian(rng, cfg.n, cfg.r),
                                   gaussian(rng, cfg.d, cfg.n)};
      k = k + noise * (cfg.controller_perturbation * scale);
      const ClosedLoop cl = assemble_closed_loop(plant, inst.weights, k);
      if (spectral_abscissa(cl.calA) > -1e-2) continue;
      const double theta = theta_at_spec_level(cl, cfg.spec_level);
      if (!std::isfinite(theta)) continue;
      inst.theta = theta;
      inst.controller = k;
      inst.synthesis.theta = inst.theta;
      return inst;
    } catch (const Error&) {
      continue;
    }
  }
  fail(ErrorCategory::kNumerical, "random instance: no admissible draw after 200 attempts");
}

}  // namespace qefctl
