#pragma once

#include <cstdint>
#include <random>

#include "qefctl/instance.hpp"

namespace qefctl {

struct RandomInstanceConfig {
  int n = 2;
  int m = 2;
  int d = 1;
  int r = 1;
  int nu = 3;
  double controller_perturbation = 0.1;  // relative, applied to the LQG controller
  double spec_level = 0.5;               // supremum of the spectral value at theta
};

/// Random physical parameters satisfying the realizability and measurement
/// conditions: Theta = Q J Q^T for a random invertible Q and D = [U, 0].
PlantSpec random_plant_spec(std::mt19937_64& rng, int n, int m, int d, int r);

/// Random instance with a stabilizing, admissible controller near the LQG
/// controller. Deterministic in the seed.
ProblemInstance random_instance(std::uint64_t seed, const RandomInstanceConfig& cfg = {});

}  // namespace qefctl
