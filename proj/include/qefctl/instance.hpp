#pragma once

#include <optional>
#include <string>

#include "qefctl/model.hpp"
#include "qefctl/quadrature.hpp"
#include "qefctl/synth.hpp"

namespace qefctl {

struct OracleSettings {
  double T = 0.0;  // <= 0 selects default_oracle_horizon
  int N = 800;
};

/// A problem instance as stored on disk. Matrices are row-major flat arrays
/// next to explicit dimension fields.
struct ProblemInstance {
  PlantSpec plant;
  Weights weights;
  double theta = 0.0;
  std::optional<ControllerParams> controller;
  QuadratureConfig quadrature;
  OracleSettings oracle;
  SynthesisConfig synthesis;  // theta is copied from the instance
};

/// Parses and fully validates an instance. Schema problems and violated
/// model conditions are validation errors; unreadable files are io errors.
ProblemInstance parse_instance(const std::string& text);
ProblemInstance load_instance(const std::string& path);

std::string dump_instance(const ProblemInstance& inst);
void save_instance(const ProblemInstance& inst, const std::string& path);

}  // namespace qefctl
