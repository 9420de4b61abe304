#pragma once

#include <Eigen/Dense>

#include "qefctl/matfun.hpp"

namespace qefctl {

/// Physical parameters of the quantum plant. The state-space matrices are
/// derived from these; see derive_plant().
struct PlantSpec {
  int n = 0;  // plant variables (even)
  int m = 0;  // field channels (even)
  int d = 0;  // actuator dimension
  int r = 0;  // observation channels, r <= m/2
  RMatrix Theta;  // n x n CCR matrix, antisymmetric
  RMatrix R;      // n x n energy matrix, symmetric
  RMatrix M;      // m x n field coupling
  RMatrix N;      // d x n control coupling
  RMatrix D;      // r x m measurement matrix
};

/// State-space form of the plant dX = (AX + EU)dt + B dW, dZ = CX dt + D dW.
struct DerivedPlant {
  int n = 0;
  int m = 0;
  int d = 0;
  int r = 0;
  RMatrix Theta;
  RMatrix A;  // n x n
  RMatrix B;  // n x m
  RMatrix E;  // n x d
  RMatrix C;  // r x n
  RMatrix D;  // r x m
  RMatrix J;  // m x m
  CMatrix Omega;  // Ito matrix I + iJ
};

/// Penalty weights: V = S X + K U.
struct Weights {
  RMatrix S;  // nu x n
  RMatrix K;  // nu x d

  int nu() const { return static_cast<int>(S.rows()); }
};

/// Classical controller d xi = a xi dt + b dZ, U = c xi, with xi in R^n.
struct ControllerParams {
  RMatrix a;  // n x n
  RMatrix b;  // n x r
  RMatrix c;  // d x n

  static ControllerParams zeros(int n, int r, int d) {
    return {RMatrix::Zero(n, n), RMatrix::Zero(n, r), RMatrix::Zero(d, n)};
  }
  ControllerParams operator+(const ControllerParams& o) const {
    return {a + o.a, b + o.b, c + o.c};
  }
  ControllerParams operator-(const ControllerParams& o) const {
    return {a - o.a, b - o.b, c - o.c};
  }
  ControllerParams operator*(double s) const { return {s * a, s * b, s * c}; }
  double squared_norm() const {
    return a.squaredNorm() + b.squaredNorm() + c.squaredNorm();
  }
  int size() const {
    return static_cast<int>(a.size() + b.size() + c.size());
  }
  // Flat access in the order a, b, c (column-major within each block).
  double& entry(int k);
  double entry(int k) const;
};

/// Closed loop of plant and controller on the augmented state [X; xi].
struct ClosedLoop {
  int n = 0;   // plant order; the closed loop has order 2n
  int m = 0;
  int nu = 0;
  RMatrix calA;   // 2n x 2n
  RMatrix calB;   // 2n x m
  RMatrix calC;   // nu x 2n
  RMatrix Gamma;  // 2n x 2n joint CCR matrix
  RMatrix J;      // m x m
};

/// J = [[0, I], [-I, 0]] of order m.
RMatrix build_J(int m);

/// Checks the structural invariants of a PlantSpec. Throws a validation
/// error that names the first violated condition.
void validate_plant_spec(const PlantSpec& spec);

/// D D^T positive definite and D J D^T = 0.
void validate_measurement(const RMatrix& D, const RMatrix& J);

/// A = 2 Theta (R + M^T J M), B = 2 Theta M^T, E = 2 Theta N^T, C = 2 D J M.
DerivedPlant derive_plant(const PlantSpec& spec);

void validate_weights(const DerivedPlant& plant, const Weights& w);
void validate_controller(const DerivedPlant& plant, const ControllerParams& k);

/// calA = [[A, E c], [b C, a]], calB = [[B], [b D]], calC = [S, K c].
ClosedLoop assemble_closed_loop(const DerivedPlant& plant, const Weights& w,
                                const ControllerParams& ctrl);

// Residuals of the realizability identities (max-abs entry).
double pr_residual_dynamics(const DerivedPlant& p);     // A T + T A' + B J B'
double pr_residual_measurement(const DerivedPlant& p);  // T C' + B J D'
double pr_residual_closed_loop(const ClosedLoop& cl);   // cA G + G cA' + cB J cB'

/// Largest real part of the eigenvalues.
double spectral_abscissa(const RMatrix& a);
double spectral_radius(const RMatrix& a);

/// True iff the spectral abscissa is below -1e-9.
bool is_hurwitz(const RMatrix& a);

}  // namespace qefctl
