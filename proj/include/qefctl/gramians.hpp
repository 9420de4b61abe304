#pragma once

#include "qefctl/matfun.hpp"
#include "qefctl/model.hpp"

namespace qefctl {

/// Solves A X + X A^T + W = 0 for Hurwitz A by complex Schur reduction and
/// triangular back-substitution (Bartels-Stewart). The result is symmetrized.
RMatrix solve_lyapunov(const RMatrix& a, const RMatrix& w);

struct GramianSet {
  RMatrix Sigma;  // steady-state covariance, cA S + S cA' + cB cB' = 0
  RMatrix sP;     // controllability Gramian (same equation as Sigma)
  RMatrix sQ;     // observability Gramian, cA' Q + Q cA + cC' cC = 0
  RMatrix sH;     // Hankelian sQ * sP
};

GramianSet compute_gramians(const ClosedLoop& cl);

/// LQG cost 1/2 Tr(cC Sigma cC^T), the small-risk limit of the growth rate
/// divided by theta.
double lqg_cost(const ClosedLoop& cl);

/// Limit of the gradient matrix as theta -> 0, oriented like the finite-theta
/// matrix: (2n+m) x (2n+nu), with transpose [[sH, sQ cB], [cC sP, 0]].
RMatrix chi0(const ClosedLoop& cl);

}  // namespace qefctl
