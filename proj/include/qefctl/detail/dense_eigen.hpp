#pragma once

#include "qefctl/matfun.hpp"

namespace qefctl::detail {

// LAPACK divide-and-conquer eigensolvers for the large operator matrices.
// Eigenvalues are ascending.

struct SymmetricEigen {
  Eigen::VectorXd values;
  RMatrix vectors;  // empty unless requested
};

SymmetricEigen symmetric_eigen(RMatrix a, bool with_vectors);
Eigen::VectorXd hermitian_eigenvalues(CMatrix a);

}  // namespace qefctl::detail
