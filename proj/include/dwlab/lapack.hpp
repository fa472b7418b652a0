#pragma once

// Thin wrapper over LAPACK zgeev for dense complex eigenproblems.

#include <Eigen/Dense>
#include <vector>

#include "dwlab/common.hpp"

namespace dwlab::lapack {

struct Eigendecomposition {
  std::vector<cplx> values;
  Eigen::MatrixXcd vectors;  // right eigenvectors, empty unless requested
};

/// Raises ConvergenceError when zgeev reports info > 0.
Eigendecomposition eigen_decompose(const Eigen::MatrixXcd& matrix, bool want_vectors);

}  // namespace dwlab::lapack
