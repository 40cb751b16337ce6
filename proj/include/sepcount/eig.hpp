#pragma once

#include <vector>

#include "sepcount/tensor.hpp"

namespace sepcount {

struct EigResult {
    std::vector<double> values;  // sorted descending
    Tensor vectors;              // orthonormal columns, vectors(:, i) pairs with values[i]
};

// Symmetric eigendecomposition via cyclic Jacobi sweeps. The input is
// symmetrized defensively; entries must be finite and asymmetry beyond 1e-9
// (relative) is rejected.
EigResult sym_eig(const Tensor& a);

}  // namespace sepcount
