#pragma once

#include "mfgc/cloud.hpp"

namespace mfgc {

// Exact Wasserstein distances between uniform-weight particle clouds.
//
// One-dimensional clouds use the sorted quantile coupling (exact, any
// sizes). Higher-dimensional clouds require equal sizes and go through an
// exact O(n^3) optimal assignment; sizes are capped at 256.
double wasserstein(const StateCloud& lhs, const StateCloud& rhs, int order);

// Joint distance on (x, a) particles, dimension 2d.
double wasserstein(const StateActionCloud& lhs, const StateActionCloud& rhs, int order);

// Min-cost perfect matching on a square cost matrix (shortest augmenting
// paths with potentials). Returns the optimal total cost.
double solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace mfgc
