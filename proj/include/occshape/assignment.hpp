#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace occshape {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method
/// with row/column potentials, O(n^3)). Returns col[row].
std::vector<std::size_t> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace occshape
