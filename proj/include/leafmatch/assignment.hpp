#pragma once

#include <Eigen/Core>

#include <utility>
#include <vector>

namespace leafmatch {

struct Matching {
    /// (row, column) pairs sorted by row.
    std::vector<std::pair<int, int>> pairs;
    double total_cost = 0.0;
};

/// Minimum-cost assignment on a rectangular matrix (shortest augmenting path /
/// Hungarian method).  Covers every vertex of the smaller side.  Returns one
/// optimal matching without tie-breaking guarantees.
Matching hungarian(const Eigen::MatrixXd& costs);

/// Minimum-cost assignment with deterministic tie-breaking: among all optimal
/// matchings (equal total within `tie_tol` relative), returns the one whose sorted
/// pair list is lexicographically smallest.  Costs must be finite.
Matching solve_assignment(const Eigen::MatrixXd& costs, double tie_tol = 1e-9);

/// Sum of costs in row order.
double matching_cost(const Eigen::MatrixXd& costs, const std::vector<std::pair<int, int>>& pairs);

}  // namespace leafmatch
