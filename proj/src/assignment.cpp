#include "leafmatch/assignment.hpp"
#include "leafmatch/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace leafmatch {

namespace {

/// Potentials-based shortest augmenting path for rows <= cols.  Returns the
/// column assigned to each row.
std::vector<int> assign_rows(const Eigen::MatrixXd& a)
{
    const int n = static_cast<int>(a.rows());
    const int m = static_cast<int>(a.cols());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<char> used(m + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n, -1);
    for (int j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            col_of_row[p[j] - 1] = j - 1;
        }
    }
    return col_of_row;
}

}  // namespace

double matching_cost(const Eigen::MatrixXd& costs, const std::vector<std::pair<int, int>>& pairs)
{
    double total = 0.0;
    for (const auto& [i, j] : pairs) {
        total += costs(i, j);
    }
    return total;
}

Matching hungarian(const Eigen::MatrixXd& costs)
{
    Matching result;
    if (costs.rows() == 0 || costs.cols() == 0) {
        return result;
    }
    if (!costs.allFinite()) {
        throw DataError("assignment costs must be finite");
    }
    if (costs.rows() <= costs.cols()) {
        const auto cols = assign_rows(costs);
        for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
            result.pairs.emplace_back(i, cols[i]);
        }
    } else {
        const Eigen::MatrixXd t = costs.transpose();
        const auto rows = assign_rows(t);
        for (int j = 0; j < static_cast<int>(rows.size()); ++j) {
            result.pairs.emplace_back(rows[j], j);
        }
        std::sort(result.pairs.begin(), result.pairs.end());
    }
    result.total_cost = matching_cost(costs, result.pairs);
    return result;
}

Matching solve_assignment(const Eigen::MatrixXd& costs, double tie_tol)
{
    const Matching optimum = hungarian(costs);
    if (optimum.pairs.empty()) {
        return optimum;
    }
    const int rows = static_cast<int>(costs.rows());
    const int cols = static_cast<int>(costs.cols());
    const double target = optimum.total_cost;
    const double tol = tie_tol * std::max(1.0, std::abs(target));

    auto sub_optimum = [&](const std::vector<int>& r, const std::vector<int>& c) {
        if (r.empty() || c.empty()) {
            return 0.0;
        }
        Eigen::MatrixXd sub(r.size(), c.size());
        for (std::size_t a = 0; a < r.size(); ++a) {
            for (std::size_t b = 0; b < c.size(); ++b) {
                sub(a, b) = costs(r[a], c[b]);
            }
        }
        return hungarian(sub).total_cost;
    };

    // Greedy in lexicographic order: fix the smallest pair that can still be
    // completed to an optimal matching.
    std::vector<int> free_cols(cols);
    for (int j = 0; j < cols; ++j) {
        free_cols[j] = j;
    }
    Matching result;
    double fixed = 0.0;
    for (int i = 0; i < rows && !free_cols.empty(); ++i) {
        std::vector<int> later_rows;
        for (int r = i + 1; r < rows; ++r) {
            later_rows.push_back(r);
        }
        for (std::size_t k = 0; k < free_cols.size(); ++k) {
            const int j = free_cols[k];
            std::vector<int> others = free_cols;
            others.erase(others.begin() + static_cast<std::ptrdiff_t>(k));
            const double value = fixed + costs(i, j) + sub_optimum(later_rows, others);
            if (std::abs(value - target) <= tol) {
                result.pairs.emplace_back(i, j);
                fixed += costs(i, j);
                free_cols = std::move(others);
                break;
            }
        }
    }
    const std::size_t expected = static_cast<std::size_t>(std::min(rows, cols));
    if (result.pairs.size() != expected) {
        return optimum;  // tolerance mismatch; fall back to the plain optimum
    }
    result.total_cost = matching_cost(costs, result.pairs);
    return result;
}

}  // namespace leafmatch
