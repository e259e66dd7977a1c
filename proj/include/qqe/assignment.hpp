#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qqe/types.hpp"

namespace qqe {

namespace detail {

// Shortest augmenting path Hungarian method with row/column potentials
// (Kuhn-Munkres, Jonker-Volgenant style), O(n^3). Returns row->col and the
// final potentials so that C(i,j) - u[i] - v[j] >= 0 with equality on the
// assignment.
struct HungarianSolution {
    std::vector<Index> row_to_col;
    std::vector<double> u;
    std::vector<double> v;
};

template <typename Cost>
HungarianSolution hungarian(const Cost& c, Index n) {
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based internals; index 0 is the virtual source.
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<Index> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
    std::vector<double> minv(static_cast<std::size_t>(n + 1));
    std::vector<char> used(static_cast<std::size_t>(n + 1));

    for (Index i = 1; i <= n; ++i) {
        p[0] = i;
        Index j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const Index i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = c(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const Index j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    HungarianSolution out;
    out.row_to_col.assign(static_cast<std::size_t>(n), 0);
    for (Index j = 1; j <= n; ++j) out.row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    out.u.assign(u.begin() + 1, u.end());
    out.v.assign(v.begin() + 1, v.end());
    return out;
}

// Rewrites an optimal assignment into the lexicographically smallest optimal
// one. Optimal assignments are exactly the perfect matchings of the tight
// (zero reduced cost) subgraph; rows are fixed in order to their smallest
// feasible column, re-routing the rest along alternating paths.
template <typename Cost>
std::vector<Index> lexicographic_tight_matching(const Cost& c, Index n, const HungarianSolution& sol, double tol) {
    std::vector<std::vector<Index>> tight(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (c(i, j) - sol.u[static_cast<std::size_t>(i)] - sol.v[static_cast<std::size_t>(j)] <= tol) {
                tight[static_cast<std::size_t>(i)].push_back(j);
            }
        }
    }
    std::vector<Index> row_to_col = sol.row_to_col;
    std::vector<Index> col_to_row(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) col_to_row[static_cast<std::size_t>(row_to_col[static_cast<std::size_t>(i)])] = i;
    std::vector<char> row_fixed(static_cast<std::size_t>(n), 0), col_fixed(static_cast<std::size_t>(n), 0);

    std::vector<Index> parent_col(static_cast<std::size_t>(n));
    std::vector<char> seen(static_cast<std::size_t>(n));

    for (Index i = 0; i < n; ++i) {
        for (Index j : tight[static_cast<std::size_t>(i)]) {
            if (col_fixed[static_cast<std::size_t>(j)]) continue;
            const Index current = row_to_col[static_cast<std::size_t>(i)];
            if (j == current) break;
            // Matching i->j frees column `current` and leaves row r = owner(j)
            // unmatched; look for an alternating path r -> ... -> current.
            const Index r = col_to_row[static_cast<std::size_t>(j)];
            std::fill(seen.begin(), seen.end(), 0);
            std::vector<Index> stack{r};
            std::vector<Index> reached_by(static_cast<std::size_t>(n), -1);  // col -> row that reached it
            bool found = false;
            seen[static_cast<std::size_t>(j)] = 1;
            while (!stack.empty() && !found) {
                const Index row = stack.back();
                stack.pop_back();
                for (Index col : tight[static_cast<std::size_t>(row)]) {
                    if (col_fixed[static_cast<std::size_t>(col)] || seen[static_cast<std::size_t>(col)]) continue;
                    seen[static_cast<std::size_t>(col)] = 1;
                    reached_by[static_cast<std::size_t>(col)] = row;
                    if (col == current) {
                        found = true;
                        break;
                    }
                    const Index next = col_to_row[static_cast<std::size_t>(col)];
                    if (next != i) stack.push_back(next);
                }
            }
            if (!found) continue;
            // Flip the path: each row on it takes the column it reached.
            Index col = current;
            while (true) {
                const Index row = reached_by[static_cast<std::size_t>(col)];
                const Index prev_col = row_to_col[static_cast<std::size_t>(row)];
                row_to_col[static_cast<std::size_t>(row)] = col;
                col_to_row[static_cast<std::size_t>(col)] = row;
                if (row == r) break;
                col = prev_col;
            }
            row_to_col[static_cast<std::size_t>(i)] = j;
            col_to_row[static_cast<std::size_t>(j)] = i;
            break;
        }
        row_fixed[static_cast<std::size_t>(i)] = 1;
        col_fixed[static_cast<std::size_t>(row_to_col[static_cast<std::size_t>(i)])] = 1;
    }
    return row_to_col;
}

}  // namespace detail

/// Minimum-cost perfect assignment of rows to columns of a square cost
/// matrix. Among optimal assignments the lexicographically smallest one is
/// returned (ties decided within a relative tolerance of 1e-12).
template <typename Derived>
Permutation solve_assignment(const Eigen::MatrixBase<Derived>& cost) {
    const Index n = cost.rows();
    if (cost.cols() != n) throw Error(ErrorCode::ShapeMismatch, "cost matrix must be square");
    if (n == 0) return Permutation{};
    if (!cost.allFinite()) throw Error(ErrorCode::NonFinite, "cost matrix has non-finite entries");

    auto at = [&cost](Index i, Index j) { return static_cast<double>(cost(i, j)); };
    const auto sol = detail::hungarian(at, n);
    const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    return Permutation(detail::lexicographic_tight_matching(at, n, sol, tol));
}

template <typename Derived>
double assignment_cost(const Eigen::MatrixBase<Derived>& cost, const Permutation& sigma) {
    double total = 0.0;
    for (Index i = 0; i < sigma.size(); ++i) total += cost(i, sigma[i]);
    return total;
}

}  // namespace qqe
