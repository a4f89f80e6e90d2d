#ifndef FYONLINE_DETAIL_ASSIGNMENT_HPP
#define FYONLINE_DETAIL_ASSIGNMENT_HPP

#include "../common.hpp"

#include <algorithm>
#include <limits>
#include <vector>

namespace fyo::detail {

struct Assignment {
    std::vector<int> col_of_row;
    double cost = 0.0;
};

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method
/// with row/column potentials, O(n^3)). The returned cost is re-summed in row
/// order from the original entries.
inline Assignment solve_assignment(const Matrix& cost) {
    const int n = static_cast<int>(cost.rows());
    Assignment out;
    out.col_of_row.assign(n, -1);
    if (n == 0) {
        return out;
    }
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> match(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        match[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = match[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const int j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    for (int j = 1; j <= n; ++j) {
        out.col_of_row[match[j] - 1] = j - 1;
    }
    for (int i = 0; i < n; ++i) {
        out.cost += cost(i, out.col_of_row[i]);
    }
    return out;
}

/// Among assignments whose cost is within `tol` of the optimum, returns the
/// one whose column sequence is lexicographically smallest. Rows are fixed
/// one at a time, each time taking the smallest column that still admits a
/// near-optimal completion.
inline std::vector<int> lexicographic_min_assignment(const Matrix& cost, double tol) {
    const int n = static_cast<int>(cost.rows());
    const double best = solve_assignment(cost).cost;
    std::vector<int> chosen(n, -1);
    std::vector<char> col_used(n, 0);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        bool fixed = false;
        for (int j = 0; j < n && !fixed; ++j) {
            if (col_used[j]) {
                continue;
            }
            const int rest = n - i - 1;
            double completion = acc + cost(i, j);
            if (rest > 0) {
                Matrix sub(rest, rest);
                int sc = 0;
                for (int c = 0; c < n; ++c) {
                    if (col_used[c] || c == j) {
                        continue;
                    }
                    for (int r = 0; r < rest; ++r) {
                        sub(r, sc) = cost(i + 1 + r, c);
                    }
                    ++sc;
                }
                completion += solve_assignment(sub).cost;
            }
            if (completion <= best + tol) {
                chosen[i] = j;
                col_used[j] = 1;
                acc += cost(i, j);
                fixed = true;
            }
        }
        if (!fixed) {
            // Only reachable through catastrophic rounding; fall back to the plain optimum.
            return solve_assignment(cost).col_of_row;
        }
    }
    return chosen;
}

/// Kuhn's augmenting-path matching on the bipartite graph {(i, j) : allowed(i, j)}.
/// Returns the row->column matching if it is perfect, otherwise an empty vector.
template <typename Allowed>
std::vector<int> perfect_matching(int n, Allowed allowed) {
    std::vector<int> row_of_col(n, -1);
    std::vector<char> seen;
    auto augment = [&](auto&& self, int row) -> bool {
        for (int col = 0; col < n; ++col) {
            if (!allowed(row, col) || seen[col]) {
                continue;
            }
            seen[col] = 1;
            if (row_of_col[col] < 0 || self(self, row_of_col[col])) {
                row_of_col[col] = row;
                return true;
            }
        }
        return false;
    };
    for (int row = 0; row < n; ++row) {
        seen.assign(n, 0);
        if (!augment(augment, row)) {
            return {};
        }
    }
    std::vector<int> col_of_row(n, -1);
    for (int col = 0; col < n; ++col) {
        col_of_row[row_of_col[col]] = col;
    }
    return col_of_row;
}

/// Perfect matching maximizing the smallest matched entry of `weights`, using
/// only entries above `floor`. Empty if no perfect matching exists there.
inline std::vector<int> bottleneck_matching(const Matrix& weights, double floor) {
    const int n = static_cast<int>(weights.rows());
    std::vector<double> levels;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (weights(i, j) > floor) {
                levels.push_back(weights(i, j));
            }
        }
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    auto at_level = [&](double level) {
        return perfect_matching(n, [&](int i, int j) { return weights(i, j) >= level && weights(i, j) > floor; });
    };
    if (levels.empty()) {
        return {};
    }
    std::vector<int> best = at_level(levels.front());
    if (best.empty()) {
        return {};
    }
    std::size_t lo = 0, hi = levels.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi + 1) / 2;
        auto candidate = at_level(levels[mid]);
        if (candidate.empty()) {
            hi = mid - 1;
        } else {
            best = std::move(candidate);
            lo = mid;
        }
    }
    return best;
}

}  // namespace fyo::detail

#endif
