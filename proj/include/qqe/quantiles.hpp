#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "qqe/types.hpp"

namespace qqe {

/// Plotting positions p_i = (i - alpha) / (n - alpha - beta + 1), i = 1..n.
struct PositionScheme {
    double alpha = 1.0 / 3.0;
    double beta = 1.0 / 3.0;
    /// When set, p_i = i / n regardless of alpha and beta.
    bool over_n = false;

    static PositionScheme median_unbiased() { return {1.0 / 3.0, 1.0 / 3.0, false}; }
    static PositionScheme hazen() { return {0.5, 0.5, false}; }
    static PositionScheme weibull() { return {0.0, 0.0, false}; }
    static PositionScheme i_over_n() { return {0.0, 0.0, true}; }
};

inline std::vector<double> compute_positions(Index n, PositionScheme scheme = PositionScheme::median_unbiased()) {
    if (n < 1) throw Error(ErrorCode::InvalidParameter, "n must be at least 1");
    std::vector<double> p(static_cast<std::size_t>(n));
    if (scheme.over_n) {
        for (Index i = 1; i <= n; ++i) p[static_cast<std::size_t>(i - 1)] = static_cast<double>(i) / static_cast<double>(n);
        return p;
    }
    if (scheme.alpha < 0.0 || scheme.alpha > 1.0 || scheme.beta < 0.0 || scheme.beta > 1.0) {
        throw Error(ErrorCode::InvalidScheme, "alpha and beta must lie in [0, 1]");
    }
    const double denom = static_cast<double>(n) - scheme.alpha - scheme.beta + 1.0;
    if (denom <= 0.0) throw Error(ErrorCode::InvalidScheme, "position denominator is not positive");
    for (Index i = 1; i <= n; ++i) {
        p[static_cast<std::size_t>(i - 1)] = (static_cast<double>(i) - scheme.alpha) / denom;
    }
    return p;
}

/// Left-continuous inverse of the empirical CDF: the smallest order
/// statistic x_(i) with i/n >= p.
inline double empirical_quantile(std::span<const double> sample, double p) {
    if (sample.empty()) throw Error(ErrorCode::EmptySample, "empirical_quantile needs a non-empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    const double clamped = std::clamp(p, 0.0, 1.0);
    auto i = static_cast<std::size_t>(std::ceil(clamped * n));
    // ceil(p*n) can land one above the true index through rounding in p*n.
    while (i > 1 && static_cast<double>(i - 1) / n >= clamped) --i;
    if (i == 0) i = 1;
    return sorted[std::min(i, sorted.size()) - 1];
}

/// Spatial ranks u_i = (1/n) sum_{j != i} (x_i - x_j) / |x_i - x_j|.
/// Exact duplicates of x_i contribute nothing.
inline Matrix spatial_ranks(const Eigen::Ref<const Matrix>& points) {
    const Index n = points.rows();
    if (n < 2) throw Error(ErrorCode::TooFewPoints, "spatial_ranks needs at least 2 points");
    Matrix u = Matrix::Zero(n, points.cols());
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const Eigen::RowVectorXd diff = points.row(i) - points.row(j);
            const double norm = diff.norm();
            if (norm == 0.0) continue;
            u.row(i) += diff / norm;
        }
    }
    return u / static_cast<double>(n);
}

}  // namespace qqe
