#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "qqe/types.hpp"

namespace qqe {

/// Indices of the k nearest rows to row i (excluding i), nearest first,
/// ties broken by the smaller index. Brute force.
inline std::vector<std::pair<double, Index>> nearest_rows(const Eigen::Ref<const Matrix>& points, Index i, Index k) {
    std::vector<std::pair<double, Index>> cand;
    cand.reserve(static_cast<std::size_t>(points.rows() - 1));
    for (Index j = 0; j < points.rows(); ++j) {
        if (j == i) continue;
        cand.emplace_back((points.row(i) - points.row(j)).squaredNorm(), j);
    }
    const auto kk = static_cast<std::ptrdiff_t>(k);
    std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
    cand.resize(static_cast<std::size_t>(k));
    return cand;
}

/// k-NN graph of the initial configuration with Sammon weights 1/d0 and
/// normalization a = sum of d0. Distances below eps are clamped to eps.
inline NeighborGraph build_knn_graph(const Eigen::Ref<const Matrix>& x0, Index k, double eps = kDefaultEpsilon) {
    const Index n = x0.rows();
    if (k < 1) throw Error(ErrorCode::InvalidParameter, "k must be positive");
    if (k >= n) {
        throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " must be smaller than n=" + std::to_string(n));
    }
    if (!(eps > 0.0)) throw Error(ErrorCode::InvalidParameter, "eps must be positive");

    NeighborGraph g;
    g.k = k;
    g.neighbors.resize(n, k);
    g.d0.resize(n, k);
    g.weights.resize(n, k);
    double a = 0.0;
    for (Index i = 0; i < n; ++i) {
        const auto nn = nearest_rows(x0, i, k);
        for (Index s = 0; s < k; ++s) {
            const auto& [sq, j] = nn[static_cast<std::size_t>(s)];
            const double dist = std::max(std::sqrt(sq), eps);
            g.neighbors(i, s) = j;
            g.d0(i, s) = dist;
            g.weights(i, s) = 1.0 / dist;
            a += dist;
        }
    }
    g.a = a;
    return g;
}

}  // namespace qqe
