#pragma once

#include <cmath>

#include "qqe/types.hpp"

namespace qqe {

// Objective of the distribution transform:
//
//   L = 1/2 sum_i ( |x_i - t_i|^2 + (lambda/a) sum_{j in N_i} w_ij (d_ij - d0_ij)^2 )
//
// with t_i the matched reference point (exact mode) or its point on the
// fitted qq line (shape mode). The derivatives below are taken per point with
// the neighbor sums running over j in N_i only; the contribution of x_i to
// other points' neighbor terms is not included.

namespace detail {

inline void check_conformant(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& targets, const NeighborGraph& g) {
    if (targets.rows() != x.rows() || targets.cols() != x.cols() || g.n() != x.rows()) {
        throw Error(ErrorCode::ShapeMismatch, "points, targets and graph must describe the same n x d sample");
    }
}

}  // namespace detail

inline double qqe_cost(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& targets, const NeighborGraph& g,
                       double lambda) {
    detail::check_conformant(x, targets, g);
    const double data_term = (x - targets).squaredNorm();
    double reg = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index s = 0; s < g.k; ++s) {
            const double d = (x.row(i) - x.row(g.neighbors(i, s))).norm();
            const double diff = d - g.d0(i, s);
            reg += g.weights(i, s) * diff * diff;
        }
    }
    return 0.5 * (data_term + lambda / g.a * reg);
}

/// dL/dx_il = (x_il - t_il) + (lambda/a) sum_j (d - d0) / (d d0) (x_il - x_jl).
/// Pairs with d = 0 contribute nothing; otherwise d is clamped below at eps.
inline Matrix qqe_gradient(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& targets, const NeighborGraph& g,
                           double lambda, double eps = kDefaultEpsilon) {
    detail::check_conformant(x, targets, g);
    Matrix grad = x - targets;
    if (lambda == 0.0) return grad;
    const double scale = lambda / g.a;
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index s = 0; s < g.k; ++s) {
            const auto diff = x.row(i) - x.row(g.neighbors(i, s));
            const double d = diff.norm();
            if (d == 0.0) continue;
            const double d0 = g.d0(i, s);
            const double coef = (d - d0) / (std::max(d, eps) * d0);
            grad.row(i) += scale * coef * diff;
        }
    }
    return grad;
}

/// d2L/dx_il^2 = 1 + (lambda/a) sum_j [ (d - d0) / (d d0) + (x_il - x_jl)^2 / d^3 ].
inline Matrix qqe_hessian_diag(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& targets,
                               const NeighborGraph& g, double lambda, double eps = kDefaultEpsilon) {
    detail::check_conformant(x, targets, g);
    Matrix hess = Matrix::Ones(x.rows(), x.cols());
    if (lambda == 0.0) return hess;
    const double scale = lambda / g.a;
    for (Index i = 0; i < x.rows(); ++i) {
        for (Index s = 0; s < g.k; ++s) {
            const auto diff = x.row(i) - x.row(g.neighbors(i, s));
            const double d = diff.norm();
            if (d == 0.0) continue;
            const double dc = std::max(d, eps);
            const double d0 = g.d0(i, s);
            const double first = (d - d0) / (dc * d0);
            hess.row(i).array() += scale * (first + diff.array().square() / (dc * dc * dc));
        }
    }
    return hess;
}

/// Diagonal quasi-Newton update x <- x - eta * grad / |hess|, with |hess|
/// floored at eps.
inline Matrix quasi_newton_step(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& grad,
                                const Eigen::Ref<const Matrix>& hess, double eta, double eps = kDefaultEpsilon) {
    if (grad.rows() != x.rows() || grad.cols() != x.cols() || hess.rows() != x.rows() || hess.cols() != x.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "quasi_newton_step: shapes do not conform");
    }
    return x.array() - eta * grad.array() / hess.array().abs().max(eps);
}

}  // namespace qqe
