#pragma once

#include <vector>

#include "qqe/assignment.hpp"
#include "qqe/types.hpp"

namespace qqe {

/// C(i, j) = |x_i - A y_j - b|^2.
inline Matrix build_cost_matrix(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                                const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Vector>& b) {
    const Index d = x.cols();
    if (y.cols() != d || A.rows() != d || A.cols() != d || b.size() != d) {
        throw Error(ErrorCode::ShapeMismatch, "build_cost_matrix: dimensions do not conform");
    }
    // Row j of `mapped` is (A y_j + b)^T.
    const Matrix mapped = (y * A.transpose()).rowwise() + b.transpose();
    Matrix c(x.rows(), y.rows());
    for (Index i = 0; i < x.rows(); ++i) {
        c.row(i) = (mapped.rowwise() - x.row(i)).rowwise().squaredNorm().transpose();
    }
    return c;
}

struct AffineFit {
    Matrix A;
    Vector b;
    bool rank_deficient = false;
};

/// Least-squares affine map x_i ~ A y_sigma(i) + b via the normal equations
/// beta = (Y'Y)^-1 Y'X with Y = [y_sigma, 1]. A ridge of 1e-10 * trace/(d+1)
/// is added when Y'Y is numerically singular.
inline AffineFit fit_affine(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, const Permutation& sigma) {
    const Index n = x.rows();
    const Index d = x.cols();
    if (y.rows() != n || y.cols() != d || sigma.size() != n) {
        throw Error(ErrorCode::ShapeMismatch, "fit_affine: x, y and sigma must have the same number of rows");
    }
    if (n < d + 1) throw Error(ErrorCode::TooFewPoints, "fit_affine needs n >= d + 1");

    Eigen::MatrixXd design(n, d + 1);
    for (Index i = 0; i < n; ++i) {
        design.row(i).head(d) = y.row(sigma[i]);
        design(i, d) = 1.0;
    }
    Eigen::MatrixXd gram = design.transpose() * design;
    const Eigen::MatrixXd rhs = design.transpose() * x;

    AffineFit fit;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-13)) {
        fit.rank_deficient = true;
        const double ridge = 1e-10 * std::max(gram.trace() / static_cast<double>(d + 1), 1.0);
        gram.diagonal().array() += ridge;
        ldlt.compute(gram);
    }
    const Eigen::MatrixXd beta = ldlt.solve(rhs);
    fit.A = beta.topRows(d).transpose();
    fit.b = beta.row(d).transpose();
    return fit;
}

/// Objective sum_i |x_i - A y_sigma(i) - b|^2.
inline double matching_objective(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y,
                                 const Permutation& sigma, const Eigen::Ref<const Matrix>& A,
                                 const Eigen::Ref<const Vector>& b) {
    double total = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
        total += (x.row(i).transpose() - A * y.row(sigma[i]).transpose() - b).squaredNorm();
    }
    return total;
}

/// Fuzzy qq-plot matching: alternate the assignment and the affine
/// regression, starting from A = I, b = 0, until sigma stops changing.
inline MatchResult fuzzy_match(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y, int max_rounds = 50) {
    const Index n = x.rows();
    const Index d = x.cols();
    if (y.rows() != n || y.cols() != d) {
        throw Error(ErrorCode::ShapeMismatch, "fuzzy_match: samples must have equal shape (resize the reference first)");
    }
    if (n < d + 1) throw Error(ErrorCode::TooFewPoints, "fuzzy_match needs n >= d + 1");
    if (max_rounds < 1) throw Error(ErrorCode::InvalidParameter, "max_rounds must be positive");

    MatchResult result;
    result.A = Matrix::Identity(d, d);
    result.b = Vector::Zero(d);

    std::optional<Permutation> previous;
    for (int round = 1; round <= max_rounds; ++round) {
        const Matrix cost = build_cost_matrix(x, y, result.A, result.b);
        Permutation sigma = solve_assignment(cost);
        result.objective_trace.push_back(assignment_cost(cost, sigma));
        result.iterations = round;
        if (previous && sigma == *previous) {
            result.sigma = std::move(sigma);
            result.converged = true;
            return result;
        }
        AffineFit fit = fit_affine(x, y, sigma);
        result.A = std::move(fit.A);
        result.b = std::move(fit.b);
        result.rank_deficient = result.rank_deficient || fit.rank_deficient;
        result.objective_trace.push_back(matching_objective(x, y, sigma, result.A, result.b));
        previous = sigma;
        result.sigma = std::move(sigma);
    }
    return result;
}

}  // namespace qqe
