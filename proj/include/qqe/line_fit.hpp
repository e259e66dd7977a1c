#pragma once

#include <vector>

#include "qqe/types.hpp"

namespace qqe {

/// Per-dimension least-squares lines x_l ~ intercept + slope * y_l through the
/// qq scatter, and the fitted targets mu.
struct LineFit {
    std::vector<double> intercept;
    std::vector<double> slope;
    /// Dimensions whose reference values were constant; fitted intercept-only.
    std::vector<bool> degenerate;
    Matrix mu;
};

struct QqLineStats {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

namespace detail {

struct SimpleRegression {
    double intercept;
    double slope;
    bool degenerate;
};

// Solves the 2x2 normal equations of [1, y] beta = x in centered form.
inline SimpleRegression regress(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& y) {
    const double n = static_cast<double>(x.size());
    const double my = y.sum() / n;
    const double mx = x.sum() / n;
    const Vector yc = y.array() - my;
    const double syy = yc.squaredNorm();
    // Constant reference values leave the slope undefined.
    if (!(syy > 1e-24 * std::max(1.0, y.squaredNorm()))) return {mx, 0.0, true};
    const double slope = yc.dot(x.array().matrix() - Vector::Constant(x.size(), mx)) / syy;
    return {mx - slope * my, slope, false};
}

}  // namespace detail

/// Fits one line per dimension of the qq-plot of x against the matched
/// reference y_sigma and returns the points on those lines.
inline LineFit fit_qq_lines(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y_matched) {
    if (x.rows() != y_matched.rows() || x.cols() != y_matched.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "fit_qq_lines: x and matched reference must have equal shape");
    }
    if (x.rows() < 2) throw Error(ErrorCode::TooFewPoints, "fit_qq_lines needs at least 2 points");
    const Index d = x.cols();
    LineFit fit;
    fit.mu.resize(x.rows(), d);
    for (Index l = 0; l < d; ++l) {
        const Vector xl = x.col(l);
        const Vector yl = y_matched.col(l);
        const auto r = detail::regress(xl, yl);
        fit.intercept.push_back(r.intercept);
        fit.slope.push_back(r.slope);
        fit.degenerate.push_back(r.degenerate);
        fit.mu.col(l) = (r.intercept + r.slope * yl.array()).matrix();
    }
    return fit;
}

/// Slope, intercept and coefficient of determination of each dimension's
/// qq-plot. A straight qq-plot (R^2 = 1) means equal distribution shape;
/// slope 1 and intercept 0 additionally mean equal location and scale.
inline std::vector<QqLineStats> qq_line_diagnostics(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Matrix>& y_matched) {
    if (x.rows() != y_matched.rows() || x.cols() != y_matched.cols()) {
        throw Error(ErrorCode::ShapeMismatch, "qq_line_diagnostics: x and matched reference must have equal shape");
    }
    if (x.rows() < 2) throw Error(ErrorCode::TooFewPoints, "qq_line_diagnostics needs at least 2 points");
    std::vector<QqLineStats> out;
    for (Index l = 0; l < x.cols(); ++l) {
        const Vector xl = x.col(l);
        const Vector yl = y_matched.col(l);
        const auto r = detail::regress(xl, yl);
        if (r.degenerate) {
            throw Error(ErrorCode::DegenerateReference, "reference dimension " + std::to_string(l) + " is constant");
        }
        const Vector resid = xl.array() - (r.intercept + r.slope * yl.array());
        const double ss_res = resid.squaredNorm();
        const double ss_tot = (xl.array() - xl.mean()).matrix().squaredNorm();
        const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
        out.push_back({r.slope, r.intercept, r2});
    }
    return out;
}

}  // namespace qqe
