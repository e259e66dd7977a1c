#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qqe/knn.hpp"
#include "qqe/line_fit.hpp"
#include "qqe/objective.hpp"

using namespace qqe;

TEST(KnnGraph, ThreePointsOnALine) {
    Matrix x(3, 1);
    x << 0, 1, 3;
    const NeighborGraph g = build_knn_graph(x, 1);
    EXPECT_EQ(g.neighbors(0, 0), 1);
    EXPECT_EQ(g.neighbors(1, 0), 0);
    EXPECT_EQ(g.neighbors(2, 0), 1);
    EXPECT_DOUBLE_EQ(g.a, 1.0 + 1.0 + 2.0);
    EXPECT_DOUBLE_EQ(g.weights(2, 0), 0.5);
}

TEST(KnnGraph, CompleteGraphAndErrors) {
    const Matrix x = oracle::random_matrix(6, 2, 40);
    const NeighborGraph g = build_knn_graph(x, 5);
    for (Index i = 0; i < 6; ++i) {
        std::vector<Index> row(g.neighbors.row(i).data(), g.neighbors.row(i).data() + 5);
        std::sort(row.begin(), row.end());
        std::vector<Index> expected;
        for (Index j = 0; j < 6; ++j) {
            if (j != i) expected.push_back(j);
        }
        EXPECT_EQ(row, expected);
    }
    EXPECT_THROW(build_knn_graph(x, 6), Error);
    EXPECT_THROW(build_knn_graph(x, 0), Error);
}

TEST(KnnGraph, MatchesSortOracle) {
    const Matrix x = oracle::random_matrix(40, 3, 41);
    const NeighborGraph g = build_knn_graph(x, 7);
    const auto nn = oracle::loop_knn(x, 7);
    double a = 0.0;
    for (Index i = 0; i < 40; ++i) {
        for (Index s = 0; s < 7; ++s) {
            ASSERT_EQ(g.neighbors(i, s), nn[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)]);
            a += oracle::dist(x, i, g.neighbors(i, s));
        }
    }
    EXPECT_NEAR(g.a, a, 1e-12);
}

TEST(KnnGraph, DuplicatesAreClamped) {
    Matrix x(3, 2);
    x << 1, 1, 1, 1, 2, 2;
    const NeighborGraph g = build_knn_graph(x, 1, 1e-12);
    EXPECT_EQ(g.d0(0, 0), 1e-12);
    EXPECT_EQ(g.weights(0, 0), 1e12);
    EXPECT_TRUE(g.weights.allFinite());
    const Matrix grad = qqe_gradient(x, x, g, 1.0);
    const Matrix hess = qqe_hessian_diag(x, x, g, 1.0);
    EXPECT_TRUE(grad.allFinite());
    EXPECT_TRUE(hess.allFinite());
}

TEST(Cost, Examples) {
    const Matrix x0 = oracle::random_matrix(20, 2, 42);
    const NeighborGraph g = build_knn_graph(x0, 4);
    EXPECT_EQ(qqe_cost(x0, x0, g, 0.7), 0.0);
    const Matrix t = oracle::random_matrix(20, 2, 43);
    EXPECT_NEAR(qqe_cost(x0, t, g, 0.0), 0.5 * (x0 - t).squaredNorm(), 1e-14);
    const Matrix x = oracle::random_matrix(20, 2, 44);
    EXPECT_NEAR(qqe_cost(x, t, g, 0.3), oracle::loop_cost(x, x0, t, 4, 0.3), 1e-10);
}

TEST(Gradient, LambdaZeroAndStationary) {
    const Matrix x0 = oracle::random_matrix(15, 2, 45);
    const Matrix t = oracle::random_matrix(15, 2, 46);
    const NeighborGraph g = build_knn_graph(x0, 3);
    EXPECT_EQ(qqe_gradient(x0, t, g, 0.0), Matrix(x0 - t));
    EXPECT_EQ(qqe_gradient(x0, x0, g, 1.0).cwiseAbs().maxCoeff(), 0.0);
}

namespace {

struct Instance {
    Matrix x0, x, t;
    Index k;
    double lambda;
};

Instance make_instance(std::uint64_t seed) {
    Rng rng(seed, 9);
    const Index n = 5 + static_cast<Index>(rng.index(46));
    const Index d = 1 + static_cast<Index>(rng.index(3));
    const Index k = 1 + static_cast<Index>(rng.index(static_cast<std::uint64_t>(std::min<Index>(n - 1, 10))));
    const double lambdas[] = {0.0, 0.1, 1.0};
    Instance in;
    in.x0 = oracle::random_matrix(n, d, seed * 3 + 1);
    in.x = in.x0 + 0.3 * oracle::random_normal(n, d, seed * 3 + 2);
    in.t = oracle::random_matrix(n, d, seed * 3 + 3);
    in.k = k;
    in.lambda = lambdas[seed % 3];
    return in;
}

}  // namespace

TEST(Gradient, MatchesPerPointFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = make_instance(seed);
        const NeighborGraph g = build_knn_graph(in.x0, in.k);
        const Matrix grad = qqe_gradient(in.x, in.t, g, in.lambda);
        const Matrix fd = oracle::fd_point_gradient(in.x, in.x0, in.t, in.k, in.lambda, 1e-6);
        EXPECT_LE(oracle::max_relative_error(grad, fd), 1e-4) << "seed " << seed;
    }
}

TEST(Gradient, FullCostDiffersOnlyByReverseNeighborTerms) {
    // The full-cost derivative also contains the terms in which x_i appears
    // as somebody else's neighbor. Adding those to the one-sided gradient
    // must reproduce the finite differences of the whole objective.
    const Instance in = make_instance(101);
    const NeighborGraph g = build_knn_graph(in.x0, in.k);
    Matrix full = qqe_gradient(in.x, in.t, g, in.lambda == 0.0 ? 1.0 : in.lambda);
    const double lambda = in.lambda == 0.0 ? 1.0 : in.lambda;
    for (Index p = 0; p < in.x.rows(); ++p) {
        for (Index s = 0; s < g.k; ++s) {
            const Index j = g.neighbors(p, s);
            const double d = oracle::dist(in.x, p, j);
            const double d0 = oracle::dist(in.x0, p, j);
            full.row(j) += lambda / g.a * (d - d0) / (d * d0) * (in.x.row(j) - in.x.row(p));
        }
    }
    const Matrix fd = oracle::fd_full_gradient(in.x, in.x0, in.t, in.k, lambda, 1e-6);
    EXPECT_LE(oracle::max_relative_error(full, fd), 1e-4);
}

TEST(Hessian, MatchesGradientFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Instance in = make_instance(seed);
        const NeighborGraph g = build_knn_graph(in.x0, in.k);
        const Matrix hess = qqe_hessian_diag(in.x, in.t, g, in.lambda);
        Matrix fd(in.x.rows(), in.x.cols());
        const double h = 1e-5;
        for (Index i = 0; i < in.x.rows(); ++i) {
            for (Index l = 0; l < in.x.cols(); ++l) {
                Matrix xp = in.x, xm = in.x;
                xp(i, l) += h;
                xm(i, l) -= h;
                fd(i, l) = (qqe_gradient(xp, in.t, g, in.lambda)(i, l) - qqe_gradient(xm, in.t, g, in.lambda)(i, l)) / (2 * h);
            }
        }
        EXPECT_LE(oracle::max_relative_error(hess, fd), 1e-3) << "seed " << seed;
    }
}

TEST(Hessian, LambdaZeroAndUnstretchedPairs) {
    const Matrix x0 = oracle::random_matrix(12, 2, 47);
    const NeighborGraph g = build_knn_graph(x0, 3);
    EXPECT_EQ(qqe_hessian_diag(x0, x0, g, 0.0), Matrix::Ones(12, 2));
    // d = d0: only the (x_il - x_jl)^2 / d^3 part remains.
    const Matrix h = qqe_hessian_diag(x0, x0, g, 0.5);
    for (Index i = 0; i < 12; ++i) {
        for (Index l = 0; l < 2; ++l) {
            double expected = 1.0;
            for (Index s = 0; s < 3; ++s) {
                const Index j = g.neighbors(i, s);
                expected += 0.5 / g.a * std::pow(x0(i, l) - x0(j, l), 2) / std::pow(oracle::dist(x0, i, j), 3);
            }
            EXPECT_NEAR(h(i, l), expected, 1e-12);
            EXPECT_GT(h(i, l), 1.0);
        }
    }
}

TEST(Step, Examples) {
    Matrix x(1, 1), grad(1, 1), hess(1, 1);
    x << 2.0;
    grad << 2.0;  // x - target with target 0
    hess << 1.0;
    EXPECT_DOUBLE_EQ(quasi_newton_step(x, grad, hess, 0.5)(0, 0), 1.0);
    EXPECT_EQ(quasi_newton_step(x, Matrix::Zero(1, 1), hess, 0.5)(0, 0), 2.0);
    hess << -4.0;  // absolute value keeps the step a descent step
    EXPECT_DOUBLE_EQ(quasi_newton_step(x, grad, hess, 0.5)(0, 0), 1.75);
    hess << 0.0;
    EXPECT_TRUE(quasi_newton_step(x, grad, hess, 0.5).allFinite());
}

TEST(LineFit, IdentityAndAffine) {
    const Matrix y = oracle::random_matrix(30, 2, 48);
    const LineFit id = fit_qq_lines(y, y);
    for (int l = 0; l < 2; ++l) {
        EXPECT_NEAR(id.intercept[static_cast<std::size_t>(l)], 0.0, 1e-12);
        EXPECT_NEAR(id.slope[static_cast<std::size_t>(l)], 1.0, 1e-12);
    }
    EXPECT_LE((id.mu - y).cwiseAbs().maxCoeff(), 1e-12);

    const Matrix x = (3.0 * y.array() + 2.0).matrix();
    const LineFit af = fit_qq_lines(x, y);
    EXPECT_NEAR(af.intercept[0], 2.0, 1e-12);
    EXPECT_NEAR(af.slope[1], 3.0, 1e-12);
    const auto stats = qq_line_diagnostics(x, y);
    EXPECT_NEAR(stats[0].slope, 3.0, 1e-12);
    EXPECT_NEAR(stats[0].intercept, 2.0, 1e-12);
    EXPECT_NEAR(stats[0].r_squared, 1.0, 1e-12);
}

TEST(LineFit, NoisyMatchesQr) {
    const Matrix y = oracle::random_matrix(100, 2, 49);
    const Matrix x = (1.5 * y.array() - 0.5).matrix() + 0.1 * oracle::random_normal(100, 2, 50);
    const LineFit fit = fit_qq_lines(x, y);
    for (Index l = 0; l < 2; ++l) {
        Eigen::MatrixXd gamma(100, 2);
        gamma.col(0).setOnes();
        gamma.col(1) = y.col(l);
        const Eigen::VectorXd beta = gamma.householderQr().solve(Eigen::VectorXd(x.col(l)));
        EXPECT_NEAR(fit.intercept[static_cast<std::size_t>(l)], beta(0), 1e-8);
        EXPECT_NEAR(fit.slope[static_cast<std::size_t>(l)], beta(1), 1e-8);
        EXPECT_LE((fit.mu.col(l) - gamma * beta).cwiseAbs().maxCoeff(), 1e-8);
    }
}

TEST(LineFit, ConstantReferenceFallsBackToIntercept) {
    const Matrix x = oracle::random_matrix(10, 1, 51);
    const Matrix y = Matrix::Constant(10, 1, 4.0);
    const LineFit fit = fit_qq_lines(x, y);
    EXPECT_TRUE(fit.degenerate[0]);
    EXPECT_EQ(fit.slope[0], 0.0);
    EXPECT_NEAR(fit.intercept[0], x.mean(), 1e-14);
    EXPECT_THROW(qq_line_diagnostics(x, y), Error);
}
