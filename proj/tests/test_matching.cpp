#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qqe/matching.hpp"
#include "qqe/reference.hpp"

using namespace qqe;

namespace {

Permutation random_permutation(Index n, std::uint64_t seed) {
    std::vector<Index> p(static_cast<std::size_t>(n));
    std::iota(p.begin(), p.end(), Index{0});
    Rng rng(seed, 3);
    for (Index i = n - 1; i > 0; --i) {
        std::swap(p[static_cast<std::size_t>(i)], p[rng.index(static_cast<std::uint64_t>(i + 1))]);
    }
    return Permutation(p);
}

}  // namespace

TEST(CostMatrix, TwoPointExample) {
    Matrix x(2, 1);
    x << 0, 1;
    const Matrix c = build_cost_matrix(x, x, Matrix::Identity(1, 1), Vector::Zero(1));
    EXPECT_EQ(c(0, 0), 0.0);
    EXPECT_EQ(c(0, 1), 1.0);
    EXPECT_EQ(c(1, 0), 1.0);
    EXPECT_EQ(c(1, 1), 0.0);
}

TEST(CostMatrix, ZeroAffineGivesRowNorms) {
    const Matrix x = oracle::random_matrix(4, 3, 1);
    const Matrix y = oracle::random_matrix(4, 3, 2);
    const Matrix c = build_cost_matrix(x, y, Matrix::Zero(3, 3), Vector::Zero(3));
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 4; ++j) EXPECT_NEAR(c(i, j), x.row(i).squaredNorm(), 1e-15);
    }
}

TEST(CostMatrix, MatchesDoubleLoop) {
    const Matrix x = oracle::random_matrix(5, 2, 3), y = oracle::random_matrix(5, 2, 4);
    const Matrix A = oracle::random_matrix(2, 2, 5);
    const Vector b = oracle::random_matrix(2, 1, 6);
    const Eigen::MatrixXd expected = oracle::loop_cost_matrix(x, y, A, b);
    EXPECT_LE((build_cost_matrix(x, y, A, b) - Matrix(expected)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(build_cost_matrix(x, oracle::random_matrix(5, 3, 1), Matrix::Identity(2, 2), Vector::Zero(2)), Error);
}

TEST(FitAffine, SelfRegression) {
    const Matrix x = oracle::random_matrix(10, 2, 7);
    const AffineFit f = fit_affine(x, x, Permutation::identity(10));
    EXPECT_LE((f.A - Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_LE(f.b.norm(), 1e-12);
    EXPECT_FALSE(f.rank_deficient);
}

TEST(FitAffine, ExactOneDimensional) {
    Matrix y(5, 1);
    y << 0, 1, 2, 3, 4;
    const Matrix x = (2.0 * y.array() + 1.0).matrix();
    const AffineFit f = fit_affine(x, y, Permutation::identity(5));
    EXPECT_NEAR(f.A(0, 0), 2.0, 1e-12);
    EXPECT_NEAR(f.b(0), 1.0, 1e-12);
}

TEST(FitAffine, MatchesQrLeastSquares) {
    const Matrix x = oracle::random_matrix(20, 2, 8), y = oracle::random_matrix(20, 2, 9);
    const Permutation sigma = random_permutation(20, 10);
    const AffineFit f = fit_affine(x, y, sigma);
    Eigen::MatrixXd design(20, 3);
    for (Index i = 0; i < 20; ++i) design.row(i) << y(sigma[i], 0), y(sigma[i], 1), 1.0;
    const Eigen::MatrixXd beta = design.colPivHouseholderQr().solve(Eigen::MatrixXd(x));
    EXPECT_LE((f.A - Matrix(beta.topRows(2).transpose())).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((f.b - Vector(beta.row(2).transpose())).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(FitAffine, RidgeFallbackOnCollinearReference) {
    Matrix y(6, 2);
    y << 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5;
    const Matrix x = oracle::random_matrix(6, 2, 11);
    const AffineFit f = fit_affine(x, y, Permutation::identity(6));
    EXPECT_TRUE(f.rank_deficient);
    EXPECT_TRUE(f.A.allFinite());
    EXPECT_TRUE(f.b.allFinite());
}

TEST(FuzzyMatch, RecoversPermutation) {
    const Matrix x = oracle::random_matrix(100, 2, 12);
    const Permutation pi = random_permutation(100, 13);
    const Matrix y = apply_permutation(x, pi);  // y_j = x_pi(j)
    const MatchResult m = fuzzy_match(x, y);
    EXPECT_TRUE(m.converged);
    EXPECT_LE((m.A - Matrix::Identity(2, 2)).norm(), 1e-6);
    EXPECT_LE(m.b.norm(), 1e-6);
    EXPECT_EQ(m.sigma, pi.inverse());
}

TEST(FuzzyMatch, AbsorbsTranslation) {
    const Matrix x = oracle::random_matrix(60, 2, 14);
    Matrix y = x;
    y.array() += 10.0;
    const MatchResult m = fuzzy_match(x, y);
    EXPECT_LE((m.A - Matrix::Identity(2, 2)).norm(), 1e-8);
    EXPECT_NEAR(m.b(0), -10.0, 1e-8);
    EXPECT_NEAR(m.b(1), -10.0, 1e-8);
}

TEST(FuzzyMatch, GaussianToUniformConvergesQuickly) {
    const Matrix x = oracle::random_normal(100, 2, 15);
    const Matrix y = shape_sampler("uniform-rect", {0.0, 1.0}, 100, 2, 16);
    const MatchResult m = fuzzy_match(x, y);
    EXPECT_TRUE(m.converged);
    EXPECT_LE(m.iterations, 10);
}

TEST(FuzzyMatch, ObjectiveNonIncreasingAndSigmaBijective) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = oracle::random_normal(40, 2, 100 + seed);
        const Matrix y = shape_sampler("ring", {}, 40, 2, 200 + seed);
        const MatchResult m = fuzzy_match(x, y);
        for (std::size_t t = 1; t < m.objective_trace.size(); ++t) {
            ASSERT_LE(m.objective_trace[t], m.objective_trace[t - 1] * (1.0 + 1e-12) + 1e-12) << "seed " << seed;
        }
        std::vector<Index> sorted = m.sigma.values();
        std::sort(sorted.begin(), sorted.end());
        for (Index i = 0; i < 40; ++i) ASSERT_EQ(sorted[static_cast<std::size_t>(i)], i);
    }
}
