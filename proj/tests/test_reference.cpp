#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <set>

#include "oracles.hpp"
#include "qqe/reference.hpp"

using namespace qqe;

TEST(SampleReference, UniformMean) {
    const ReferenceSpec spec{StandardFamily{"uniform-rect", {0.0, 1.0}}, 0};
    const Matrix y = sample_reference(spec, 1000, 2, 21);
    EXPECT_NEAR(y.col(0).mean(), 0.5, 0.05);
    EXPECT_NEAR(y.col(1).mean(), 0.5, 0.05);
}

TEST(SampleReference, GaussianVariance) {
    const ReferenceSpec spec{StandardFamily{"gaussian", {0.0, 1.0}}, 0};
    const Matrix y = sample_reference(spec, 2000, 1, 22);
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / 1999.0;
    EXPECT_NEAR(var, 1.0, 0.1);
}

TEST(SampleReference, EmpiricalPassThroughAndDimensionCheck) {
    const Matrix s = oracle::random_matrix(8, 2, 23);
    const ReferenceSpec spec{EmpiricalSample{s}, 0};
    EXPECT_EQ(sample_reference(spec, 8, 2, 1), s);
    EXPECT_THROW(sample_reference(spec, 8, 3, 1), Error);
    const ReferenceSpec tables{CdfTables{{CdfTable({0.0, 1.0}, {0.0, 1.0})}}, 0};
    EXPECT_THROW(sample_reference(tables, 8, 2, 1), Error);
}

TEST(InverseCdf, UniformTablePassesKs) {
    const CdfTable t({0.0, 1.0}, {0.0, 1.0});
    auto v = sample_inverse_cdf(t, 1000, 24);
    std::sort(v.begin(), v.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double n = static_cast<double>(v.size());
        ks = std::max({ks, std::abs((i + 1) / n - v[i]), std::abs(v[i] - i / n)});
    }
    EXPECT_LT(ks, 0.05);
}

TEST(InverseCdf, PointMass) {
    const CdfTable t({3.0}, {1.0});
    for (double v : sample_inverse_cdf(t, 200, 25)) ASSERT_EQ(v, 3.0);
}

TEST(InverseCdf, TwoStepMass) {
    // F jumps to 0.5 at 0 and to 1 at 1; values between are never drawn
    // because the table is flat there.
    const CdfTable t({0.0, 1.0 - 1e-12, 1.0}, {0.5, 0.5, 1.0});
    const auto v = sample_inverse_cdf(t, 2000, 26);
    const auto zeros = std::count(v.begin(), v.end(), 0.0);
    for (double x : v) ASSERT_TRUE(x == 0.0 || x >= 1.0 - 1e-12);
    EXPECT_NEAR(static_cast<double>(zeros) / 2000.0, 0.5, 0.05);
}

TEST(InverseCdf, InvalidTables) {
    EXPECT_THROW(CdfTable({0.0, 1.0}, {0.0, 0.9}), Error);
    EXPECT_THROW(CdfTable({1.0, 0.0}, {0.0, 1.0}), Error);
    EXPECT_THROW(CdfTable({0.0, 1.0}, {0.6, 0.5}), Error);
    EXPECT_THROW(CdfTable({}, {}), Error);
}

TEST(Resize, IdentitySubsampleBootstrap) {
    const Matrix s5 = oracle::random_matrix(5, 2, 27);
    EXPECT_EQ(resize_reference(s5, 5, 1), s5);

    const Matrix s10 = oracle::random_matrix(10, 2, 28);
    const Matrix sub = resize_reference(s10, 4, 2);
    ASSERT_EQ(sub.rows(), 4);
    std::set<Index> used;
    for (Index i = 0; i < 4; ++i) {
        Index found = -1;
        for (Index j = 0; j < 10; ++j) {
            if (sub.row(i) == s10.row(j)) found = j;
        }
        ASSERT_GE(found, 0);
        used.insert(found);
    }
    EXPECT_EQ(used.size(), 4u);

    const Matrix s3 = oracle::random_matrix(3, 2, 29);
    const Matrix boot = resize_reference(s3, 7, 3);
    ASSERT_EQ(boot.rows(), 7);
    EXPECT_EQ(Matrix(boot.topRows(3)), s3);
    for (Index i = 3; i < 7; ++i) {
        bool present = false;
        for (Index j = 0; j < 3; ++j) present = present || boot.row(i) == s3.row(j);
        EXPECT_TRUE(present);
    }
}

TEST(Shapes, RingSupport) {
    const Matrix y = shape_sampler("ring", {0.8, 1.0}, 500, 2, 30);
    for (Index i = 0; i < y.rows(); ++i) {
        const double r = y.row(i).norm();
        ASSERT_GE(r, 0.8 - 1e-12);
        ASSERT_LE(r, 1.0 + 1e-12);
    }
}

TEST(Shapes, GmmBothComponentsPopulated) {
    const Matrix y = shape_sampler("gmm", {-5, 0, 5, 0, 1.0}, 400, 2, 31);
    int left = 0;
    for (Index i = 0; i < y.rows(); ++i) left += (y(i, 0) + 5) * (y(i, 0) + 5) < (y(i, 0) - 5) * (y(i, 0) - 5);
    EXPECT_GE(left, 100);
    EXPECT_GE(400 - left, 100);
}

TEST(Shapes, UniformRectSquare) {
    const Matrix y = shape_sampler("uniform-rect", {0.5, 1.5}, 1000, 2, 32);
    EXPECT_GE(y.minCoeff(), 0.5);
    EXPECT_LT(y.maxCoeff(), 1.5);
    EXPECT_NEAR(y.col(0).mean(), 1.0, 0.05);
}

TEST(Shapes, BoundedSupports) {
    const Matrix tri = shape_sampler("triangle", {2.0}, 500, 2, 33);
    for (Index i = 0; i < tri.rows(); ++i) {
        ASSERT_GE(tri(i, 1), 0.0);
        ASSERT_LE(tri(i, 1), std::sqrt(3.0) * (1.0 - std::abs(tri(i, 0))) + 1e-12);
    }
    const Matrix dia = shape_sampler("diamond", {1.0}, 500, 2, 34);
    for (Index i = 0; i < dia.rows(); ++i) ASSERT_LE(std::abs(dia(i, 0)) + std::abs(dia(i, 1)), 1.0 + 1e-12);
    const Matrix sq = shape_sampler("thick-square", {0.8, 1.0}, 500, 2, 35);
    for (Index i = 0; i < sq.rows(); ++i) {
        const double m = sq.row(i).cwiseAbs().maxCoeff();
        ASSERT_GE(m, 0.8 - 1e-12);
        ASSERT_LE(m, 1.0 + 1e-12);
    }
    const Matrix disc = shape_sampler("filled-circle", {1.0}, 500, 2, 36);
    for (Index i = 0; i < disc.rows(); ++i) ASSERT_LE(disc.row(i).norm(), 1.0 + 1e-12);
}

TEST(Shapes, EveryNameIsDeterministic) {
    for (const auto& name : shape_names()) {
        const Index d = name == "helix" ? 3 : 2;
        const Matrix a = shape_sampler(name, {}, 64, d, 37);
        const Matrix b = shape_sampler(name, {}, 64, d, 37);
        const Matrix c = shape_sampler(name, {}, 64, d, 38);
        EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())), 0) << name;
        EXPECT_NE(a, c) << name;
        EXPECT_TRUE(a.allFinite()) << name;
    }
}

TEST(Shapes, UnknownNameAndGrammar) {
    try {
        shape_sampler("moon", {}, 10, 2, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownShape);
    }
    const auto fam = parse_ref_dist("uniform-rect:0.5,1.5");
    EXPECT_EQ(fam.name, "uniform-rect");
    EXPECT_EQ(fam.params, (std::vector<double>{0.5, 1.5}));
    EXPECT_TRUE(parse_ref_dist("ring").params.empty());
    EXPECT_THROW(parse_ref_dist("ring:a"), Error);
    EXPECT_THROW(parse_ref_dist("nope:1"), Error);
}
