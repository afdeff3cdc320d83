#include <cmath>

#include <gtest/gtest.h>

#include "phirl/error.hpp"
#include "phirl/gaussinfo.hpp"
#include "phirl/preprocess.hpp"
#include "phirl/synth.hpp"
#include "test_util.hpp"

using namespace phirl;

TEST(Pearson, SmallCases) {
    const std::vector<double> x{1, 2, 3};
    EXPECT_NEAR(pearson(x, x), 1.0, 1e-15);
    EXPECT_NEAR(pearson(x, std::vector<double>{3, 2, 1}), -1.0, 1e-15);
    EXPECT_NEAR(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-15);
}

TEST(Pearson, ConstantSeriesNamed) {
    try {
        pearson(std::vector<double>{1, 2}, std::vector<double>{4, 4}, "a", "unit 7");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("unit 7"), std::string::npos);
    }
}

TEST(GaussianMI, ClosedForm) {
    EXPECT_EQ(gaussian_mi_bivariate(0.0), 0.0);
    EXPECT_NEAR(gaussian_mi_bivariate(0.5), -0.5 * std::log(0.75), 1e-15);
    EXPECT_NEAR(gaussian_mi_bivariate(0.5), 0.143841, 1e-6);
    EXPECT_NEAR(gaussian_mi_bivariate(0.8), 0.510826, 1e-6);
    EXPECT_EQ(gaussian_mi_bivariate(0.3), gaussian_mi_bivariate(-0.3));
    EXPECT_NEAR(gaussian_mi_bivariate(1.0), -0.5 * std::log(1e-12), 1e-4);  // 1 - (1 - 1e-12) is not exact in doubles
    EXPECT_TRUE(std::isfinite(gaussian_mi_bivariate(-1.0)));
    EXPECT_NEAR(gaussian_entropy(1.0), 0.5 * std::log(2 * M_PI * M_E), 1e-15);
}

TEST(GaussianMI, BlocksAgreeWithBivariate) {
    Eigen::MatrixXd c(2, 2);
    c << 1, 0.5, 0.5, 1;
    EXPECT_NEAR(gaussian_mi_blocks(c, 1), 0.143841, 1e-6);
    EXPECT_NEAR(gaussian_mi_blocks(Eigen::MatrixXd::Identity(2, 2), 1), 0.0, 1e-15);
    Eigen::MatrixXd blocks = Eigen::MatrixXd::Zero(4, 4);
    blocks.topLeftCorner(2, 2) = testutil::random_spd(2, 1);
    blocks.bottomRightCorner(2, 2) = testutil::random_spd(2, 2);
    EXPECT_LE(gaussian_mi_blocks(blocks, 2), 1e-6);
}

TEST(GaussianMI, RejectsAsymmetricInput) {
    Eigen::MatrixXd c(2, 2);
    c << 1, 0.5, 0.4, 1;
    EXPECT_THROW(gaussian_mi_blocks(c, 1), Error);
}

TEST(GaussianMI, BlockSwapSymmetryAndMonotonicity) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Eigen::MatrixXd c = testutil::random_spd(5, seed);
        // Swap blocks A = {0,1}, B = {2,3,4}.
        Eigen::PermutationMatrix<5> perm;
        perm.indices() << 3, 4, 0, 1, 2;
        const Eigen::MatrixXd swapped = perm * c * perm.transpose();
        EXPECT_NEAR(gaussian_mi_blocks(c, 2), gaussian_mi_blocks(swapped, 3), 1e-10);
        // Growing A by one variable (taken from outside, B = {4} fixed) cannot lose information.
        Eigen::MatrixXd small(2, 2), large(3, 3);
        const std::vector<int> s{0, 4}, l{0, 1, 4};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) small(i, j) = c(s[i], s[j]);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) large(i, j) = c(l[i], l[j]);
        EXPECT_GE(gaussian_mi_blocks(large, 2), gaussian_mi_blocks(small, 1) - 1e-12);
    }
}

TEST(GaussianMI, SampledBivariateConverges) {
    Rng rng(21);
    const int T = 1000000;
    std::vector<double> x(T), y(T);
    for (int t = 0; t < T; ++t) {
        x[t] = rng.normal();
        y[t] = 0.8 * x[t] + 0.6 * rng.normal();
    }
    EXPECT_NEAR(gaussian_mi_bivariate(pearson(x, y)), 0.510826, 1e-2);
}

TEST(Lag1Matrix, WhiteNoiseIsNearZero) {
    const auto mi = lag1_mi_matrix(testutil::from_matrix(testutil::gaussian_matrix(100000, 4, 5)));
    EXPECT_LT(mi.values.maxCoeff(), 5e-4);
    EXPECT_GE(mi.values.minCoeff(), 0.0);
}

TEST(Lag1Matrix, CopySystemHasOneStrongEntry) {
    Rng rng(6);
    const int T = 20000;
    Eigen::MatrixXd m(T, 3);
    for (int t = 0; t < T; ++t) {
        m(t, 0) = rng.normal();
        m(t, 2) = rng.normal();
        m(t, 1) = t > 0 ? m(t - 1, 0) + 0.01 * rng.normal() : rng.normal();
    }
    const auto mi = lag1_mi_matrix(preprocess(testutil::from_matrix(m)).trajectory);
    EXPECT_GT(mi.values(0, 1), 2.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (!(i == 0 && j == 1)) EXPECT_LT(mi.values(i, j), 0.05) << i << "," << j;
}

TEST(Lag1Matrix, SwapSystemMatchesStationaryOracle) {
    Var1System sys;
    sys.transition.resize(2, 2);
    sys.transition << 0, 0.9, 0.9, 0;
    sys.noise_cov = Eigen::MatrixXd::Identity(2, 2) * 0.5;
    const auto stat = stationary_cov_var1(sys);
    const auto mi = lag1_mi_matrix(gen_var1(sys, 200000, 3));
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double rho = stat.lag1(i, j) / std::sqrt(stat.cov(i, i) * stat.cov(j, j));
            EXPECT_NEAR(mi.values(i, j), gaussian_mi_bivariate(rho), 0.01);
        }
    }
}

TEST(Lag1Matrix, ConstantColumnGivesZeroAndShortInputThrows) {
    Eigen::MatrixXd m = testutil::gaussian_matrix(50, 3, 1);
    m.col(2).setConstant(4.0);
    const auto mi = lag1_mi_matrix(testutil::from_matrix(m));
    EXPECT_EQ(mi.values.row(2).sum() + mi.values.col(2).sum(), 0.0);
    EXPECT_THROW(lag1_mi_matrix(testutil::from_matrix(testutil::gaussian_matrix(2, 2, 1))), Error);
}
