#include <cmath>

#include <gtest/gtest.h>

#include "phirl/distributions.hpp"
#include "phirl/error.hpp"
#include "phirl/preprocess.hpp"
#include "test_util.hpp"

using namespace phirl;

namespace {

LatentTrajectory exponential_traj(std::size_t T, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = rng.exponential();
    return testutil::from_matrix(m);
}

}  // namespace

TEST(RankNormalize, ThreeValueColumn) {
    Eigen::MatrixXd m(3, 2);
    m << 3, 1, 1, 1, 2, 1;
    const auto r = rank_normalize(testutil::from_matrix(m));
    EXPECT_NEAR(r.trajectory.values(0, 0), 0.967421566101701, 1e-12);
    EXPECT_NEAR(r.trajectory.values(1, 0), -0.967421566101701, 1e-12);
    EXPECT_NEAR(r.trajectory.values(2, 0), 0.0, 1e-15);
    EXPECT_EQ(r.constant_units, std::vector<std::size_t>{1});
    EXPECT_EQ(r.trajectory.values.col(1), Eigen::VectorXd::Zero(3));
}

TEST(RankNormalize, ConstantPairBecomesZeros) {
    Eigen::MatrixXd m(2, 2);
    m << 5, 1, 5, 2;
    const auto r = rank_normalize(testutil::from_matrix(m));
    EXPECT_EQ(r.trajectory.values.col(0), Eigen::VectorXd::Zero(2));
    EXPECT_EQ(r.constant_units, std::vector<std::size_t>{0});
}

TEST(RankNormalize, FixedPointOnQuantileGrid) {
    const int T = 7;
    const int order[T] = {3, 0, 6, 1, 5, 2, 4};
    Eigen::MatrixXd m(T, 1);
    for (int i = 0; i < T; ++i) m(i, 0) = normal_quantile((order[i] + 0.5) / T);
    const auto r = rank_normalize(testutil::from_matrix(m));
    EXPECT_LT((r.trajectory.values - m).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(RankNormalize, InvariantUnderMonotoneMaps) {
    const Eigen::MatrixXd m = testutil::gaussian_matrix(50, 3, 11);
    const Eigen::MatrixXd mapped = m.array().exp() * 3.0 + 1.0;
    EXPECT_EQ(rank_normalize(testutil::from_matrix(m)).trajectory.values,
              rank_normalize(testutil::from_matrix(mapped)).trajectory.values);
}

TEST(ZScore, SmallColumnAndConstant) {
    Eigen::MatrixXd m(3, 2);
    m << 1, 7, 2, 7, 3, 7;
    const auto z = zscore(testutil::from_matrix(m));
    EXPECT_NEAR(z.trajectory.values(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(z.trajectory.values(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(z.trajectory.values(2, 0), 1.0, 1e-15);
    EXPECT_EQ(z.trajectory.values.col(1), Eigen::VectorXd::Zero(3));
    EXPECT_EQ(z.constant_units, std::vector<std::size_t>{1});
}

TEST(ZScore, Idempotent) {
    const auto once = zscore(testutil::from_matrix(testutil::gaussian_matrix(200, 4, 3) * 5.0)).trajectory;
    const auto twice = zscore(once).trajectory;
    EXPECT_LT((once.values - twice.values).cwiseAbs().maxCoeff(), 1e-12);
    for (Eigen::Index j = 0; j < 4; ++j) {
        EXPECT_NEAR(once.values.col(j).mean(), 0.0, 1e-12);
        EXPECT_NEAR(once.values.col(j).squaredNorm() / 199.0, 1.0, 1e-12);
    }
}

TEST(Normality, RejectionRateOnGaussianColumns) {
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        total += normality_fraction(testutil::from_matrix(testutil::gaussian_matrix(1000, 64, 900 + rep))).fraction_rejecting;
    }
    EXPECT_NEAR(total / 100.0, 0.05, 0.03);
}

TEST(Normality, ExponentialRejectedUntilGaussianized) {
    const auto raw = exponential_traj(1000, 64, 5);
    EXPECT_GT(normality_fraction(raw).fraction_rejecting, 0.95);
    EXPECT_LE(normality_fraction(rank_normalize(raw).trajectory).fraction_rejecting, 0.08);
}

TEST(Normality, ShortTrajectoryIsAnError) {
    EXPECT_THROW(normality_fraction(testutil::from_matrix(testutil::gaussian_matrix(19, 2, 1))), Error);
}

TEST(Preprocess, RankThenZScore) {
    const auto t = testutil::from_matrix(testutil::gaussian_matrix(30, 2, 8));
    const auto direct = zscore(rank_normalize(t).trajectory).trajectory;
    EXPECT_EQ(preprocess(t).trajectory.values, direct.values);
}
