#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "phirl/error.hpp"
#include "phirl/metrics.hpp"
#include "phirl/preprocess.hpp"
#include "test_util.hpp"

using namespace phirl;

namespace {

std::vector<double> sine(std::size_t n, double period) {
    std::vector<double> s(n);
    for (std::size_t t = 0; t < n; ++t) s[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
    return s;
}

// Interior strict extrema, counted directly.
std::vector<std::size_t> peaks_by_scan(const std::vector<double>& s) {
    std::vector<std::size_t> p;
    for (std::size_t t = 1; t + 1 < s.size(); ++t)
        if ((s[t] - s[t - 1]) * (s[t] - s[t + 1]) > 0) p.push_back(t);
    return p;
}

}  // namespace

TEST(Descriptors, LinearRamp) {
    const std::vector<double> ramp{0, 1, 2, 3, 4};
    const auto d = descriptors(ramp);
    EXPECT_NEAR(d.std, std::sqrt(2.5), 1e-12);
    EXPECT_NEAR(d.trend, 1.0, 1e-12);
    EXPECT_NEAR(d.monotonicity, 1.0, 1e-12);
    EXPECT_EQ(d.n_peaks, 0u);
    EXPECT_EQ(d.peak_distance, 0.0);
    EXPECT_EQ(d.peak_difference, 0.0);
    EXPECT_EQ(d.range, 0.0);
    EXPECT_EQ(d.flatness, 0.0);
}

TEST(Descriptors, SampledSine) {
    const auto s = sine(100, 20);
    const auto d = descriptors(s);
    const auto p = peaks_by_scan(s);
    ASSERT_EQ(p.size(), 10u);
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(p[2 * i], 5 + 20 * i);
        EXPECT_EQ(p[2 * i + 1], 15 + 20 * i);
    }
    EXPECT_EQ(d.n_peaks, 10u);
    EXPECT_NEAR(d.peak_distance, 10.0, 1e-6);
    EXPECT_NEAR(d.range, 2.0, 1e-6);
    EXPECT_NEAR(d.peak_difference, 2.0, 1e-6);
}

TEST(Descriptors, ConstantSeries) {
    const std::vector<double> c(50, 3.25);
    const auto d = descriptors(c);
    EXPECT_EQ(d.std, 0.0);
    EXPECT_EQ(d.trend, 0.0);
    EXPECT_EQ(d.monotonicity, 0.0);
    EXPECT_EQ(d.flatness, 0.0);
    EXPECT_EQ(d.n_peaks, 0u);
}

TEST(Descriptors, PlateausAreNotPeaks) {
    EXPECT_EQ(descriptors(std::vector<double>{0, 1, 1, 0, 0, 1}).n_peaks, 0u);
    const auto d = descriptors(std::vector<double>{0, 1, 1, 0, 2, 0});
    EXPECT_EQ(d.n_peaks, 2u);
    EXPECT_EQ(d.peak_distance, 1.0);
    EXPECT_EQ(d.range, 2.0);
}

TEST(Descriptors, FlatnessOfIntervalMeans) {
    // Two flat steps: the piecewise model is exact.
    std::vector<double> s(20, 1.0);
    std::fill(s.begin() + 10, s.end(), 4.0);
    EXPECT_NEAR(descriptors(s, 10).flatness, 1.0, 1e-12);
    // Direct evaluation with a short final interval.
    const std::vector<double> v{1, 2, 4, 8, 16, 32, 64};
    double mu = 0, sst = 0, ssres = 0;
    for (double x : v) mu += x / 7.0;
    for (double x : v) sst += (x - mu) * (x - mu);
    for (auto [lo, hi] : {std::pair{0, 3}, std::pair{3, 6}, std::pair{6, 7}}) {
        double m = 0;
        for (int i = lo; i < hi; ++i) m += v[i] / (hi - lo);
        for (int i = lo; i < hi; ++i) ssres += (v[i] - m) * (v[i] - m);
    }
    EXPECT_NEAR(descriptors(v, 3).flatness, 1.0 - ssres / sst, 1e-12);
    EXPECT_EQ(descriptors(v, 7).flatness, 0.0);
}

TEST(Descriptors, AffineEquivariance) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto s = testutil::gaussian_vector(250, seed);
        const double a = 0.5 + static_cast<double>(seed), b = -3.0 + static_cast<double>(seed) / 7;
        std::vector<double> t(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) t[i] = a * s[i] + b;
        const auto d = descriptors(s), e = descriptors(t);
        EXPECT_NEAR(e.std, a * d.std, 1e-9 * a);
        EXPECT_NEAR(e.trend, a * d.trend, 1e-9 * a);
        EXPECT_NEAR(e.peak_difference, a * d.peak_difference, 1e-9 * a);
        EXPECT_NEAR(e.range, a * d.range, 1e-9 * a);
        EXPECT_NEAR(e.monotonicity, d.monotonicity, 1e-12);
        EXPECT_EQ(e.n_peaks, d.n_peaks);
        EXPECT_NEAR(e.peak_distance, d.peak_distance, 1e-12);
        EXPECT_NEAR(e.flatness, d.flatness, 1e-9);
    }
}

TEST(Descriptors, Reversal) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto s = testutil::gaussian_vector(120, seed + 50, 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) s[i] += 0.01 * static_cast<double>(i);
        auto r = s;
        std::reverse(r.begin(), r.end());
        const auto d = descriptors(s), e = descriptors(r);
        EXPECT_NEAR(e.trend, -d.trend, 1e-12);
        EXPECT_NEAR(e.monotonicity, -d.monotonicity, 1e-12);
        EXPECT_NEAR(e.std, d.std, 1e-12);
        EXPECT_EQ(e.n_peaks, d.n_peaks);
        EXPECT_NEAR(e.range, d.range, 1e-12);
    }
}

TEST(Descriptors, Invariants) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto s = testutil::gaussian_vector(3 + seed * 7, seed);
        const auto d = descriptors(s, 10);
        EXPECT_GE(d.monotonicity, -1.0);
        EXPECT_LE(d.monotonicity, 1.0);
        EXPECT_LE(d.flatness, 1.0 + 1e-12);
        EXPECT_GE(d.peak_distance, 0.0);
        EXPECT_GE(d.range, 0.0);
        if (d.n_peaks == 0) {
            EXPECT_EQ(d.peak_distance, 0.0);
            EXPECT_EQ(d.peak_difference, 0.0);
            EXPECT_EQ(d.range, 0.0);
        }
    }
    EXPECT_THROW(descriptors(std::vector<double>{1, 2}), Error);
}

TEST(ParticipationRatio, EqualEigenvalues) {
    for (int k = 1; k <= 6; ++k) {
        const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(testutil::gaussian_matrix(6, 6, k)).householderQ();
        Eigen::VectorXd ev = Eigen::VectorXd::Zero(6);
        ev.head(k).setConstant(2.5);
        EXPECT_NEAR(participation_ratio(q * ev.asDiagonal() * q.transpose()), k, 1e-9);
    }
}

TEST(BaselineMetrics, IndependentNoise) {
    const auto t = zscore(testutil::from_matrix(testutil::gaussian_matrix(100000, 4, 3))).trajectory;
    const auto m = baseline_metrics(t);
    EXPECT_NEAR(m.entropy, 0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-9);
    EXPECT_NEAR(m.mutual_information, 0.0, 1e-3);
    EXPECT_NEAR(m.effective_dimension, 4.0, 0.02);
    EXPECT_NEAR(m.autocorrelation, 0.0, 0.01);
    EXPECT_NEAR(m.magnitude, 1.88, 0.02);  // E||z|| for 4-d standard normal = 3 sqrt(pi / 8)
}

TEST(BaselineMetrics, IdenticalUnits) {
    Eigen::MatrixXd m(500, 5);
    const auto v = testutil::gaussian_vector(500, 4);
    for (Eigen::Index j = 0; j < 5; ++j)
        for (Eigen::Index i = 0; i < 500; ++i) m(i, j) = v[static_cast<std::size_t>(i)];
    EXPECT_NEAR(baseline_metrics(testutil::from_matrix(m)).effective_dimension, 1.0, 1e-9);
}

TEST(BaselineMetrics, ConstantUnitsAreExcluded) {
    Eigen::MatrixXd m = testutil::gaussian_matrix(300, 4, 5);
    const auto full = baseline_metrics(testutil::from_matrix(m.leftCols(3)));
    m.col(3).setConstant(0.0);
    std::vector<std::size_t> dead;
    const auto with_dead = baseline_metrics(testutil::from_matrix(m), &dead);
    EXPECT_EQ(dead, std::vector<std::size_t>{3});
    EXPECT_NEAR(with_dead.entropy, full.entropy, 1e-12);
    EXPECT_NEAR(with_dead.effective_dimension, full.effective_dimension, 1e-12);
    EXPECT_NEAR(with_dead.magnitude, full.magnitude, 1e-12);
    m.setConstant(1.0);
    EXPECT_THROW(baseline_metrics(testutil::from_matrix(m)), Error);
}

TEST(BaselineMetrics, AutocorrelationAndMagnitudeOracles) {
    const Eigen::MatrixXd m = testutil::gaussian_matrix(200, 3, 6);
    double ac = 0;
    for (Eigen::Index j = 0; j < 3; ++j) {
        const Eigen::VectorXd a = m.col(j).head(199), b = m.col(j).tail(199);
        const Eigen::VectorXd ca = a.array() - a.mean(), cb = b.array() - b.mean();
        ac += ca.dot(cb) / (ca.norm() * cb.norm()) / 3;
    }
    double mag = 0;
    for (Eigen::Index i = 0; i < 200; ++i) mag += std::sqrt(m.row(i).squaredNorm()) / 200;
    const auto r = baseline_metrics(testutil::from_matrix(m));
    EXPECT_NEAR(r.autocorrelation, ac, 1e-12);
    EXPECT_NEAR(r.magnitude, mag, 1e-12);
    EXPECT_GE(r.effective_dimension, 1.0);
    EXPECT_LE(r.effective_dimension, 3.0);
}
