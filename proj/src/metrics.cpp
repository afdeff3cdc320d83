#include "phirl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "phirl/error.hpp"
#include "phirl/gaussinfo.hpp"
#include "phirl/numeric.hpp"
#include "phirl/stats.hpp"

namespace phirl {

double participation_ratio(const Eigen::MatrixXd& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
    const double s = lambda.sum();
    const double s2 = lambda.squaredNorm();
    if (!(s2 > 0.0)) throw Error("participation_ratio: covariance is zero");
    return std::clamp(s * s / s2, 1.0, static_cast<double>(cov.rows()));
}

double mean_magnitude(const LatentTrajectory& traj) {
    if (traj.values.rows() == 0) throw Error("mean_magnitude: empty trajectory");
    return traj.values.rowwise().norm().mean();
}

MetricVector baseline_metrics(const LatentTrajectory& traj, std::vector<std::size_t>* constant_units) {
    const Eigen::Index T = traj.values.rows();
    if (T < 3) throw Error("baseline_metrics: need T >= 3");
    std::vector<Eigen::Index> live;
    std::vector<std::size_t> dead;
    for (Eigen::Index j = 0; j < traj.values.cols(); ++j) {
        if ((traj.values.col(j).array() == traj.values(0, j)).all()) {
            dead.push_back(static_cast<std::size_t>(j));
        } else {
            live.push_back(j);
        }
    }
    if (constant_units) *constant_units = dead;

    if (live.empty()) throw Error("baseline_metrics: every unit is constant");
    MetricVector m;
    m.magnitude = mean_magnitude(traj);

    const auto k = static_cast<Eigen::Index>(live.size());
    Eigen::MatrixXd x(T, k);
    for (Eigen::Index c = 0; c < k; ++c) x.col(c) = traj.values.col(live[static_cast<std::size_t>(c)]);
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(T - 1);

    double entropy = 0.0, autocorr = 0.0;
    for (Eigen::Index c = 0; c < k; ++c) {
        entropy += gaussian_entropy(cov(c, c));
        const std::span<const double> col(x.col(c).data(), static_cast<std::size_t>(T));
        const auto head = col.first(static_cast<std::size_t>(T - 1));
        const auto tail = col.last(static_cast<std::size_t>(T - 1));
        const bool flat = std::all_of(head.begin(), head.end(), [&](double v) { return v == head[0]; }) ||
                          std::all_of(tail.begin(), tail.end(), [&](double v) { return v == tail[0]; });
        autocorr += flat ? 0.0 : pearson(head, tail);
    }
    m.entropy = entropy / static_cast<double>(k);
    m.autocorrelation = autocorr / static_cast<double>(k);

    double mi = 0.0;
    std::size_t pairs = 0;
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = a + 1; b < k; ++b) {
            mi += gaussian_mi_bivariate(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b)));
            ++pairs;
        }
    }
    m.mutual_information = pairs ? mi / static_cast<double>(pairs) : 0.0;
    m.effective_dimension = participation_ratio(cov);
    return m;
}

DescriptorVector descriptors(std::span<const double> series, std::size_t interval) {
    const std::size_t L = series.size();
    if (L < 3) throw Error("descriptors: need a series of length >= 3");
    if (interval < 1) throw Error("descriptors: interval must be >= 1");
    DescriptorVector d;
    d.std = sample_std(series);

    const double mu = mean(series);
    const double tbar = 0.5 * static_cast<double>(L - 1);
    double stt = 0.0, sty = 0.0, sst = 0.0;
    for (std::size_t t = 0; t < L; ++t) {
        const double dt = static_cast<double>(t) - tbar;
        stt += dt * dt;
        sty += dt * (series[t] - mu);
        sst += (series[t] - mu) * (series[t] - mu);
    }
    d.trend = sty / stt;

    std::vector<double> time(L);
    for (std::size_t t = 0; t < L; ++t) time[t] = static_cast<double>(t);
    d.monotonicity = kendall_tau_b(series, time);

    // R^2 of the piecewise-constant interval-mean model
    if (sst > 0.0 && L > interval) {
        double ssres = 0.0;
        for (std::size_t start = 0; start < L; start += interval) {
            const std::size_t len = std::min(interval, L - start);
            const auto block = series.subspan(start, len);
            const double bm = mean(block);
            for (double v : block) ssres += (v - bm) * (v - bm);
        }
        d.flatness = 1.0 - ssres / sst;
    }

    std::vector<std::size_t> peaks;
    for (std::size_t t = 1; t + 1 < L; ++t) {
        const bool maximum = series[t] > series[t - 1] && series[t] > series[t + 1];
        const bool minimum = series[t] < series[t - 1] && series[t] < series[t + 1];
        if (maximum || minimum) peaks.push_back(t);
    }
    d.n_peaks = peaks.size();
    if (peaks.size() >= 2) {
        double gap = 0.0, diff = 0.0;
        double lo = series[peaks[0]], hi = series[peaks[0]];
        for (std::size_t i = 1; i < peaks.size(); ++i) {
            gap += static_cast<double>(peaks[i] - peaks[i - 1]);
            diff += std::abs(series[peaks[i]] - series[peaks[i - 1]]);
            lo = std::min(lo, series[peaks[i]]);
            hi = std::max(hi, series[peaks[i]]);
        }
        const double m = static_cast<double>(peaks.size() - 1);
        d.peak_distance = gap / m;
        d.peak_difference = diff / m;
        d.range = hi - lo;
    }
    return d;
}

}  // namespace phirl
