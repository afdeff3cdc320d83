#include "phirl/gaussinfo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "phirl/error.hpp"

namespace phirl {

namespace {

double log_det_spd(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) {
        return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(m);
    const auto d = ldlt.vectorD().array();
    if ((d <= 0.0).any()) throw Error("gaussian_mi_blocks: covariance is not positive definite");
    return d.log().sum();
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y, std::string_view x_name,
               std::string_view y_name) {
    if (x.size() != y.size()) throw Error("pearson: series differ in length");
    if (x.size() < 2) throw Error("pearson: need at least 2 observations");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (!(sxx > 0.0)) throw Error("pearson: series '" + std::string(x_name) + "' is constant");
    if (!(syy > 0.0)) throw Error("pearson: series '" + std::string(y_name) + "' is constant");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double gaussian_mi_bivariate(double rho) {
    const double r2 = std::min(rho * rho, 1.0 - 1e-12);
    return -0.5 * std::log1p(-r2);
}

double gaussian_entropy(double variance) {
    return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * variance);
}

double gaussian_mi_blocks(const Eigen::MatrixXd& cov, Eigen::Index p) {
    const Eigen::Index total = cov.rows();
    if (cov.cols() != total) throw Error("gaussian_mi_blocks: covariance must be square");
    if (p < 1 || p >= total) throw Error("gaussian_mi_blocks: both blocks must be non-empty");
    if (!cov.allFinite()) throw Error("gaussian_mi_blocks: covariance has non-finite entries");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
        throw Error("gaussian_mi_blocks: covariance is not symmetric");
    }
    Eigen::MatrixXd s = cov;
    s.diagonal().array() += kCovarianceRidge;
    const Eigen::Index q = total - p;
    const double mi = 0.5 * (log_det_spd(s.topLeftCorner(p, p)) + log_det_spd(s.bottomRightCorner(q, q)) -
                             log_det_spd(s));
    return std::max(mi, 0.0);
}

MIMatrix lag1_mi_matrix(const LatentTrajectory& traj, int lag) {
    if (lag < 1) throw Error("lag1_mi_matrix: lag must be >= 1");
    const Eigen::Index T = traj.values.rows();
    const Eigen::Index n = traj.values.cols();
    if (T < lag + 2) throw Error("lag1_mi_matrix: need T >= " + std::to_string(lag + 2));
    const Eigen::Index L = T - lag;
    // centered and unit-normalized source (t) and target (t + lag) slices
    Eigen::MatrixXd src = traj.values.topRows(L);
    Eigen::MatrixXd dst = traj.values.bottomRows(L);
    src.rowwise() -= src.colwise().mean();
    dst.rowwise() -= dst.colwise().mean();
    Eigen::VectorXd src_norm = src.colwise().norm();
    Eigen::VectorXd dst_norm = dst.colwise().norm();
    // exact-zero test on the raw slices; centered norms may carry rounding noise
    auto sliced_constant = [&](Eigen::Index row0, Eigen::Index j) {
        return (traj.values.col(j).segment(row0, L).array() == traj.values(row0, j)).all();
    };
    for (Eigen::Index j = 0; j < n; ++j) {
        if (sliced_constant(0, j)) src_norm(j) = 0.0;
        if (sliced_constant(lag, j)) dst_norm(j) = 0.0;
    }
    const Eigen::MatrixXd cross = src.transpose() * dst;
    MIMatrix out;
    out.lag = lag;
    out.values = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (src_norm(i) == 0.0 || dst_norm(j) == 0.0) continue;
            const double rho = std::clamp(cross(i, j) / (src_norm(i) * dst_norm(j)), -1.0, 1.0);
            out.values(i, j) = gaussian_mi_bivariate(rho);
        }
    }
    return out;
}

}  // namespace phirl
