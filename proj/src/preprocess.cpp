#include "phirl/preprocess.hpp"

#include <cmath>
#include <span>

#include "phirl/distributions.hpp"
#include "phirl/error.hpp"
#include "phirl/numeric.hpp"
#include "phirl/stats.hpp"

namespace phirl {

namespace {

std::span<const double> column(const Eigen::MatrixXd& m, Eigen::Index j) {
    return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

bool constant_column(const Eigen::MatrixXd& m, Eigen::Index j) {
    return (m.col(j).array() == m(0, j)).all();
}

void require_steps(const LatentTrajectory& traj, const char* op) {
    if (traj.steps() < 2) throw Error(std::string(op) + ": need T >= 2");
}

}  // namespace

ColumnTransform rank_normalize(const LatentTrajectory& traj) {
    require_steps(traj, "rank_normalize");
    ColumnTransform out{traj, {}};
    const Eigen::Index T = traj.values.rows();
    const double Td = static_cast<double>(T);
    for (Eigen::Index j = 0; j < traj.values.cols(); ++j) {
        if (constant_column(traj.values, j)) {
            out.trajectory.values.col(j).setZero();
            out.constant_units.push_back(static_cast<std::size_t>(j));
            continue;
        }
        const auto ranks = average_ranks(column(traj.values, j));
        for (Eigen::Index t = 0; t < T; ++t) {
            out.trajectory.values(t, j) = normal_quantile((ranks[static_cast<std::size_t>(t)] - 0.5) / Td);
        }
    }
    return out;
}

ColumnTransform zscore(const LatentTrajectory& traj) {
    require_steps(traj, "zscore");
    ColumnTransform out{traj, {}};
    for (Eigen::Index j = 0; j < traj.values.cols(); ++j) {
        const auto col = column(traj.values, j);
        const double sd = sample_std(col);
        if (constant_column(traj.values, j) || !(sd > 0.0)) {
            out.trajectory.values.col(j).setZero();
            out.constant_units.push_back(static_cast<std::size_t>(j));
            continue;
        }
        const double mu = mean(col);
        out.trajectory.values.col(j) = (traj.values.col(j).array() - mu) / sd;
    }
    return out;
}

ColumnTransform preprocess(const LatentTrajectory& traj) {
    auto ranked = rank_normalize(traj);
    auto scaled = zscore(ranked.trajectory);
    // rank_normalize zeroes constant columns, so zscore flags the same set
    return scaled;
}

PreprocessReport normality_fraction(const LatentTrajectory& traj, double alpha) {
    if (traj.steps() < 20) {
        throw Error("normality_fraction: need T >= 20 for the D'Agostino-Pearson test, got T=" +
                    std::to_string(traj.steps()));
    }
    PreprocessReport report;
    report.n_units = traj.units();
    report.alpha = alpha;
    std::size_t tested = 0, rejected = 0;
    for (Eigen::Index j = 0; j < traj.values.cols(); ++j) {
        if (constant_column(traj.values, j)) {
            report.constant_units.push_back(static_cast<std::size_t>(j));
            continue;
        }
        ++tested;
        if (dagostino_k2(column(traj.values, j)).p_value < alpha) ++rejected;
    }
    report.fraction_rejecting = tested ? static_cast<double>(rejected) / static_cast<double>(tested) : 0.0;
    return report;
}

}  // namespace phirl
