#include "phirl/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "phirl/error.hpp"
#include "phirl/numeric.hpp"
#include "phirl/parallel.hpp"
#include "phirl/rng.hpp"

namespace phirl {

namespace {

constexpr double kZeroNorm = 1e-12;

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double c = a.dot(b) / (a.norm() * b.norm());
    return std::clamp(c, -1.0, 1.0);
}

Eigen::VectorXd path_direction(const Eigen::MatrixXd& e) {
    return (e.row(e.rows() - 1) - e.row(0)).transpose();
}

}  // namespace

PcaEmbedding embed_pca(const Eigen::MatrixXd& points, std::size_t m) {
    const Eigen::Index K = points.rows();
    const Eigen::Index d = points.cols();
    if (m < 1 || static_cast<Eigen::Index>(m) > d) {
        throw Error("embed_pca: m must be in [1, " + std::to_string(d) + "], got " + std::to_string(m));
    }
    if (K <= static_cast<Eigen::Index>(m)) {
        throw Error("embed_pca: need more than m = " + std::to_string(m) + " points, got " + std::to_string(K));
    }
    if (!points.allFinite()) throw Error("embed_pca: non-finite input");

    PcaEmbedding out;
    Eigen::MatrixXd z = points.rowwise() - points.colwise().mean();
    for (Eigen::Index j = 0; j < d; ++j) {
        const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(K - 1));
        if (sd <= 1e-12 * std::max(1.0, points.col(j).cwiseAbs().maxCoeff())) {
            z.col(j).setZero();
            out.constant_columns.push_back(static_cast<std::size_t>(j));
        } else {
            z.col(j) /= sd;
        }
    }
    const Eigen::MatrixXd cov = z.transpose() * z / static_cast<double>(K - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    out.variances = eig.eigenvalues().reverse();
    out.directions.resize(d, static_cast<Eigen::Index>(m));
    for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(m); ++c) {
        Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - c);
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < d; ++i) {
            if (std::abs(v(i)) > std::abs(v(arg)) + 1e-12) arg = i;
        }
        if (v(arg) < 0.0) v = -v;
        out.directions.col(c) = v;
    }
    out.points = z * out.directions;
    return out;
}

Eigen::MatrixXd residualize_time(const Eigen::MatrixXd& series) {
    const Eigen::Index K = series.rows();
    if (K < 3) throw Error("residualize_time: need at least 3 rows");
    Eigen::VectorXd t(K);
    for (Eigen::Index i = 0; i < K; ++i) t(i) = static_cast<double>(i);
    t.array() -= t.mean();
    const double stt = t.squaredNorm();
    Eigen::MatrixXd out = series.rowwise() - series.colwise().mean();
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double slope = t.dot(out.col(j)) / stt;
        out.col(j) -= slope * t;
    }
    return out;
}

std::vector<double> residualize_time(std::span<const double> series) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(series.size()), 1);
    for (std::size_t i = 0; i < series.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = series[i];
    const Eigen::MatrixXd r = residualize_time(m);
    return {r.data(), r.data() + r.size()};
}

AlignmentScores reward_alignment(const Eigen::MatrixXd& embedding, std::span<const double> reward, bool residualize) {
    const Eigen::Index K = embedding.rows();
    const Eigen::Index m = embedding.cols();
    if (static_cast<Eigen::Index>(reward.size()) != K) throw Error("reward_alignment: reward length differs from embedding rows");
    if (m < 1) throw Error("reward_alignment: empty embedding");
    if (K <= m + 1) {
        throw Error("reward_alignment: need at least m + 2 = " + std::to_string(m + 2) + " checkpoints, got " +
                    std::to_string(K));
    }
    if (!embedding.allFinite()) throw Error("reward_alignment: non-finite embedding");

    Eigen::VectorXd r(K);
    for (Eigen::Index i = 0; i < K; ++i) r(i) = reward[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd centered = embedding.rowwise() - embedding.colwise().mean();
    const Eigen::VectorXd r_centered = r.array() - r.mean();
    Eigen::MatrixXd x = centered;
    Eigen::VectorXd y = r_centered;
    if (residualize) {
        x = residualize_time(embedding);
        y = residualize_time(Eigen::MatrixXd(r)).col(0);
    }

    AlignmentScores out;
    out.m = static_cast<std::size_t>(m);
    out.gradient = Eigen::VectorXd::Zero(m);
    // Residuals at rounding level carry no direction; treat them as exact zeros.
    const bool x_vanishes = x.norm() <= 1e-9 * centered.norm() || x.norm() < kZeroNorm;
    const bool y_vanishes = y.norm() <= 1e-9 * r_centered.norm() || y.norm() < kZeroNorm;
    if (!x_vanishes && !y_vanishes) out.gradient = x.completeOrthogonalDecomposition().solve(y);

    const Eigen::VectorXd path = path_direction(embedding);
    if (out.gradient.norm() < kZeroNorm || path.norm() < kZeroNorm) {
        out.degenerate = true;
        return out;
    }
    out.global_alignment = cosine(out.gradient, path);
    double sum = 0.0;
    std::size_t used = 0;
    for (Eigen::Index t = 0; t + 1 < K; ++t) {
        const Eigen::VectorXd step = (embedding.row(t + 1) - embedding.row(t)).transpose();
        if (step.norm() < kZeroNorm) continue;
        sum += cosine(out.gradient, step);
        ++used;
    }
    out.local_alignment = used > 0 ? sum / static_cast<double>(used) : 0.0;
    return out;
}

std::vector<double> random_projection_null(const Eigen::MatrixXd& embedding, std::span<const double> reward,
                                           std::size_t n_draws, std::uint64_t seed) {
    if (n_draws < 100) throw Error("random_projection_null: need at least 100 draws");
    if (static_cast<Eigen::Index>(reward.size()) != embedding.rows()) {
        throw Error("random_projection_null: reward length differs from embedding rows");
    }
    if (embedding.rows() < 2 || embedding.cols() < 1) throw Error("random_projection_null: embedding too small");
    const Eigen::Index m = embedding.cols();
    const Eigen::VectorXd path = path_direction(embedding);
    std::vector<double> scores(n_draws, 0.0);
    if (path.norm() < kZeroNorm) return scores;
    for (std::size_t i = 0; i < n_draws; ++i) {
        Rng rng(derive_seed({seed, i}));
        Eigen::VectorXd w(m);
        do {
            for (Eigen::Index j = 0; j < m; ++j) w(j) = rng.normal();
        } while (w.norm() < kZeroNorm);
        scores[i] = cosine(w, path);
    }
    return scores;
}

CohortAlignment align_cohort(const std::vector<std::string>& run_ids,
                             const std::vector<Eigen::MatrixXd>& descriptor_rows,
                             const std::vector<std::vector<double>>& rewards, const AlignOptions& options,
                             unsigned threads) {
    const std::size_t n = descriptor_rows.size();
    if (n == 0) throw Error("align: no runs");
    if (run_ids.size() != n || rewards.size() != n) throw Error("align: inconsistent cohort inputs");
    CohortAlignment out;
    out.runs.resize(n);
    parallel_for(n, threads, [&](std::size_t r) {
        try {
            const PcaEmbedding e = embed_pca(descriptor_rows[r], options.m);
            out.runs[r].run_id = run_ids[r];
            out.runs[r].scores = reward_alignment(e.points, rewards[r], options.residualize);
            out.runs[r].null_scores =
                random_projection_null(e.points, rewards[r], options.null_draws, derive_seed({options.seed, r}));
        } catch (const Error& err) {
            throw Error("run " + run_ids[r] + ": " + err.what());
        }
    });
    std::vector<double> global, local, observed, null_pool;
    for (const auto& run : out.runs) {
        global.push_back(run.scores.global_alignment);
        local.push_back(run.scores.local_alignment);
        observed.push_back(std::abs(run.scores.global_alignment));
        for (double s : run.null_scores) null_pool.push_back(std::abs(s));
    }
    out.median_global = median(global);
    out.median_local = median(local);
    out.versus_null = mannwhitney(observed, null_pool, Alternative::greater);
    return out;
}

}  // namespace phirl
