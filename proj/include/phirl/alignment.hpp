#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phirl/stats.hpp"

namespace phirl {

struct PcaEmbedding {
    Eigen::MatrixXd points;      // K x m scores
    Eigen::MatrixXd directions;  // d x m unit loadings, descending variance
    Eigen::VectorXd variances;   // all d eigenvalues of the standardized covariance, descending
    std::vector<std::size_t> constant_columns;
};

// Z-scores the columns of a K x d matrix (constant columns become zero) and
// projects onto the top-m principal directions. Each direction is signed so its
// largest-magnitude loading is positive. Needs K >= m + 1 and 1 <= m <= d.
PcaEmbedding embed_pca(const Eigen::MatrixXd& points, std::size_t m);

// OLS residual of every column against the index 0..K-1 (K >= 3).
Eigen::MatrixXd residualize_time(const Eigen::MatrixXd& series);
std::vector<double> residualize_time(std::span<const double> series);

struct AlignmentScores {
    double global_alignment = 0.0;
    double local_alignment = 0.0;
    bool degenerate = false;
    std::size_t m = 0;
    Eigen::VectorXd gradient;  // w
};

// Reward gradient w is fit on (optionally time-residualized) centered data;
// the path directions always come from the embedding as given.
AlignmentScores reward_alignment(const Eigen::MatrixXd& embedding, std::span<const double> reward,
                                 bool residualize = true);

// Global scores obtained when w is replaced by uniform random unit vectors.
// Draw i depends only on (seed, i).
std::vector<double> random_projection_null(const Eigen::MatrixXd& embedding, std::span<const double> reward,
                                           std::size_t n_draws, std::uint64_t seed);

struct AlignOptions {
    std::size_t m = 2;
    bool residualize = true;
    std::size_t null_draws = 1000;
    std::uint64_t seed = 0;
};

struct RunAlignment {
    std::string run_id;
    AlignmentScores scores;
    std::vector<double> null_scores;
};

struct CohortAlignment {
    std::vector<RunAlignment> runs;
    double median_global = 0.0;
    double median_local = 0.0;
    // |observed global| against the pooled |null| scores, one-sided greater.
    TestResult versus_null;
};

// descriptor_rows[r] is the K x 8 descriptor matrix of run r (one row per
// checkpoint), rewards[r] its checkpoint rewards. Run r's null uses seed
// (options.seed, r).
CohortAlignment align_cohort(const std::vector<std::string>& run_ids,
                             const std::vector<Eigen::MatrixXd>& descriptor_rows,
                             const std::vector<std::vector<double>>& rewards, const AlignOptions& options,
                             unsigned threads = 1);

}  // namespace phirl
