#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "phirl/regressors.hpp"
#include "phirl/series.hpp"
#include "phirl/stats.hpp"

namespace phirl {

struct ScreenCell {
    std::string run_id;
    std::string metric;
    double rho = 0.0;
    double p_value = 1.0;
    bool significant = false;
};

struct ScreenReport {
    double alpha = 0.05;
    std::vector<ScreenCell> cells;
    // Per metric (kMetricNames order): share of screened runs with p < alpha.
    std::array<double, 5> fraction_significant{};
    std::array<std::size_t, 5> runs_screened{};
    std::vector<std::string> warnings;
};

inline constexpr std::size_t kMinScreenCheckpoints = 5;

// Spearman of each baseline metric series against the Phi^r series, per run.
ScreenReport screen_series(const std::vector<RunSeries>& runs, double alpha = 0.05);

// Fold index of each of n items for one repeat: a seeded shuffle dealt
// round-robin, so fold sizes differ by at most one.
std::vector<std::size_t> cv_folds(std::size_t n, std::size_t folds, std::uint64_t seed, std::size_t repeat);

inline constexpr std::array<std::string_view, 8> kFeatureSetNames = {
    "emergence_descriptors", "entropy", "mutual_information", "autocorrelation",
    "effective_dimension", "magnitude", "all_baselines", "all_plus_emergence"};

// Number of leading checkpoints that make up the early window (at least 3).
std::size_t early_checkpoints(std::size_t n_checkpoints, double early_fraction);

// Rows are runs; columns are the descriptors of the early part of each series
// that belongs to the feature set.
Eigen::MatrixXd feature_matrix(const std::vector<RunSeries>& runs, std::string_view feature_set,
                               double early_fraction, std::size_t flatness_interval);

struct PredictOptions {
    double early_fraction = 0.2;
    std::size_t folds = 5;
    std::size_t repeats = 10;
    ModelKind model = ModelKind::forest;
    std::uint64_t seed = 0;
    std::size_t flatness_interval = 100;
    ForestConfig forest;
    std::vector<std::string> feature_sets;  // empty = all of kFeatureSetNames
    // Null control: each repeat fits a fresh seeded permutation of the targets.
    bool permute_targets = false;
};

struct FeatureSetScores {
    std::string name;
    std::vector<double> rho;  // pooled held-out Spearman per repeat
    double median_rho = 0.0;
};

struct PairwiseTest {
    std::string a;
    std::string b;
    TestResult test;
};

struct PredictionReport {
    std::string model;
    std::uint64_t fold_seed = 0;
    std::size_t n_runs = 0;
    std::size_t early_checkpoints = 0;
    std::vector<double> targets;
    std::vector<FeatureSetScores> feature_sets;
    std::vector<PairwiseTest> comparisons;
    std::vector<std::string> warnings;
};

PredictionReport fit_predict_final_reward(const std::vector<RunSeries>& runs, const PredictOptions& options,
                                          unsigned threads = 1);

}  // namespace phirl
