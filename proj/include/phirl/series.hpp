#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "phirl/metrics.hpp"
#include "phirl/phiid.hpp"
#include "phirl/trajdata.hpp"

namespace phirl {

// Everything the cohort analyses need from one run, reduced per checkpoint.
struct RunSeries {
    std::string run_id;
    std::string env_name;
    std::vector<std::int64_t> train_steps;
    std::vector<double> rewards;  // checkpoint_reward
    // episodes[k][e]: windowed emergence of episode e at checkpoint k.
    std::vector<std::vector<EmergenceTrajectory>> episodes;
    // Median over episodes of the per-episode medians.
    std::vector<double> phi_r;
    // Elementwise median over episodes of the window values (common prefix).
    std::vector<std::vector<double>> phi_profiles;
    // baseline[k][e] on the raw latents, and the per-checkpoint medians.
    std::vector<std::vector<MetricVector>> baseline;
    std::array<std::vector<double>, 5> metric_series;

    std::size_t size() const { return train_steps.size(); }
};

struct SeriesOptions {
    WindowConfig window;
    bool with_emergence = true;
    bool with_metrics = true;
};

// Episodes are processed in parallel; the result does not depend on threads.
RunSeries compute_series(const RunRecord& run, const SeriesOptions& options = {}, unsigned threads = 1);

// K x 8 matrix: descriptors of each checkpoint's Phi^r profile.
Eigen::MatrixXd profile_descriptors(const RunSeries& run, std::size_t flatness_interval = kDefaultFlatnessInterval);

// Elementwise median of equal-or-longer sequences over their common prefix.
std::vector<double> elementwise_median(const std::vector<std::vector<double>>& rows);

}  // namespace phirl
