#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "phirl/trajdata.hpp"

namespace phirl {

// Baseline representation metrics of one trajectory.
struct MetricVector {
    double entropy = 0.0;             // mean per-unit Gaussian entropy (nats)
    double mutual_information = 0.0;  // mean pairwise lag-0 Gaussian MI (nats)
    double autocorrelation = 0.0;     // mean per-unit lag-1 autocorrelation
    double effective_dimension = 1.0; // participation ratio of covariance eigenvalues
    double magnitude = 0.0;           // mean Euclidean norm of z_t

    std::array<double, 5> as_array() const {
        return {entropy, mutual_information, autocorrelation, effective_dimension, magnitude};
    }
};

inline constexpr std::array<std::string_view, 5> kMetricNames = {
    "entropy", "mutual_information", "autocorrelation", "effective_dimension", "magnitude"};

// Constant units are excluded from every mean and reported through
// `constant_units` when given; an all-constant trajectory throws.
MetricVector baseline_metrics(const LatentTrajectory& traj, std::vector<std::size_t>* constant_units = nullptr);

// Mean over t of ||z_t||, including constant units.
double mean_magnitude(const LatentTrajectory& traj);

// (sum lambda)^2 / sum lambda^2 over the eigenvalues of a covariance matrix.
double participation_ratio(const Eigen::MatrixXd& cov);

struct DescriptorVector {
    double std = 0.0;
    double trend = 0.0;
    double monotonicity = 0.0;
    double flatness = 0.0;
    std::size_t n_peaks = 0;
    double peak_distance = 0.0;
    double peak_difference = 0.0;
    double range = 0.0;

    std::array<double, 8> as_array() const {
        return {std, trend, monotonicity, flatness, static_cast<double>(n_peaks),
                peak_distance, peak_difference, range};
    }
};

inline constexpr std::array<std::string_view, 8> kDescriptorNames = {
    "std", "trend", "monotonicity", "flatness", "n_peaks", "peak_distance", "peak_difference", "range"};

inline constexpr std::size_t kDefaultFlatnessInterval = 100;

// Shape descriptors of a 1-D series (length >= 3). Peaks are interior points
// strictly above or strictly below both neighbours.
DescriptorVector descriptors(std::span<const double> series, std::size_t interval = kDefaultFlatnessInterval);

}  // namespace phirl
