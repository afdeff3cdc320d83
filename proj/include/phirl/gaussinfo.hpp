#pragma once

#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "phirl/trajdata.hpp"

namespace phirl {

// All information quantities are in nats.

// Sample Pearson correlation; throws if either series is constant.
double pearson(std::span<const double> x, std::span<const double> y,
               std::string_view x_name = "x", std::string_view y_name = "y");

// -1/2 ln(1 - rho^2), with rho^2 clipped to 1 - 1e-12.
double gaussian_mi_bivariate(double rho);

// Differential entropy of a Gaussian with the given variance.
double gaussian_entropy(double variance);

inline constexpr double kCovarianceRidge = 1e-8;

// I(A; B) for jointly Gaussian blocks A = first p variables, B = the rest:
// 1/2 ln(det S_AA det S_BB / det S), after adding kCovarianceRidge to the diagonal.
double gaussian_mi_blocks(const Eigen::MatrixXd& cov, Eigen::Index p);

// Entry (i, j) is I(X_i(t); X_j(t + lag)).
struct MIMatrix {
    Eigen::MatrixXd values;
    int lag = 1;
};

// Pairs involving a constant (sliced) column get 0. Requires T >= lag + 2.
MIMatrix lag1_mi_matrix(const LatentTrajectory& traj, int lag = 1);

}  // namespace phirl
