#pragma once

#include <cstddef>
#include <vector>

#include "phirl/trajdata.hpp"

namespace phirl {

// Result of a column-wise transform. Constant columns are mapped to zeros and
// listed in `constant_units`.
struct ColumnTransform {
    LatentTrajectory trajectory;
    std::vector<std::size_t> constant_units;
};

// Copula Gaussianization: each column becomes Phi^-1((rank - 0.5) / T), with
// average ranks for ties.
ColumnTransform rank_normalize(const LatentTrajectory& traj);

// Column-wise standardization to mean 0 and sample std (T - 1) of 1.
ColumnTransform zscore(const LatentTrajectory& traj);

// rank_normalize followed by zscore; the order every information measure expects.
ColumnTransform preprocess(const LatentTrajectory& traj);

struct PreprocessReport {
    std::size_t n_units = 0;
    double fraction_rejecting = 0.0;  // over non-constant units
    double alpha = 0.05;
    std::vector<std::size_t> constant_units;  // excluded from the fraction
};

// Share of units whose D'Agostino-Pearson test rejects normality at `alpha`.
// Requires T >= 20.
PreprocessReport normality_fraction(const LatentTrajectory& traj, double alpha = 0.05);

}  // namespace phirl
