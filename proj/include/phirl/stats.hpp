#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace phirl {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::vector<std::size_t> n;  // sample size(s)
};

enum class Alternative { two_sided, less, greater };

// Spearman rank correlation; p from the t approximation with n - 2 df.
// Requires n >= 3 and neither sequence constant.
TestResult spearman(std::span<const double> x, std::span<const double> y);

// Kendall tau-b. Returns 0 when exactly one side is fully tied; throws when
// both are.
double kendall_tau_b(std::span<const double> x, std::span<const double> y);

// Mann-Whitney U for `a` against `b`; statistic is U of sample a.
// Exact null distribution when |a| + |b| <= 20 and there are no ties,
// otherwise the tie-corrected normal approximation with continuity correction.
// `greater` tests whether a tends to exceed b.
TestResult mannwhitney(std::span<const double> a, std::span<const double> b,
                       Alternative alternative = Alternative::two_sided);

// D'Agostino-Pearson omnibus K^2 normality test (n >= 20).
TestResult dagostino_k2(std::span<const double> x);

}  // namespace phirl
