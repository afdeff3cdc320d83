#pragma once

#include <span>
#include <vector>

namespace phirl {

// Median; for even lengths the mean of the two middle values. Throws on empty.
double median(std::span<const double> values);
double mean(std::span<const double> values);
// Sample standard deviation (denominator n - 1); 0 for fewer than two values.
double sample_std(std::span<const double> values);
// Average ranks starting at 1; ties share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

}  // namespace phirl
