#pragma once

#include <vector>

namespace sector::stats {

struct ChiSquare {
  double statistic = 0;
  int degrees_of_freedom = 0;
  double p_value = 1;
};

/// Pearson goodness-of-fit of `observed` counts against `expected` counts.
/// Categories with zero expectation must have zero observations and are
/// dropped from the degrees of freedom.
ChiSquare chi_square(const std::vector<double>& observed, const std::vector<double>& expected);

double mean(const std::vector<double>& v);
/// Population standard deviation.
double stddev(const std::vector<double>& v);
double median(std::vector<double> v);

}  // namespace sector::stats
