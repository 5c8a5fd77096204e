#include "sector/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <numeric>

#include "sector/error.hpp"

namespace sector::stats {

ChiSquare chi_square(const std::vector<double>& observed, const std::vector<double>& expected) {
  if (observed.size() != expected.size()) fail(ErrorCode::invalid_argument, "chi-square size mismatch");
  ChiSquare out;
  int categories = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0) {
      if (observed[i] != 0) return {INFINITY, 0, 0.0};
      continue;
    }
    ++categories;
    auto d = observed[i] - expected[i];
    out.statistic += d * d / expected[i];
  }
  out.degrees_of_freedom = categories - 1;
  if (out.degrees_of_freedom < 1) return out;
  boost::math::chi_squared dist(out.degrees_of_freedom);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.empty()) return 0;
  auto m = mean(v);
  double acc = 0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double median(std::vector<double> v) {
  if (v.empty()) fail(ErrorCode::invalid_argument, "median of empty set");
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace sector::stats
