#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sector/angle/angle.hpp"
#include "sector/error.hpp"
#include "sector/stats.hpp"

namespace sector::angle {

double squared_distance(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) fail(ErrorCode::invalid_argument, "dimension mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace {

std::size_t nearest(const Vec& x, const std::vector<Vec>& centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = squared_distance(x, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

ClusterModel cluster_window(std::vector<Vec> points, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  if (k == 0) fail(ErrorCode::invalid_argument, "k must be at least 1");
  if (points.empty()) fail(ErrorCode::invalid_argument, "cannot cluster an empty window");
  const auto dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) fail(ErrorCode::invalid_argument, "dimension mismatch");
  ClusterModel m;
  m.members = points.size();
  if (points.size() < k) {
    m.warnings.push_back("window has " + std::to_string(points.size()) + " points; k reduced from " +
                         std::to_string(k));
    k = points.size();
  }
  std::sort(points.begin(), points.end());
  const auto n = points.size();

  std::mt19937_64 rng(seed);
  std::vector<Vec> centers{points[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]};
  std::vector<double> dmin(n);
  for (std::size_t i = 0; i < n; ++i) dmin[i] = squared_distance(points[i], centers[0]);
  while (centers.size() < k) {
    auto far = static_cast<std::size_t>(std::max_element(dmin.begin(), dmin.end()) - dmin.begin());
    centers.push_back(points[far]);
    for (std::size_t i = 0; i < n; ++i) dmin[i] = std::min(dmin[i], squared_distance(points[i], centers.back()));
  }

  std::vector<std::size_t> assign(n);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    double obj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      assign[i] = nearest(points[i], centers);
      obj += squared_distance(points[i], centers[assign[i]]);
    }
    m.objective.push_back(obj);
    std::vector<Vec> sums(k, Vec(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) sums[assign[i]][d] += points[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // keep an emptied center where it was
      for (std::size_t d = 0; d < dim; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
    if (it > 0) {
      const double prev = m.objective[it - 1];
      if (prev - obj <= options.tolerance * prev) break;
    }
  }

  m.centers = centers;
  m.variances.assign(k, 0.0);
  m.sizes.assign(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    assign[i] = nearest(points[i], centers);
    ++m.sizes[assign[i]];
    m.variances[assign[i]] += squared_distance(points[i], centers[assign[i]]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (m.sizes[c]) m.variances[c] /= static_cast<double>(m.sizes[c]);
    m.variances[c] = std::max(m.variances[c], kMinVariance);
    m.weights.push_back(static_cast<double>(m.sizes[c]) / static_cast<double>(n));
    m.lambdas.push_back(1.0 / static_cast<double>(k));
  }
  return m;
}

double delta(const ClusterModel& from, const ClusterModel& to) {
  if (from.centers.empty() || to.centers.empty()) fail(ErrorCode::invalid_argument, "delta of an empty model");
  double s = 0;
  for (const auto& a : from.centers) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : to.centers) best = std::min(best, squared_distance(a, b));
    s += best;
  }
  return s;
}

std::vector<double> nearest_prior_distances(const ClusterModel& prior, const ClusterModel& current) {
  std::vector<double> out;
  for (const auto& b : current.centers) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : prior.centers) best = std::min(best, squared_distance(a, b));
    out.push_back(best);
  }
  return out;
}

std::vector<std::size_t> detect_emergent(const std::vector<double>& deltas, std::size_t history_len, double z) {
  std::vector<std::size_t> flagged;
  if (history_len == 0) fail(ErrorCode::invalid_argument, "history length must be positive");
  for (std::size_t j = history_len; j < deltas.size(); ++j) {
    if (std::isnan(deltas[j])) continue;
    std::vector<double> hist(deltas.begin() + static_cast<std::ptrdiff_t>(j - history_len),
                             deltas.begin() + static_cast<std::ptrdiff_t>(j));
    if (std::any_of(hist.begin(), hist.end(), [](double d) { return std::isnan(d); })) continue;
    if (deltas[j] > stats::mean(hist) + z * stats::stddev(hist)) flagged.push_back(j + 1);
  }
  return flagged;
}

double score_one(const Vec& x, const EmergentCluster& c) {
  return c.theta * std::exp(-c.lambda * c.lambda * squared_distance(x, c.a) / (2 * c.variance));
}

double score(const Vec& x, const std::vector<EmergentCluster>& clusters) {
  if (clusters.empty()) fail(ErrorCode::invalid_argument, "no emergent clusters to score against");
  double best = 0;
  for (const auto& c : clusters) best = std::max(best, score_one(x, c));
  return best;
}

}  // namespace sector::angle
