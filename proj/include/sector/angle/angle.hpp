#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sector::angle {

using Vec = std::vector<double>;

struct FeatureVector {
  std::string entity;
  double timestamp = 0;  // seconds
  Vec values;
};

/// One vector per line: entity, timestamp, v1..vd separated by `delim`.
/// Blank lines are skipped. Throws encoding on malformed lines and
/// invalid-argument when dimensions differ.
std::vector<FeatureVector> parse_features(std::string_view text, char delim = ',');
FeatureVector parse_feature_line(std::string_view line, char delim = ',');
/// Round-trips doubles exactly.
std::string format_feature(const FeatureVector& v, char delim = ',');

struct Window {
  std::int64_t index = 0;
  double start = 0;
  double length = 0;
  std::vector<FeatureVector> members;
};

/// Ordinal of the window holding time t: floor((t - t0) / d).
std::int64_t window_index(double t, double d, double t0);

/// Windows 0..max ordinal over the vectors, empty ones included. Throws
/// invalid-argument if d <= 0 or a vector precedes t0.
std::vector<Window> window_partition(const std::vector<FeatureVector>& vectors, double d, double t0);

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;  // relative objective change
};

/// Cluster model of one window. λ_k are the mixture constants (1/k), θ_k
/// the member fractions.
struct ClusterModel {
  std::vector<Vec> centers;
  std::vector<double> variances;
  std::vector<double> weights;  // θ
  std::vector<double> lambdas;  // λ
  std::vector<std::size_t> sizes;
  std::vector<double> objective;  // sum of squared distances per iteration
  std::size_t members = 0;
  std::vector<std::string> warnings;

  std::size_t k() const noexcept { return centers.size(); }
  friend bool operator==(const ClusterModel&, const ClusterModel&) = default;
};

inline constexpr double kMinVariance = 1e-12;

/// Seeded k-means: points are put in a canonical order, the first center
/// is a seeded random point, the rest are chosen farthest-point. A window
/// with fewer than k points is clustered with k = point count.
ClusterModel cluster_window(std::vector<Vec> points, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

double squared_distance(const Vec& a, const Vec& b);

/// δ = Σ_i min_m ||a_i − b_m||² over centers a of `from` and b of `to`.
double delta(const ClusterModel& from, const ClusterModel& to);

/// Windows (j+1) whose δ_j exceeds mean + z·stddev of the trailing
/// `history_len` deltas. NaN deltas (empty windows) never flag and
/// invalidate the histories that contain them.
std::vector<std::size_t> detect_emergent(const std::vector<double>& deltas, std::size_t history_len, double z);

/// Distance from each center of `current` to its nearest center of `prior`.
std::vector<double> nearest_prior_distances(const ClusterModel& prior, const ClusterModel& current);

struct EmergentCluster {
  std::int64_t window = 0;
  std::size_t center = 0;
  Vec a;
  double variance = 1;
  double theta = 1;
  double lambda = 1;
};

/// ρ_k(x) = θ_k exp(−λ_k² ||x − a_k||² / (2σ_k²)).
double score_one(const Vec& x, const EmergentCluster& c);
/// ρ(x) = max_k ρ_k(x). Throws invalid-argument with no clusters or a
/// dimension mismatch.
double score(const Vec& x, const std::vector<EmergentCluster>& clusters);

}  // namespace sector::angle
