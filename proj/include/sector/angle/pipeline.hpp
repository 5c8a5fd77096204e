#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sector/angle/angle.hpp"
#include "sector/sphere/operator.hpp"
#include "sector/transport/network.hpp"

namespace sector::client {
class ClientSession;
}

namespace sector::angle {

struct AngleOptions {
  double window_length = 600;
  double t0 = 0;
  std::size_t k = 5;
  std::uint64_t seed = 1;  // window j is clustered with seed + j
  std::size_t history_len = 10;
  double z = 3;
};

struct WindowResult {
  std::int64_t index = 0;
  std::size_t members = 0;
  std::optional<ClusterModel> model;  // empty windows have none
  double delta_in = 0;                // δ_{j-1}, from the previous window; NaN if undefined
  bool flagged = false;
  std::vector<std::size_t> emergent_centers;
};

struct AngleReport {
  std::vector<WindowResult> windows;
  std::vector<std::size_t> flagged;
  std::vector<EmergentCluster> emergent;

  /// One line per window: index, δ into the window, flag, emergent centers.
  std::string to_text() const;
};

/// Turns per-window models into the δ series, flags and emergent clusters.
/// A center of a flagged window is emergent when its distance to the
/// nearest prior-window center exceeds mean + z·stddev of the same
/// distances over the trailing history.
AngleReport assemble_report(std::vector<WindowResult> windows, const AngleOptions& options);

/// Whole pipeline in one process.
AngleReport analyze(const std::vector<FeatureVector>& vectors, const AngleOptions& options);

/// Clusters whose center lies within `radius` of some planted mean.
struct SyntheticOptions {
  std::size_t windows = 30;
  std::size_t shift_at = 21;  // first window containing the injected cluster
  std::size_t blobs = 5;
  std::size_t dim = 4;
  std::size_t points_per_blob = 200;
  double spread = 0.5;
  double separation = 10;
  double window_length = 600;
  std::size_t replaced_blob = 0;  // blob that gives way to the injected one
  std::uint64_t seed = 7;
};

struct SyntheticData {
  std::vector<FeatureVector> vectors;  // time-ordered
  std::vector<Vec> means;              // before the shift
  Vec injected;
};

/// Gaussian blobs that stay put, except that from window `shift_at` on one
/// blob is replaced by a new one far from all others.
SyntheticData synthesize(const SyntheticOptions& options);

/// Operators for the distributed pipeline: one shuffles feature lines into
/// window buckets, the other clusters a whole window file.
inline constexpr const char* kWindowOp = "angle.window";
inline constexpr const char* kClusterOp = "angle.cluster";
void register_operators(sphere::OperatorRegistry& registry);

std::string encode_model(std::int64_t window, const ClusterModel& m);
std::pair<std::int64_t, ClusterModel> decode_model(std::string_view bytes);

/// The pipeline as two Sphere jobs over feature files stored in Sector:
/// a shuffle job buckets lines by window onto `nodes`, then a per-file job
/// clusters each window where it lies.
AngleReport analyze_distributed(client::ClientSession& session, const std::vector<std::string>& feature_files,
                                const AngleOptions& options, const std::vector<transport::Address>& nodes = {});

}  // namespace sector::angle
