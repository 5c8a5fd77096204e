#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "sector/error.hpp"
#include "sector/sphere/operator.hpp"
#include "sector/sphere/spe_service.hpp"
#include "sector/sphere/stream.hpp"

namespace sector::client {
class ClientSession;
}

namespace sector::sphere {

struct JobSpec {
  std::string id;  // empty: generated
  std::vector<std::string> inputs;
  std::string op;
  std::string params;
  OutputSpec output;
  SegmentLimits limits;
  bool whole_file = false;
  std::vector<transport::Address> nodes;  // SPE hosts; empty: every ring member
};

struct SegmentReport {
  std::size_t ordinal = 0;
  DataSegment segment;
  transport::Address node;  // SPE host of the last attempt
  int attempts = 0;
  bool ok = false;
  bool local = false;
  std::string error;
  SegmentResult result;
  std::vector<std::uint64_t> acks;  // progress acknowledgments in arrival order
  double seconds = 0;
};

struct JobReport {
  std::string id;
  Stream input;
  std::vector<SegmentReport> segments;      // by ordinal
  std::vector<std::string> outputs;         // sorted, unique
  std::map<transport::Address, double> node_seconds;
  std::vector<std::string> warnings;
  double seconds = 0;

  std::vector<const SegmentReport*> failed() const;
};

/// Thrown when segments still fail after their retry; carries the report.
class JobError : public Error {
 public:
  JobError(const std::string& message, JobReport report)
      : Error(ErrorCode::job_failed, message), report_(std::move(report)) {}
  const JobReport& report() const noexcept { return report_; }

 private:
  JobReport report_;
};

/// Drives a Sphere job from one control loop: starts the job on every SPE
/// host, splits the input stream into segments, hands segments to idle
/// SPEs following the scheduling rules, collects acknowledgments, retries a
/// failed segment once on another node, and finally releases the SPEs.
class JobClient {
 public:
  explicit JobClient(client::ClientSession& session) : session_(session) {}

  using SegmentCallback = std::function<void(const SegmentReport&)>;

  /// Runs the job to completion. Throws JobError listing failed segments,
  /// not-found for unresolvable inputs, and invalid-argument for an operator
  /// unknown on any host (before any segment runs).
  JobReport run(const JobSpec& spec, SegmentCallback on_segment = {});

 private:
  client::ClientSession& session_;
};

}  // namespace sector::sphere
