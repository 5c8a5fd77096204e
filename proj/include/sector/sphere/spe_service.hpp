#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "sector/sphere/operator.hpp"
#include "sector/sphere/stream.hpp"
#include "sector/storage/sector_node.hpp"

namespace sector::sphere {

/// Final acknowledgment of one segment.
struct SegmentResult {
  std::uint64_t records_in = 0;
  std::uint64_t records_out = 0;
  std::vector<std::string> outputs;  // Sector names written or appended to
  std::vector<std::string> warnings;
};

std::string encode_segment_result(const SegmentResult& r);
SegmentResult decode_segment_result(std::string_view payload);

/// Output file name for a segment (origin and local modes) or a bucket
/// (shuffle mode).
std::string segment_output_name(const std::string& job_id, std::uint64_t segment);
std::string bucket_output_name(const std::string& job_id, std::uint64_t bucket);
/// Bucket number of a shuffle output name, including redirected ones.
std::uint64_t bucket_of_output(const std::string& name);

/// Sphere processing elements hosted on one Sector node. Each SPE runs one
/// segment at a time: read the records, apply the operator into a buffer
/// while acknowledging progress, then write the buffer per the job's output
/// mode and send the final acknowledgment.
class SpeService {
 public:
  SpeService(storage::SectorNode& node, std::shared_ptr<const OperatorRegistry> registry, std::size_t slots = 1);

  /// Registers the SPE request handlers on the node (before node.start()).
  void install();
  std::size_t slots() const noexcept { return slots_; }

 private:
  struct Job {
    Operator op;
    std::string params;
    OutputSpec output;
  };

  transport::Message start_job(const transport::Request& req);
  transport::Message run_segment(const transport::Request& req);
  transport::Message stop_job(const transport::Request& req);
  SegmentResult process(const std::string& job_id, const Job& job, std::uint64_t ordinal, const DataSegment& seg,
                        const std::function<void(std::uint64_t)>& ack);

  storage::SectorNode& node_;
  std::shared_ptr<const OperatorRegistry> registry_;
  std::size_t slots_;
  std::mutex mu_;
  std::map<std::string, Job> jobs_;
  std::size_t active_ = 0;
};

}  // namespace sector::sphere
