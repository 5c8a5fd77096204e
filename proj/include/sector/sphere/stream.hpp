#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sector/transport/network.hpp"

namespace sector::client {
class ClientSession;
}

namespace sector::sphere {

struct StreamFile {
  std::string name;
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
  bool indexed = false;
  std::vector<transport::Address> locations;
};

/// An ordered set of Sector files processed as one input.
struct Stream {
  std::vector<StreamFile> files;

  std::uint64_t total_bytes() const;
  std::uint64_t total_records() const;
};

/// Looks up size, record count and replica locations of every name.
Stream resolve_stream(client::ClientSession& session, const std::vector<std::string>& names);

struct DataSegment {
  std::string file;
  std::uint64_t offset = 0;  // first record ordinal
  std::uint64_t rows = 0;
  std::string params;

  friend bool operator==(const DataSegment&, const DataSegment&) = default;
};

std::string encode_segment(const DataSegment& s);
DataSegment decode_segment(std::string_view payload);

struct SegmentLimits {
  std::uint64_t s_min = std::uint64_t{1} << 20;
  std::uint64_t s_max = std::uint64_t{64} << 20;

  void validate() const;
};

/// Bytes per segment: S/N clamped to [s_min, s_max].
double segment_target_bytes(std::uint64_t total_bytes, std::size_t n_spe, const SegmentLimits& limits);

/// Splits every file into runs of records of about the target size, using
/// the file's mean record size and rounding the row count up. Segments
/// never span files and tile each file exactly. With `whole_file`, each
/// file is a single segment. Files without an index are always whole.
std::vector<DataSegment> segment_stream(const Stream& stream, std::size_t n_spe, const SegmentLimits& limits,
                                        const std::string& params = {}, bool whole_file = false);

}  // namespace sector::sphere
