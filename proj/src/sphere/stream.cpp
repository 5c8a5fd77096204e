#include "sector/sphere/stream.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "sector/bytes.hpp"
#include "sector/client/session.hpp"
#include "sector/error.hpp"

namespace sector::sphere {

std::uint64_t Stream::total_bytes() const {
  std::uint64_t s = 0;
  for (const auto& f : files) s += f.bytes;
  return s;
}

std::uint64_t Stream::total_records() const {
  std::uint64_t r = 0;
  for (const auto& f : files) r += f.records;
  return r;
}

Stream resolve_stream(client::ClientSession& session, const std::vector<std::string>& names) {
  // files resolve independently; over a wide area the round trips dominate
  std::vector<std::future<StreamFile>> pending;
  for (const auto& name : names)
    pending.push_back(std::async(std::launch::async, [&session, name] {
      auto locs = session.locate(name);
      auto info = session.info(name);
      return StreamFile{name, info.records, info.bytes, info.indexed, std::move(locs)};
    }));
  Stream s;
  for (auto& f : pending) s.files.push_back(f.get());
  return s;
}

std::string encode_segment(const DataSegment& s) {
  ByteWriter w;
  w.str(s.file).u64(s.offset).u64(s.rows).str(s.params);
  return std::move(w).take();
}

DataSegment decode_segment(std::string_view payload) {
  ByteReader r(payload);
  DataSegment s;
  s.file = r.str();
  s.offset = r.u64();
  s.rows = r.u64();
  s.params = r.str();
  return s;
}

void SegmentLimits::validate() const {
  if (s_min == 0 || s_min > s_max) fail(ErrorCode::invalid_argument, "segment limits need 0 < s_min <= s_max");
}

double segment_target_bytes(std::uint64_t total_bytes, std::size_t n_spe, const SegmentLimits& limits) {
  if (n_spe == 0) fail(ErrorCode::invalid_argument, "at least one SPE is required");
  limits.validate();
  double per = static_cast<double>(total_bytes) / static_cast<double>(n_spe);
  return std::clamp(per, static_cast<double>(limits.s_min), static_cast<double>(limits.s_max));
}

std::vector<DataSegment> segment_stream(const Stream& stream, std::size_t n_spe, const SegmentLimits& limits,
                                        const std::string& params, bool whole_file) {
  if (stream.files.empty() || stream.total_records() == 0) fail(ErrorCode::invalid_argument, "empty stream");
  const double target = segment_target_bytes(stream.total_bytes(), n_spe, limits);
  std::vector<DataSegment> out;
  for (const auto& f : stream.files) {
    if (f.records == 0) continue;
    std::uint64_t rows = f.records;
    if (f.indexed && !whole_file && f.bytes > 0) {
      double mean = static_cast<double>(f.bytes) / static_cast<double>(f.records);
      rows = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(target / mean)));
    }
    for (std::uint64_t off = 0; off < f.records; off += rows)
      out.push_back({f.name, off, std::min(rows, f.records - off), params});
  }
  return out;
}

}  // namespace sector::sphere
