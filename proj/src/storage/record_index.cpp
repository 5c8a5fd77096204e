#include "sector/storage/record_index.hpp"

#include <fstream>
#include <sstream>

#include "sector/bytes.hpp"
#include "sector/error.hpp"

namespace sector::storage {

RecordIndex RecordIndex::uniform(std::uint64_t n, std::uint64_t record_size) {
  std::vector<IndexEntry> e;
  e.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) e.push_back({i * record_size, record_size});
  return RecordIndex(std::move(e));
}

RecordIndex RecordIndex::from_lines(std::string_view data) {
  RecordIndex idx;
  std::uint64_t start = 0;
  for (std::uint64_t i = 0; i < data.size(); ++i) {
    if (data[i] == '\n') {
      idx.entries_.push_back({start, i + 1 - start});
      start = i + 1;
    }
  }
  if (start < data.size()) idx.entries_.push_back({start, data.size() - start});
  return idx;
}

void RecordIndex::validate(std::uint64_t file_length) const {
  std::uint64_t prev_end = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.end() < e.offset) fail(ErrorCode::integrity, "index entry " + std::to_string(i) + " overflows");
    if (i > 0 && (e.offset < prev_end || e.offset <= entries_[i - 1].offset))
      fail(ErrorCode::integrity, "index entry " + std::to_string(i) + " overlaps or is out of order");
    prev_end = e.end();
  }
  if (!entries_.empty() && entries_.back().end() > file_length)
    fail(ErrorCode::integrity, "index extends to byte " + std::to_string(entries_.back().end()) +
                                   " past file length " + std::to_string(file_length));
}

std::string RecordIndex::encode() const {
  ByteWriter w;
  for (const auto& e : entries_) w.u64(e.offset).u64(e.size);
  return std::move(w).take();
}

RecordIndex RecordIndex::decode(std::string_view bytes) {
  if (bytes.size() % kIndexEntryBytes != 0) fail(ErrorCode::integrity, "index length is not a multiple of 16");
  ByteReader r(bytes);
  std::vector<IndexEntry> e(bytes.size() / kIndexEntryBytes);
  for (auto& x : e) {
    x.offset = r.u64();
    x.size = r.u64();
  }
  return RecordIndex(std::move(e));
}

void RecordIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  auto bytes = encode();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::internal, "cannot write index " + path.string());
}

RecordIndex RecordIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot read index " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return decode(ss.str());
}

RecordIndex RecordIndex::slice(std::size_t first, std::size_t count) const {
  if (first > entries_.size() || count > entries_.size() - first)
    fail(ErrorCode::range, "index slice out of range");
  std::vector<IndexEntry> e(entries_.begin() + static_cast<std::ptrdiff_t>(first),
                            entries_.begin() + static_cast<std::ptrdiff_t>(first + count));
  if (!e.empty()) {
    auto base = e.front().offset;
    for (auto& x : e) x.offset -= base;
  }
  return RecordIndex(std::move(e));
}

void RecordIndex::append_shifted(const RecordIndex& other, std::uint64_t base) {
  for (const auto& e : other.entries_) entries_.push_back({e.offset + base, e.size});
}

}  // namespace sector::storage
