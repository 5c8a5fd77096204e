#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sector::storage {

struct IndexEntry {
  std::uint64_t offset = 0;
  std::uint64_t size = 0;

  std::uint64_t end() const noexcept { return offset + size; }
  friend bool operator==(const IndexEntry&, const IndexEntry&) = default;
};

inline constexpr std::size_t kIndexEntryBytes = 16;
inline constexpr std::string_view kIndexSuffix = ".idx";

/// Companion index of a record file: one (offset, size) pair per record.
/// On disk each entry is offset u64 LE followed by size u64 LE.
class RecordIndex {
 public:
  RecordIndex() = default;
  explicit RecordIndex(std::vector<IndexEntry> entries) : entries_(std::move(entries)) {}

  /// n records of `record_size` bytes laid end to end.
  static RecordIndex uniform(std::uint64_t n, std::uint64_t record_size);
  /// One record per line; each record includes its trailing '\n'. A final
  /// line without newline is a record too.
  static RecordIndex from_lines(std::string_view data);

  /// Entries strictly increasing and non-overlapping, and the last record
  /// ends within `file_length`. Throws integrity otherwise.
  void validate(std::uint64_t file_length) const;

  std::string encode() const;
  static RecordIndex decode(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static RecordIndex load(const std::filesystem::path& path);

  /// Entries [first, first+count) with offsets rebased to the first one.
  RecordIndex slice(std::size_t first, std::size_t count) const;
  /// Appends `other` shifted by `base` bytes.
  void append_shifted(const RecordIndex& other, std::uint64_t base);
  void push_back(IndexEntry e) { entries_.push_back(e); }

  const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const IndexEntry& operator[](std::size_t i) const { return entries_[i]; }

  friend bool operator==(const RecordIndex&, const RecordIndex&) = default;

 private:
  std::vector<IndexEntry> entries_;
};

/// A run of records and their index, offsets relative to `data`.
struct RecordBatch {
  std::string data;
  RecordIndex index;

  std::size_t records() const noexcept { return index.size(); }
  std::string_view record(std::size_t i) const {
    const auto& e = index[i];
    return std::string_view(data).substr(e.offset, e.size);
  }
};

}  // namespace sector::storage
