#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sector/storage/record_index.hpp"

namespace sector::storage {

struct LocalFileInfo {
  std::string name;
  bool indexed = false;
  std::uint64_t records = 0;  // 1 for a file without index
  std::uint64_t bytes = 0;
};

enum class WriteMode : std::uint8_t { create = 0, replace = 1, append = 2 };

/// Files of one node under a data directory: <dir>/<name> with its index at
/// <dir>/<name>.idx. Writes to one name are serialized; reads are lock-free
/// against completed writes because files are replaced by rename.
class LocalStore {
 public:
  explicit LocalStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Names must be relative, non-empty, free of "..", must not end in
  /// ".idx" and must not start with '.'.
  static void check_name(const std::string& name);

  bool contains(const std::string& name) const;
  LocalFileInfo info(const std::string& name) const;
  std::vector<std::string> list() const;

  /// Writes data and index together. Without an index the file is stored
  /// file-level only. `append` requires an index and extends an existing
  /// indexed file (or creates it).
  void write(const std::string& name, std::string_view data, const std::optional<RecordIndex>& index, WriteMode mode);

  /// Moves staged files into place under the same rules as write().
  void commit_staged(const std::string& name, const std::filesystem::path& staged_data,
                     const std::optional<std::filesystem::path>& staged_index, WriteMode mode);

  std::string read_bytes(const std::string& name, std::uint64_t offset, std::uint64_t length) const;
  /// Index entries [first, first+count), not rebased. A file without index
  /// reports a single entry covering the whole file.
  RecordIndex read_index(const std::string& name, std::uint64_t first, std::uint64_t count) const;
  /// Exactly `count` records starting at record `first`.
  RecordBatch read_records(const std::string& name, std::uint64_t first, std::uint64_t count) const;

  std::filesystem::path data_path(const std::string& name) const { return dir_ / name; }
  std::filesystem::path index_path(const std::string& name) const {
    return dir_ / (name + std::string(kIndexSuffix));
  }
  std::filesystem::path staging_dir() const { return dir_ / ".staging"; }

 private:
  std::shared_ptr<std::mutex> lock_for(const std::string& name);

  std::filesystem::path dir_;
  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

}  // namespace sector::storage
