#include "sector/storage/local_store.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>

#include "sector/error.hpp"

namespace fs = std::filesystem;

namespace sector::storage {

namespace {

std::uint64_t file_size_or_zero(const fs::path& p) {
  std::error_code ec;
  auto n = fs::file_size(p, ec);
  return ec ? 0 : n;
}

std::string read_range(const fs::path& p, std::uint64_t offset, std::uint64_t length) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot open " + p.string());
  std::string out(length, '\0');
  in.seekg(static_cast<std::streamoff>(offset));
  in.read(out.data(), static_cast<std::streamsize>(length));
  if (static_cast<std::uint64_t>(in.gcount()) != length) fail(ErrorCode::range, "short read from " + p.string());
  return out;
}

void write_file(const fs::path& p, std::string_view data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  out.close();
  if (!out) fail(ErrorCode::internal, "cannot write " + p.string());
}

void append_file(const fs::path& dst, const fs::path& src) {
  std::ofstream out(dst, std::ios::binary | std::ios::app);
  std::ifstream in(src, std::ios::binary);
  out << in.rdbuf();
  out.close();
  if (!out) fail(ErrorCode::internal, "cannot append to " + dst.string());
}

std::string unique_suffix() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = std::random_device{}();
  return std::to_string(salt) + "-" + std::to_string(counter.fetch_add(1));
}

}  // namespace

LocalStore::LocalStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_);
  fs::create_directories(staging_dir());
}

void LocalStore::check_name(const std::string& name) {
  if (name.empty()) fail(ErrorCode::invalid_argument, "empty file name");
  fs::path p(name);
  if (p.is_absolute() || name.front() == '.' || name.back() == '/')
    fail(ErrorCode::invalid_argument, "invalid file name '" + name + "'");
  for (const auto& part : p)
    if (part == ".." || part == ".") fail(ErrorCode::invalid_argument, "invalid file name '" + name + "'");
  if (name.size() >= kIndexSuffix.size() && name.compare(name.size() - kIndexSuffix.size(), kIndexSuffix.size(), kIndexSuffix) == 0)
    fail(ErrorCode::invalid_argument, "file names may not end in .idx");
}

std::shared_ptr<std::mutex> LocalStore::lock_for(const std::string& name) {
  std::lock_guard lk(locks_mu_);
  auto& m = locks_[name];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

bool LocalStore::contains(const std::string& name) const {
  std::error_code ec;
  return fs::is_regular_file(data_path(name), ec);
}

LocalFileInfo LocalStore::info(const std::string& name) const {
  if (!contains(name)) fail(ErrorCode::not_found, "file " + name + " not stored here");
  LocalFileInfo i;
  i.name = name;
  i.bytes = file_size_or_zero(data_path(name));
  std::error_code ec;
  i.indexed = fs::is_regular_file(index_path(name), ec);
  i.records = i.indexed ? file_size_or_zero(index_path(name)) / kIndexEntryBytes : 1;
  return i;
}

std::vector<std::string> LocalStore::list() const {
  std::vector<std::string> out;
  for (auto it = fs::recursive_directory_iterator(dir_); it != fs::recursive_directory_iterator(); ++it) {
    auto rel = fs::relative(it->path(), dir_).generic_string();
    if (rel.front() == '.') {
      if (it->is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (!it->is_regular_file()) continue;
    if (rel.size() > kIndexSuffix.size() && rel.ends_with(kIndexSuffix)) continue;
    out.push_back(rel);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void LocalStore::write(const std::string& name, std::string_view data, const std::optional<RecordIndex>& index,
                       WriteMode mode) {
  check_name(name);
  if (index) index->validate(data.size());
  auto tmp = staging_dir() / ("w-" + unique_suffix());
  write_file(tmp, data);
  std::optional<fs::path> tmp_idx;
  if (index) {
    tmp_idx = staging_dir() / ("w-" + unique_suffix() + ".idx");
    index->save(*tmp_idx);
  }
  try {
    commit_staged(name, tmp, tmp_idx, mode);
  } catch (...) {
    std::error_code ec;
    fs::remove(tmp, ec);
    if (tmp_idx) fs::remove(*tmp_idx, ec);
    throw;
  }
}

void LocalStore::commit_staged(const std::string& name, const fs::path& staged_data,
                               const std::optional<fs::path>& staged_index, WriteMode mode) {
  check_name(name);
  auto lock = lock_for(name);
  std::lock_guard lk(*lock);
  auto data_len = file_size_or_zero(staged_data);
  std::optional<RecordIndex> index;
  if (staged_index) {
    index = RecordIndex::load(*staged_index);
    index->validate(data_len);
  }
  auto dst = data_path(name);
  fs::create_directories(dst.parent_path());
  std::error_code ec;

  if (mode == WriteMode::append && contains(name)) {
    if (!index) fail(ErrorCode::integrity, "append requires an index");
    auto existing = info(name);
    if (!existing.indexed) fail(ErrorCode::integrity, "cannot append records to file-level-only " + name);
    auto merged = RecordIndex::load(index_path(name));
    merged.append_shifted(*index, existing.bytes);
    auto merged_tmp = staging_dir() / ("m-" + unique_suffix());
    merged.save(merged_tmp);
    append_file(dst, staged_data);
    fs::rename(merged_tmp, index_path(name));
    fs::remove(staged_data, ec);
    fs::remove(*staged_index, ec);
    return;
  }
  if (mode == WriteMode::create && contains(name)) fail(ErrorCode::already_exists, "file " + name + " already exists");
  // Index goes in before data so a visible data file always has its index.
  if (index) {
    fs::rename(*staged_index, index_path(name));
  } else {
    fs::remove(index_path(name), ec);
  }
  fs::rename(staged_data, dst);
}

std::string LocalStore::read_bytes(const std::string& name, std::uint64_t offset, std::uint64_t length) const {
  auto i = info(name);
  if (offset > i.bytes || length > i.bytes - offset) fail(ErrorCode::range, "byte range past end of " + name);
  return read_range(data_path(name), offset, length);
}

RecordIndex LocalStore::read_index(const std::string& name, std::uint64_t first, std::uint64_t count) const {
  auto i = info(name);
  if (first > i.records || count > i.records - first)
    fail(ErrorCode::range, "records [" + std::to_string(first) + ", " + std::to_string(first + count) +
                               ") past " + std::to_string(i.records) + " in " + name);
  if (!i.indexed) return count == 0 ? RecordIndex() : RecordIndex({{0, i.bytes}});
  if (count == 0) return {};
  return RecordIndex::decode(read_range(index_path(name), first * kIndexEntryBytes, count * kIndexEntryBytes));
}

RecordBatch LocalStore::read_records(const std::string& name, std::uint64_t first, std::uint64_t count) const {
  auto idx = read_index(name, first, count);
  RecordBatch b;
  if (idx.empty()) return b;
  auto begin = idx[0].offset;
  auto end = idx[idx.size() - 1].end();
  b.data = read_bytes(name, begin, end - begin);
  b.index = idx.slice(0, idx.size());
  return b;
}

}  // namespace sector::storage
