#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sector/sphere/job.hpp"
#include "sector/sphere/operator.hpp"
#include "sector/storage/record_index.hpp"

namespace sector::client {
class ClientSession;
}

namespace sector::bench {

inline constexpr std::size_t kRecordSize = 100;
inline constexpr std::size_t kKeySize = 10;

/// n pseudo-random 100-byte records (10-byte key, 90-byte payload) from
/// mt19937_64 seeded with `seed`.
std::string teragen(std::uint64_t n, std::uint64_t seed);
storage::RecordIndex tera_index(std::uint64_t n);
/// Writes `path` and `path`.idx.
void teragen_file(std::uint64_t n, std::uint64_t seed, const std::filesystem::path& path);

inline std::string_view tera_key(std::string_view record) { return record.substr(0, kKeySize); }
/// Class label used by Terasplit: parity of the first payload byte.
inline int tera_label(std::string_view record) { return static_cast<unsigned char>(record[kKeySize]) & 1; }
/// Bytewise key order.
bool key_less(std::string_view a, std::string_view b);

/// Order-independent digest of a record multiset.
struct MultisetChecksum {
  std::uint64_t count = 0;
  std::uint64_t sum = 0;
  std::uint64_t sum_sq = 0;

  void add(std::string_view record);
  friend bool operator==(const MultisetChecksum&, const MultisetChecksum&) = default;
};

/// Range-partitions by the sorted boundary keys in params; bucket i holds
/// keys in [boundary[i-1], boundary[i]).
inline constexpr const char* kPartitionOp = "terasort.partition";
/// Sorts a whole segment by key (ties by full record).
inline constexpr const char* kSortOp = "terasort.sort";
void register_operators(sphere::OperatorRegistry& registry);

std::string encode_boundaries(const std::vector<std::string>& keys);
std::vector<std::string> decode_boundaries(std::string_view params);
std::size_t bucket_of(std::string_view key, const std::vector<std::string>& boundaries);

/// Boundaries splitting `sample_keys` into `buckets` near-equal ranges.
std::vector<std::string> quantile_boundaries(std::vector<std::string> sample_keys, std::size_t buckets);

struct TerasortOptions {
  std::vector<transport::Address> nodes;  // bucket destinations; empty: every member
  std::uint64_t sample_size = 10'000;
  sphere::SegmentLimits limits;
};

struct TerasortResult {
  std::vector<std::string> outputs;  // sorted runs in key-range order
  std::vector<std::string> boundaries;
  double sample_seconds = 0;
  double shuffle_seconds = 0;
  double sort_seconds = 0;
  sphere::JobReport shuffle_job;
  sphere::JobReport sort_job;
};

/// Phase 1: a shuffle job buckets records by sampled key ranges across the
/// nodes. Phase 2: a per-file job sorts each bucket where it lies. The
/// concatenation of `outputs` is sorted.
TerasortResult terasort(client::ClientSession& session, const std::vector<std::string>& inputs,
                        const TerasortOptions& options = {});

/// Visits the records of `names` in order, `batch` records at a time.
void for_each_record(client::ClientSession& session, const std::vector<std::string>& names,
                     const std::function<void(std::string_view)>& fn, std::uint64_t batch = 100'000);

struct SortCheck {
  bool sorted = true;
  std::uint64_t records = 0;
  MultisetChecksum checksum;
};
SortCheck check_sorted(client::ClientSession& session, const std::vector<std::string>& names);

// ---- Terasplit -----------------------------------------------------------

/// Shannon entropy in bits. Throws invalid-argument when all counts are 0.
double entropy(const std::vector<std::uint64_t>& counts);

/// Information gain of splitting a binary-labelled set into (l0, l1) and
/// (r0, r1), clamped to [0, H(parent)].
double split_gain(std::uint64_t l0, std::uint64_t l1, std::uint64_t r0, std::uint64_t r1);

using Key80 = unsigned __int128;
Key80 key_value(std::string_view key10);
std::string key_hex(Key80 k);

struct SplitResult {
  std::optional<Key80> threshold;  // left side: key <= threshold
  double gain = 0;
  double parent_entropy = 0;
  std::array<std::uint64_t, 2> left{};
  std::array<std::uint64_t, 2> right{};

  /// One line: threshold hex, gain, counts.
  std::string to_line() const;
};

/// Single sequential pass over key-sorted records. Candidate thresholds are
/// the floor midpoints of adjacent distinct keys; the smallest threshold
/// wins ties.
class TerasplitScanner {
 public:
  /// Throws invalid-argument if keys arrive out of order.
  void add(Key80 key, int label);
  void add_record(std::string_view record) { add(key_value(tera_key(record)), tera_label(record)); }
  SplitResult finish() const;
  std::uint64_t records() const noexcept { return n_; }

 private:
  struct Boundary {
    Key80 below;  // last key of the left side
    Key80 above;  // first key of the right side
    std::uint64_t left0, left1;
  };
  std::vector<Boundary> boundaries_;
  std::array<std::uint64_t, 2> totals_{};
  std::optional<Key80> last_;
  std::uint64_t n_ = 0;
};

SplitResult terasplit(client::ClientSession& session, const std::vector<std::string>& sorted_names);

}  // namespace sector::bench
