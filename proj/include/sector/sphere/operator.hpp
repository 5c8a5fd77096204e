#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sector/storage/record_index.hpp"
#include "sector/transport/network.hpp"

namespace sector::sphere {

/// Receives an operator's output records. Shuffle jobs need a bucket on
/// every record; the other output modes ignore it.
class Emitter {
 public:
  virtual ~Emitter() = default;
  virtual void emit(std::string_view record, std::optional<std::uint64_t> bucket = std::nullopt) = 0;
};

using RecordFn = std::function<void(std::string_view record, const std::string& params, Emitter& out)>;
/// Sees the whole segment at once (local sort, clustering).
using SegmentFn = std::function<void(const storage::RecordBatch& segment, const std::string& params, Emitter& out)>;

/// A user-defined function applied by SPEs. Exactly one of the two forms is
/// set.
struct Operator {
  std::string name;
  RecordFn per_record;
  SegmentFn per_segment;
};

/// Operators known to a process, keyed by name. Thread-safe.
class OperatorRegistry {
 public:
  void add(Operator op);
  bool contains(const std::string& name) const;
  /// Throws invalid_argument for unknown names.
  Operator find(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Operator> ops_;
};

/// identity: every record unchanged. count: one 8-byte LE record per input
/// record holding 1 (summing the outputs counts records). fail-at: throws on
/// the record whose first bytes equal params.
void register_builtin_operators(OperatorRegistry& registry);

enum class OutputMode : std::uint8_t { return_to_origin = 0, local_write = 1, shuffle = 2 };

struct OutputSpec {
  OutputMode mode = OutputMode::local_write;
  std::vector<transport::Address> destinations;  // shuffle only

  void validate() const;
};

std::string encode_output_spec(const OutputSpec& spec);
OutputSpec decode_output_spec(std::string_view payload);
const char* to_string(OutputMode mode);
OutputMode parse_output_mode(std::string_view s);

/// Index into the destination list for a bucket.
inline std::size_t shuffle_destination(std::uint64_t bucket, std::size_t n_destinations) {
  return static_cast<std::size_t>(bucket % n_destinations);
}

}  // namespace sector::sphere
