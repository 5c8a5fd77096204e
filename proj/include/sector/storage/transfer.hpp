#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "sector/storage/local_store.hpp"
#include "sector/storage/record_index.hpp"
#include "sector/transport/channel_cache.hpp"

namespace sector::storage {

inline constexpr std::size_t kDefaultChunkBytes = std::size_t{4} << 20;
inline constexpr std::size_t kIndexEntriesPerChunk = 256 * 1024;

/// Pulls `length` bytes at `offset` from wherever the data lives.
using ByteSource = std::function<std::string(std::uint64_t offset, std::uint64_t length)>;

struct PutRequest {
  std::string name;
  std::uint64_t size = 0;
  ByteSource source;
  std::optional<RecordIndex> index;
  WriteMode mode = WriteMode::create;
  transport::Address origin;  // empty: the receiving node becomes the origin
  /// Non-empty: a second commit with the same key on the same node is a
  /// no-op, so a retried append does not duplicate records.
  std::string dedupe_key;
};

/// Streams a file and its index to `peer` in chunks, then commits it there.
/// The receiving node registers its new replica with the responsible node.
void push_file(transport::ChannelCache& channels, const transport::Address& peer, const PutRequest& put,
               std::size_t chunk_bytes = kDefaultChunkBytes);

/// File metadata as served by a holder.
struct FileInfo {
  std::string name;
  bool indexed = false;
  std::uint64_t records = 0;
  std::uint64_t bytes = 0;
  transport::Address origin;
  transport::Address holder;
};

std::string encode_file_info(const FileInfo& info);
FileInfo decode_file_info(std::string_view payload);

FileInfo remote_file_info(transport::ChannelCache& channels, const transport::Address& holder, const std::string& name);
RecordIndex remote_read_index(transport::ChannelCache& channels, const transport::Address& holder,
                              const std::string& name, std::uint64_t first, std::uint64_t count);
std::string remote_read_bytes(transport::ChannelCache& channels, const transport::Address& holder,
                              const std::string& name, std::uint64_t offset, std::uint64_t length,
                              std::size_t chunk_bytes = kDefaultChunkBytes);
/// Records [first, first+count) fetched from `holder` in chunks.
RecordBatch remote_read_records(transport::ChannelCache& channels, const transport::Address& holder,
                                const std::string& name, std::uint64_t first, std::uint64_t count,
                                std::size_t chunk_bytes = kDefaultChunkBytes);

std::vector<transport::Address> decode_addresses(std::string_view payload);
std::string encode_addresses(const std::vector<transport::Address>& addresses);

}  // namespace sector::storage
