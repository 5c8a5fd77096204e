#include "sector/storage/transfer.hpp"

#include <algorithm>
#include <random>

#include "sector/bytes.hpp"
#include "sector/error.hpp"

namespace sector::storage {

using transport::MessageKind;

void push_file(transport::ChannelCache& channels, const transport::Address& peer, const PutRequest& put,
               std::size_t chunk_bytes) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const std::uint64_t token = rng();
  const std::size_t n_entries = put.index ? put.index->size() : 0;
  std::uint64_t sent_bytes = 0;
  std::size_t sent_entries = 0;
  while (sent_bytes < put.size || sent_entries < n_entries) {
    auto len = std::min<std::uint64_t>(chunk_bytes, put.size - sent_bytes);
    auto entries = std::min<std::size_t>(kIndexEntriesPerChunk, n_entries - sent_entries);
    std::string data = len ? put.source(sent_bytes, len) : std::string();
    if (data.size() != len) fail(ErrorCode::internal, "byte source returned a short chunk");
    std::string idx;
    if (entries) {
      auto first = put.index->entries().begin() + static_cast<std::ptrdiff_t>(sent_entries);
      idx = RecordIndex(std::vector<IndexEntry>(first, first + static_cast<std::ptrdiff_t>(entries))).encode();
    }
    ByteWriter w;
    w.u64(token).str(data).str(idx);
    channels.call(peer, MessageKind::put_chunk, std::move(w).take());
    sent_bytes += len;
    sent_entries += entries;
  }
  ByteWriter w;
  w.u64(token).str(put.name).u8(static_cast<std::uint8_t>(put.mode)).boolean(put.index.has_value()).str(put.origin).str(put.dedupe_key);
  channels.call(peer, MessageKind::put_commit, std::move(w).take());
}

std::string encode_file_info(const FileInfo& i) {
  ByteWriter w;
  w.str(i.name).boolean(i.indexed).u64(i.records).u64(i.bytes).str(i.origin).str(i.holder);
  return std::move(w).take();
}

FileInfo decode_file_info(std::string_view payload) {
  ByteReader r(payload);
  FileInfo i;
  i.name = r.str();
  i.indexed = r.boolean();
  i.records = r.u64();
  i.bytes = r.u64();
  i.origin = r.str();
  i.holder = r.str();
  return i;
}

std::vector<transport::Address> decode_addresses(std::string_view payload) {
  ByteReader r(payload);
  return r.strings();
}

std::string encode_addresses(const std::vector<transport::Address>& addresses) {
  ByteWriter w;
  w.strings(addresses);
  return std::move(w).take();
}

FileInfo remote_file_info(transport::ChannelCache& channels, const transport::Address& holder, const std::string& name) {
  ByteWriter w;
  w.str(name);
  return decode_file_info(channels.call(holder, MessageKind::file_info, std::move(w).take()).payload);
}

RecordIndex remote_read_index(transport::ChannelCache& channels, const transport::Address& holder,
                              const std::string& name, std::uint64_t first, std::uint64_t count) {
  RecordIndex out;
  std::uint64_t done = 0;
  do {
    auto n = std::min<std::uint64_t>(kIndexEntriesPerChunk, count - done);
    ByteWriter w;
    w.str(name).u64(first + done).u64(n);
    auto part = RecordIndex::decode(channels.call(holder, MessageKind::read_index, std::move(w).take()).payload);
    out.append_shifted(part, 0);
    done += n;
  } while (done < count);
  return out;
}

std::string remote_read_bytes(transport::ChannelCache& channels, const transport::Address& holder,
                              const std::string& name, std::uint64_t offset, std::uint64_t length,
                              std::size_t chunk_bytes) {
  std::string out;
  out.reserve(length);
  while (out.size() < length) {
    auto n = std::min<std::uint64_t>(chunk_bytes, length - out.size());
    ByteWriter w;
    w.str(name).u64(offset + out.size()).u64(n);
    auto reply = channels.call(holder, MessageKind::read_bytes, std::move(w).take());
    if (reply.payload.size() != n) fail(ErrorCode::transport, "short read_bytes reply from " + holder);
    out += reply.payload;
  }
  return out;
}

RecordBatch remote_read_records(transport::ChannelCache& channels, const transport::Address& holder,
                                const std::string& name, std::uint64_t first, std::uint64_t count,
                                std::size_t chunk_bytes) {
  RecordBatch b;
  if (count == 0) {
    // still validates the range and existence
    remote_read_index(channels, holder, name, first, 0);
    return b;
  }
  auto idx = remote_read_index(channels, holder, name, first, count);
  auto begin = idx[0].offset;
  auto end = idx[idx.size() - 1].end();
  b.data = remote_read_bytes(channels, holder, name, begin, end - begin, chunk_bytes);
  b.index = idx.slice(0, idx.size());
  return b;
}

}  // namespace sector::storage
