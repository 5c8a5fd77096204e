#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace sector::transport {

/// Control-message tags. Replies reuse the request_id of the request they
/// answer; `progress` frames may precede the final reply.
enum class MessageKind : std::uint8_t {
  ping = 0,
  pong = 1,
  reply = 2,
  error = 3,
  progress = 4,

  // storage
  route = 10,
  lookup = 11,
  locate_record = 12,
  register_location = 13,
  holds_local = 14,
  file_info = 15,
  read_records = 16,
  read_bytes = 17,
  read_index = 18,
  sample_records = 19,
  members = 20,
  put_chunk = 21,
  put_commit = 22,
  replicate_now = 23,

  // sphere processing elements
  spe_start = 30,
  spe_segment = 31,
  spe_stop = 32,
};

struct Message {
  MessageKind kind = MessageKind::ping;
  std::uint64_t request_id = 0;
  std::string payload;

  friend bool operator==(const Message&, const Message&) = default;
};

inline constexpr std::size_t kHeaderSize = 13;
inline constexpr std::size_t kDefaultMaxPayload = std::size_t{64} << 20;

/// Frame layout (little-endian): kind u8 | request_id u64 | length u32 | payload.
std::string encode_message(const Message& msg, std::size_t max_payload = kDefaultMaxPayload);

/// Decodes exactly one frame occupying all of `frame`.
Message decode_message(std::string_view frame, std::size_t max_payload = kDefaultMaxPayload);

/// Payload length declared by a header; nullopt if fewer than kHeaderSize bytes.
std::optional<std::uint32_t> peek_payload_length(std::string_view header);

Message make_error(std::uint64_t request_id, std::uint8_t code, std::string_view text);

}  // namespace sector::transport
