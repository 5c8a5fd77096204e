#include "sector/transport/message.hpp"

#include "sector/bytes.hpp"
#include "sector/error.hpp"

namespace sector::transport {

std::string encode_message(const Message& msg, std::size_t max_payload) {
  if (msg.payload.size() > max_payload || msg.payload.size() > UINT32_MAX)
    fail(ErrorCode::encoding, "payload of " + std::to_string(msg.payload.size()) + " bytes exceeds limit");
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(msg.kind))
      .u64(msg.request_id)
      .u32(static_cast<std::uint32_t>(msg.payload.size()))
      .raw(msg.payload);
  return std::move(w).take();
}

std::optional<std::uint32_t> peek_payload_length(std::string_view header) {
  if (header.size() < kHeaderSize) return std::nullopt;
  ByteReader r(header.substr(9, 4));
  return r.u32();
}

Message decode_message(std::string_view frame, std::size_t max_payload) {
  if (frame.size() < kHeaderSize) fail(ErrorCode::encoding, "frame shorter than header");
  ByteReader r(frame);
  Message m;
  m.kind = static_cast<MessageKind>(r.u8());
  m.request_id = r.u64();
  auto len = r.u32();
  if (len > max_payload) fail(ErrorCode::encoding, "declared payload exceeds limit");
  if (r.remaining() != len) fail(ErrorCode::encoding, "payload length field does not match frame");
  m.payload = std::string(r.raw(len));
  return m;
}

Message make_error(std::uint64_t request_id, std::uint8_t code, std::string_view text) {
  ByteWriter w;
  w.u8(code).str(text);
  return Message{MessageKind::error, request_id, std::move(w).take()};
}

}  // namespace sector::transport
