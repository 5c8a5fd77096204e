#include "sector/transport/network.hpp"

#include "sector/bytes.hpp"
#include "sector/error.hpp"

namespace sector::transport {

std::string host_of(const Address& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos) return address;
  return address.substr(0, colon);
}

Message expect_reply(Message reply) {
  if (reply.kind != MessageKind::error) return reply;
  ByteReader r(reply.payload);
  auto code = static_cast<ErrorCode>(r.u8());
  throw Error(code, r.str());
}

Message dispatch_safely(const Handler& handler, const Request& request) {
  try {
    return handler(request);
  } catch (const Error& e) {
    return make_error(request.message.request_id, static_cast<std::uint8_t>(e.code()), e.what());
  } catch (const std::exception& e) {
    return make_error(request.message.request_id, static_cast<std::uint8_t>(ErrorCode::internal), e.what());
  }
}

}  // namespace sector::transport
