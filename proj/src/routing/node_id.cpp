#include "sector/routing/node_id.hpp"

#include <openssl/sha.h>

#include "sector/bytes.hpp"
#include "sector/error.hpp"

namespace sector::routing {

NodeId NodeId::from_u64(std::uint64_t v) {
  Bytes b{};
  for (int i = 0; i < 8; ++i) b[19 - i] = static_cast<std::uint8_t>(v >> (8 * i));
  return NodeId(b);
}

std::string NodeId::hex() const {
  return to_hex(std::string_view(reinterpret_cast<const char*>(bytes_.data()), bytes_.size()));
}

NodeId NodeId::truncated(unsigned bits) const {
  if (bits >= kIdBits) return *this;
  Bytes b = bytes_;
  unsigned clear = kIdBits - bits;  // high bits to clear
  for (unsigned i = 0; i < 20 && clear > 0; ++i) {
    if (clear >= 8) {
      b[i] = 0;
      clear -= 8;
    } else {
      b[i] &= static_cast<std::uint8_t>(0xff >> clear);
      clear = 0;
    }
  }
  return NodeId(b);
}

NodeId NodeId::plus_pow2(unsigned i, unsigned bits) const {
  Bytes b = bytes_;
  int byte = 19 - static_cast<int>(i / 8);
  unsigned carry = 1u << (i % 8);
  for (; byte >= 0 && carry; --byte) {
    unsigned sum = b[byte] + carry;
    b[byte] = static_cast<std::uint8_t>(sum & 0xff);
    carry = sum >> 8;
  }
  return NodeId(b).truncated(bits);
}

bool in_interval_open_closed(const NodeId& x, const NodeId& a, const NodeId& b) {
  if (a == b) return true;
  if (a < b) return a < x && x <= b;
  return x > a || x <= b;
}

bool in_interval_open(const NodeId& x, const NodeId& a, const NodeId& b) {
  if (a == b) return x != a;
  if (a < b) return a < x && x < b;
  return x > a || x < b;
}

NodeId hash_name(std::string_view name) {
  if (name.empty()) fail(ErrorCode::invalid_argument, "cannot hash an empty name");
  NodeId::Bytes digest{};
  static_assert(SHA_DIGEST_LENGTH == 20);
  SHA1(reinterpret_cast<const unsigned char*>(name.data()), name.size(), digest.data());
  return NodeId(digest);
}

}  // namespace sector::routing
