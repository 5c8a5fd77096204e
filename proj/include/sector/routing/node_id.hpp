#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace sector::routing {

inline constexpr unsigned kIdBits = 160;

/// 160-bit ring identifier, stored big-endian. Arithmetic wraps modulo
/// 2^bits where `bits` is the ring's identifier width (160 in production,
/// smaller in tests that use a truncated space).
class NodeId {
 public:
  using Bytes = std::array<std::uint8_t, 20>;

  constexpr NodeId() = default;
  explicit constexpr NodeId(const Bytes& b) : bytes_(b) {}
  static NodeId from_u64(std::uint64_t v);

  const Bytes& bytes() const noexcept { return bytes_; }
  std::string hex() const;

  /// (this + 2^i) mod 2^bits
  NodeId plus_pow2(unsigned i, unsigned bits = kIdBits) const;
  /// this mod 2^bits
  NodeId truncated(unsigned bits) const;

  friend auto operator<=>(const NodeId&, const NodeId&) = default;

 private:
  Bytes bytes_{};
};

/// True when x lies in the circular half-open interval (a, b]. When a == b
/// the interval is the whole ring.
bool in_interval_open_closed(const NodeId& x, const NodeId& a, const NodeId& b);
/// True when x lies in the circular open interval (a, b).
bool in_interval_open(const NodeId& x, const NodeId& a, const NodeId& b);

/// SHA-1 digest of the UTF-8 bytes of `name`. Throws invalid-argument on an
/// empty name.
NodeId hash_name(std::string_view name);

}  // namespace sector::routing
