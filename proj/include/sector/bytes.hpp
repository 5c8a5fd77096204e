#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "sector/error.hpp"

namespace sector {

/// Little-endian encoder for message payloads. Strings and blobs carry a
/// u32 length prefix.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v) {
    buf_.push_back(static_cast<char>(v));
    return *this;
  }
  ByteWriter& u32(std::uint32_t v) { return put_le(v); }
  ByteWriter& u64(std::uint64_t v) { return put_le(v); }
  ByteWriter& i64(std::int64_t v) { return put_le(static_cast<std::uint64_t>(v)); }
  ByteWriter& f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return put_le(bits);
  }
  ByteWriter& boolean(bool v) { return u8(v ? 1 : 0); }
  ByteWriter& str(std::string_view s) {
    if (s.size() > UINT32_MAX) fail(ErrorCode::encoding, "string too long to encode");
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
    return *this;
  }
  ByteWriter& raw(std::string_view s) {
    buf_.append(s);
    return *this;
  }
  ByteWriter& strings(const std::vector<std::string>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& s : v) str(s);
    return *this;
  }

  const std::string& bytes() const& { return buf_; }
  std::string take() && { return std::move(buf_); }

 private:
  template <typename T>
  ByteWriter& put_le(T v) {
    static_assert(std::is_unsigned_v<T>);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    return *this;
  }

  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(get_le<std::uint64_t>()); }
  double f64() {
    auto bits = get_le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  bool boolean() { return u8() != 0; }
  std::string str() { return std::string(view()); }
  std::string_view view() {
    auto n = u32();
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<std::string> strings() {
    auto n = u32();
    std::vector<std::string> out;
    out.reserve(std::min<std::size_t>(n, remaining()));
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(str());
    return out;
  }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool done() const noexcept { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail(ErrorCode::encoding, "truncated payload");
  }
  template <typename T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::string to_hex(std::string_view bytes);
std::string from_hex(std::string_view hex);

}  // namespace sector
