#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <utility>

#include "sector/transport/network.hpp"

namespace sector::transport {

/// Symmetric round-trip times between pairs of addresses. Pairs not listed
/// (and every self link) have rtt 0.
class LinkProfile {
 public:
  void set_rtt(const Address& a, const Address& b, std::chrono::milliseconds rtt);
  std::chrono::milliseconds rtt(const Address& a, const Address& b) const;
  bool empty() const noexcept { return rtts_.empty(); }

  /// Text format, one pair per line: `<address> <address> <rtt-ms>`.
  /// Blank lines and lines starting with '#' are ignored.
  static LinkProfile parse(const std::string& text);
  static LinkProfile load(const std::filesystem::path& path);

  /// Pairs every address in `sites[i]` with every address in `sites[j]` at
  /// `rtt_ms[i][j]`.
  static LinkProfile from_sites(const std::vector<std::vector<Address>>& sites,
                                const std::vector<std::vector<int>>& rtt_ms);

 private:
  static std::pair<Address, Address> key(const Address& a, const Address& b);
  std::map<std::pair<Address, Address>, std::chrono::milliseconds> rtts_;
};

}  // namespace sector::transport
