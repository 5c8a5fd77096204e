#pragma once

#include <chrono>
#include <set>
#include <string>

#include "sector/error.hpp"
#include "sector/transport/network.hpp"

namespace sector::storage {

/// Hosts allowed to write to a node. Matching ignores ports, so the entry
/// "10.0.0.5" admits "10.0.0.5:41000". An empty list admits nobody.
class Acl {
 public:
  Acl() = default;
  explicit Acl(std::set<std::string> writers) {
    for (const auto& w : writers) writers_.insert(transport::host_of(w));
  }

  void allow(const std::string& writer) { writers_.insert(transport::host_of(writer)); }
  bool allows(const transport::Address& client) const { return writers_.count(transport::host_of(client)) > 0; }
  const std::set<std::string>& writers() const noexcept { return writers_; }

 private:
  std::set<std::string> writers_;
};

struct ReplicaPolicy {
  int target_count = 3;
  std::chrono::nanoseconds check_interval = std::chrono::hours(24);

  void validate() const {
    if (target_count < 1) fail(ErrorCode::config, "replica target must be at least 1");
    if (check_interval.count() <= 0) fail(ErrorCode::config, "replica check interval must be positive");
  }
};

}  // namespace sector::storage
