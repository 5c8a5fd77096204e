#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sector/clock.hpp"
#include "sector/transport/link_profile.hpp"

namespace sector::cluster {

struct NodeEntry {
  std::string name;  // section name
  std::string address;
  std::filesystem::path data_dir;
  std::vector<std::string> writers;  // ACL
};

enum class ClockMode { real, accelerated };

/// Cluster description shared by every daemon and client. INI text:
///
///   [cluster]
///   replica_target = 3
///   link_profile = wan.rtt      ; optional, relative to the config file
///   clock = accelerated         ; real (default) or accelerated
///   acceleration = 3600
///   spes_per_node = 1
///
///   [node1]
///   address = 127.0.0.1:7001
///   data_dir = /var/sector/node1
///   writers = 127.0.0.1
///
/// Every section other than [cluster] declares a node.
struct ClusterConfig {
  std::vector<NodeEntry> nodes;
  int replica_target = 3;
  std::filesystem::path link_profile;
  ClockMode clock = ClockMode::real;
  double acceleration = 3600;
  std::size_t spes_per_node = 1;
  std::uint64_t seed = 1;

  /// Throws config errors: no nodes, duplicate address or name, replica
  /// target out of range, missing fields.
  void validate() const;
  const NodeEntry& node(const std::string& name_or_address) const;
  std::vector<std::string> addresses() const;
  transport::LinkProfile profile() const;
  std::shared_ptr<Clock> make_clock() const;

  static ClusterConfig parse(const std::string& text, const std::filesystem::path& base_dir = {});
  static ClusterConfig load(const std::filesystem::path& path);
};

}  // namespace sector::cluster
