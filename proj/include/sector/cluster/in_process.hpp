#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "sector/client/session.hpp"
#include "sector/clock.hpp"
#include "sector/sphere/operator.hpp"
#include "sector/sphere/spe_service.hpp"
#include "sector/storage/sector_node.hpp"
#include "sector/transport/link_profile.hpp"
#include "sector/transport/memory_network.hpp"

namespace sector::cluster {

struct InProcessOptions {
  std::vector<transport::Address> addresses;  // one node per address
  std::filesystem::path root;                 // data dirs go to root/<address>
  int replica_target = 3;
  std::size_t spes_per_node = 1;
  transport::LinkProfile profile;
  std::shared_ptr<Clock> clock;  // null: steady clock
  std::uint64_t seed = 1;
  transport::Address client = "client";
  std::size_t chunk_bytes = storage::kDefaultChunkBytes;

  /// node1..nodeN under `root`.
  static InProcessOptions numbered(std::size_t n, std::filesystem::path root);
};

/// Several Sector/Sphere nodes and one client in a single process over the
/// in-memory network. Every node hosts SPEs with the same operator registry.
class InProcessCluster {
 public:
  InProcessCluster(InProcessOptions options, std::shared_ptr<const sphere::OperatorRegistry> registry);
  ~InProcessCluster();

  const std::vector<transport::Address>& addresses() const noexcept { return addresses_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  storage::SectorNode& node(std::size_t i) { return *nodes_.at(i); }
  storage::SectorNode& node(const transport::Address& address);
  client::ClientSession& client() { return *client_; }
  transport::MemoryNetwork& network() { return *network_; }
  const std::shared_ptr<transport::MemoryNetwork>& network_ptr() const { return network_; }
  Clock& clock() { return *clock_; }
  const InProcessOptions& options() const noexcept { return options_; }

  /// Simulates a node crash (or recovery).
  void set_down(const transport::Address& address, bool down);
  /// One replication check on every reachable node.
  void replicate_all();

 private:
  InProcessOptions options_;
  std::shared_ptr<Clock> clock_;
  std::shared_ptr<transport::MemoryNetwork> network_;
  std::vector<transport::Address> addresses_;
  std::vector<std::unique_ptr<storage::SectorNode>> nodes_;
  std::vector<std::unique_ptr<sphere::SpeService>> spes_;
  std::unique_ptr<client::ClientSession> client_;
};

}  // namespace sector::cluster
