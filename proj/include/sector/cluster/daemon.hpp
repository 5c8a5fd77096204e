#pragma once

#include <atomic>
#include <chrono>
#include <memory>

#include "sector/cluster/config.hpp"
#include "sector/sphere/operator.hpp"
#include "sector/sphere/spe_service.hpp"
#include "sector/storage/sector_node.hpp"
#include "sector/transport/network.hpp"

namespace sector::cluster {

/// Builtin, benchmark and Angle operators.
std::shared_ptr<sphere::OperatorRegistry> default_registry();

/// One configured node with its SPEs and replication timer.
class NodeDaemon {
 public:
  NodeDaemon(const ClusterConfig& config, const std::string& node_name, std::shared_ptr<transport::Network> network,
             std::shared_ptr<const sphere::OperatorRegistry> registry = default_registry());
  ~NodeDaemon();

  /// Binds, announces local files and starts the replication timer.
  void start(std::chrono::milliseconds replication_poll = std::chrono::seconds(1));
  void stop();
  storage::SectorNode& node() { return *node_; }

 private:
  std::unique_ptr<storage::SectorNode> node_;
  std::unique_ptr<sphere::SpeService> spe_;
  bool running_ = false;
};

/// Runs a daemon over real sockets until `stop` becomes true.
void run_node(const ClusterConfig& config, const std::string& node_name, const std::atomic<bool>& stop);

}  // namespace sector::cluster
