#include "sector/cluster/daemon.hpp"

#include <spdlog/spdlog.h>

#include <thread>

#include "sector/angle/pipeline.hpp"
#include "sector/bench/tera.hpp"
#include "sector/routing/ring.hpp"
#include "sector/transport/socket_network.hpp"

namespace sector::cluster {

std::shared_ptr<sphere::OperatorRegistry> default_registry() {
  auto r = std::make_shared<sphere::OperatorRegistry>();
  sphere::register_builtin_operators(*r);
  bench::register_operators(*r);
  angle::register_operators(*r);
  return r;
}

NodeDaemon::NodeDaemon(const ClusterConfig& config, const std::string& node_name,
                       std::shared_ptr<transport::Network> network,
                       std::shared_ptr<const sphere::OperatorRegistry> registry) {
  config.validate();
  const auto& entry = config.node(node_name);
  storage::NodeOptions o;
  o.address = entry.address;
  o.data_dir = entry.data_dir;
  for (const auto& w : entry.writers) o.acl.allow(w);
  o.replica.target_count = config.replica_target;
  std::size_t i = 0;
  while (config.nodes[i].address != entry.address) ++i;
  o.seed = config.seed * 1000 + i;
  node_ = std::make_unique<storage::SectorNode>(o, std::move(network), config.make_clock());
  node_->install_ring(std::make_shared<routing::RingView>(routing::RingView::from_addresses(config.addresses())));
  spe_ = std::make_unique<sphere::SpeService>(*node_, std::move(registry), config.spes_per_node);
  spe_->install();
}

NodeDaemon::~NodeDaemon() { stop(); }

void NodeDaemon::start(std::chrono::milliseconds replication_poll) {
  node_->start();
  running_ = true;
  try {
    node_->announce();
  } catch (const Error& e) {
    spdlog::warn("{}: announce incomplete: {}", node_->address(), e.what());
  }
  node_->start_replication_timer(replication_poll);
}

void NodeDaemon::stop() {
  if (!running_) return;
  running_ = false;
  node_->stop();
}

void run_node(const ClusterConfig& config, const std::string& node_name, const std::atomic<bool>& stop) {
  auto net = std::make_shared<transport::SocketNetwork>();
  NodeDaemon d(config, node_name, net);
  d.start();
  spdlog::info("{} serving, data in {}", d.node().address(), d.node().options().data_dir.string());
  while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  spdlog::info("{} stopping", d.node().address());
  d.stop();
}

}  // namespace sector::cluster
