#include "sector/cluster/in_process.hpp"

#include <set>

#include "sector/error.hpp"

namespace sector::cluster {

InProcessOptions InProcessOptions::numbered(std::size_t n, std::filesystem::path root) {
  InProcessOptions o;
  for (std::size_t i = 0; i < n; ++i) o.addresses.push_back("node" + std::to_string(i + 1));
  o.root = std::move(root);
  return o;
}

InProcessCluster::InProcessCluster(InProcessOptions options, std::shared_ptr<const sphere::OperatorRegistry> registry)
    : options_(std::move(options)), addresses_(options_.addresses) {
  if (addresses_.empty()) fail(ErrorCode::config, "cluster needs at least one node");
  if (std::set<transport::Address>(addresses_.begin(), addresses_.end()).size() != addresses_.size())
    fail(ErrorCode::config, "duplicate node address");
  if (options_.replica_target < 1 || static_cast<std::size_t>(options_.replica_target) > addresses_.size())
    fail(ErrorCode::config, "replica target must be between 1 and the node count");
  clock_ = options_.clock ? options_.clock : std::make_shared<SteadyClock>();
  network_ = std::make_shared<transport::MemoryNetwork>(options_.profile, clock_);
  auto ring = std::make_shared<routing::RingView>(routing::RingView::from_addresses(addresses_));
  for (std::size_t i = 0; i < addresses_.size(); ++i) {
    storage::NodeOptions o;
    o.address = addresses_[i];
    o.data_dir = options_.root / addresses_[i];
    o.acl.allow(options_.client);
    o.replica.target_count = options_.replica_target;
    o.seed = options_.seed * 1000 + i;
    o.chunk_bytes = options_.chunk_bytes;
    auto node = std::make_unique<storage::SectorNode>(o, network_, clock_);
    node->install_ring(ring);
    auto spe = std::make_unique<sphere::SpeService>(*node, registry, options_.spes_per_node);
    spe->install();
    node->start();
    nodes_.push_back(std::move(node));
    spes_.push_back(std::move(spe));
  }
  client_ = std::make_unique<client::ClientSession>(network_, options_.client, addresses_.front(),
                                                    options_.profile.empty() ? std::nullopt
                                                                             : std::optional(options_.profile));
}

InProcessCluster::~InProcessCluster() {
  client_.reset();
  for (auto& n : nodes_) n->stop();
}

storage::SectorNode& InProcessCluster::node(const transport::Address& address) {
  for (auto& n : nodes_)
    if (n->address() == address) return *n;
  fail(ErrorCode::not_found, "no node " + address);
}

void InProcessCluster::set_down(const transport::Address& address, bool down) { network_->set_down(address, down); }

void InProcessCluster::replicate_all() {
  for (auto& n : nodes_)
    if (network_->is_up(n->address())) n->replicate_check();
}

}  // namespace sector::cluster
