#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "sector/transport/network.hpp"

namespace sector::transport {

/// At most one cached channel per peer for a given local address. Frequent
/// transfers between the same pair of nodes reuse the open connection.
class ChannelCache {
 public:
  ChannelCache(std::shared_ptr<Network> network, Address local)
      : network_(std::move(network)), local_(std::move(local)) {}

  /// Returns the cached channel to `peer` if it is still open, otherwise
  /// establishes and caches a new one.
  std::shared_ptr<Channel> open(const Address& peer);

  /// rpc over the cached channel with a fresh request id. Error replies are
  /// rethrown as sector::Error; a transport failure evicts the channel.
  Message call(const Address& peer, MessageKind kind, std::string payload, ProgressFn on_progress = {});

  void evict(const Address& peer);
  const Address& local() const noexcept { return local_; }
  Network& network() noexcept { return *network_; }
  const std::shared_ptr<Network>& network_ptr() const noexcept { return network_; }

 private:
  std::shared_ptr<Network> network_;
  Address local_;
  std::mutex mu_;
  std::map<Address, std::shared_ptr<Channel>> channels_;
};

}  // namespace sector::transport
