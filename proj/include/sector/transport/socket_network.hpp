#pragma once

#include <map>
#include <memory>
#include <mutex>

#include "sector/transport/network.hpp"

namespace sector::transport {

/// TCP backend. Frames use the encode_message layout; each connection has a
/// reader thread that demultiplexes replies by request_id.
class SocketNetwork final : public Network {
 public:
  SocketNetwork() = default;
  ~SocketNetwork() override;

  /// `address` is "host:port"; port 0 binds an ephemeral port.
  Address listen(const Address& address, Handler handler) override;
  void unlisten(const Address& address) override;
  std::shared_ptr<Channel> connect(const Address& local, const Address& peer) override;
  std::size_t connections_established() const override { return established_.load(); }

  struct Listener;

 private:
  std::mutex mu_;
  std::map<Address, std::shared_ptr<Listener>> listeners_;
  std::atomic<std::size_t> established_{0};
};

}  // namespace sector::transport
