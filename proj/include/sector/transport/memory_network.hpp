#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>

#include "sector/clock.hpp"
#include "sector/transport/link_profile.hpp"
#include "sector/transport/network.hpp"

namespace sector::transport {

/// In-process network. Every request is served on its own thread, so
/// handlers may block or issue nested requests freely. Connection setup and
/// each request/response pair are delayed by the link rtt (half each way),
/// measured on the injected clock.
class MemoryNetwork final : public Network {
 public:
  explicit MemoryNetwork(LinkProfile profile = {},
                         std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());
  ~MemoryNetwork() override;

  Address listen(const Address& address, Handler handler) override;
  void unlisten(const Address& address) override;
  std::shared_ptr<Channel> connect(const Address& local, const Address& peer) override;
  std::size_t connections_established() const override;

  /// Marks an endpoint unreachable (a crashed node) or reachable again.
  /// Requests already being served run to completion.
  void set_down(const Address& address, bool down);
  bool is_up(const Address& address) const;

  const LinkProfile& profile() const noexcept { return profile_; }
  Clock& clock() noexcept { return *clock_; }

  struct Endpoint;

 private:
  LinkProfile profile_;
  std::shared_ptr<Clock> clock_;
  mutable std::mutex mu_;
  std::map<Address, std::shared_ptr<Endpoint>> endpoints_;
  std::size_t established_ = 0;
};

}  // namespace sector::transport
