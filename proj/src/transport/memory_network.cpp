#include "sector/transport/memory_network.hpp"

#include <atomic>
#include <future>
#include <set>
#include <thread>

#include "sector/error.hpp"

namespace sector::transport {

struct MemoryNetwork::Endpoint {
  Handler handler;
  std::atomic<bool> up{true};
  std::atomic<bool> removed{false};
  std::mutex mu;
  std::condition_variable idle;
  std::size_t inflight = 0;

  void begin() {
    std::lock_guard lk(mu);
    ++inflight;
  }
  void end() {
    std::lock_guard lk(mu);
    if (--inflight == 0) idle.notify_all();
  }
  void wait_idle() {
    std::unique_lock lk(mu);
    idle.wait(lk, [&] { return inflight == 0; });
  }
  bool reachable() const { return up.load() && !removed.load(); }
};

namespace {

struct CallState {
  std::mutex mu;
  bool abandoned = false;
  std::atomic<std::uint64_t> frames{0};
  std::promise<Message> reply;
};

class MemoryChannel final : public Channel {
 public:
  MemoryChannel(Address local, Address peer, std::weak_ptr<MemoryNetwork::Endpoint> ep,
                std::chrono::milliseconds rtt, Clock& clock, const Network& net)
      : local_(std::move(local)), peer_(std::move(peer)), ep_(std::move(ep)), rtt_(rtt), clock_(clock), net_(net) {}

  Message rpc(const Message& request, ProgressFn on_progress) override {
    auto ep = live_endpoint();
    {
      std::lock_guard lk(mu_);
      if (!pending_.insert(request.request_id).second)
        fail(ErrorCode::invalid_argument, "request id " + std::to_string(request.request_id) + " already pending");
    }
    struct Unregister {
      MemoryChannel* self;
      std::uint64_t id;
      ~Unregister() {
        std::lock_guard lk(self->mu_);
        self->pending_.erase(id);
      }
    } unregister{this, request.request_id};

    clock_.sleep_for(rtt_ / 2);
    if (!ep->reachable()) {
      closed_ = true;
      fail(ErrorCode::transport, "peer " + peer_ + " unreachable");
    }

    auto state = std::make_shared<CallState>();
    auto future = state->reply.get_future();
    ep->begin();
    std::thread([ep, state, request, peer = local_, on_progress = std::move(on_progress)]() mutable {
      auto id = request.request_id;
      Request req{peer, request, [state, id, &on_progress](Message m) {
                    std::lock_guard lk(state->mu);
                    if (state->abandoned || !on_progress) return;
                    m.request_id = id;
                    m.kind = MessageKind::progress;
                    state->frames.fetch_add(1);
                    on_progress(m);
                  }};
      Message reply = dispatch_safely(ep->handler, req);
      reply.request_id = id;
      {
        std::lock_guard lk(state->mu);
        state->reply.set_value(std::move(reply));
      }
      ep->end();
    }).detach();

    // The timeout counts from the last frame received, so a long call that
    // keeps sending progress stays alive.
    for (std::uint64_t seen = 0;;) {
      if (future.wait_for(net_.rpc_timeout()) == std::future_status::ready) break;
      auto now_seen = state->frames.load();
      if (now_seen != seen) {
        seen = now_seen;
        continue;
      }
      std::lock_guard lk(state->mu);
      state->abandoned = true;
      fail(ErrorCode::timeout, "rpc to " + peer_ + " timed out");
    }
    Message reply = future.get();
    {
      // Late progress frames must not reach a caller that has returned.
      std::lock_guard lk(state->mu);
      state->abandoned = true;
    }
    clock_.sleep_for(rtt_ - rtt_ / 2);
    return reply;
  }

  bool is_open() const override {
    auto ep = ep_.lock();
    return !closed_ && ep && ep->reachable();
  }
  void close() override { closed_ = true; }
  const Address& peer() const override { return peer_; }
  Backend backend() const override { return Backend::memory; }

 private:
  std::shared_ptr<MemoryNetwork::Endpoint> live_endpoint() {
    auto ep = ep_.lock();
    if (closed_ || !ep || !ep->reachable()) {
      closed_ = true;
      fail(ErrorCode::transport, "channel to " + peer_ + " is closed");
    }
    return ep;
  }

  Address local_, peer_;
  std::weak_ptr<MemoryNetwork::Endpoint> ep_;
  std::chrono::milliseconds rtt_;
  Clock& clock_;
  const Network& net_;
  std::atomic<bool> closed_{false};
  std::mutex mu_;
  std::set<std::uint64_t> pending_;
};

}  // namespace

MemoryNetwork::MemoryNetwork(LinkProfile profile, std::shared_ptr<Clock> clock)
    : profile_(std::move(profile)), clock_(std::move(clock)) {}

MemoryNetwork::~MemoryNetwork() {
  std::map<Address, std::shared_ptr<Endpoint>> eps;
  {
    std::lock_guard lk(mu_);
    eps.swap(endpoints_);
  }
  for (auto& [_, ep] : eps) {
    ep->removed = true;
    ep->wait_idle();
  }
}

Address MemoryNetwork::listen(const Address& address, Handler handler) {
  if (address.empty()) fail(ErrorCode::invalid_argument, "empty address");
  auto ep = std::make_shared<Endpoint>();
  ep->handler = std::move(handler);
  std::lock_guard lk(mu_);
  auto [it, inserted] = endpoints_.emplace(address, ep);
  if (!inserted) fail(ErrorCode::already_exists, "address " + address + " already in use");
  return address;
}

void MemoryNetwork::unlisten(const Address& address) {
  std::shared_ptr<Endpoint> ep;
  {
    std::lock_guard lk(mu_);
    auto it = endpoints_.find(address);
    if (it == endpoints_.end()) return;
    ep = it->second;
    endpoints_.erase(it);
  }
  ep->removed = true;
  ep->wait_idle();
}

std::shared_ptr<Channel> MemoryNetwork::connect(const Address& local, const Address& peer) {
  std::shared_ptr<Endpoint> ep;
  {
    std::lock_guard lk(mu_);
    auto it = endpoints_.find(peer);
    if (it != endpoints_.end()) ep = it->second;
  }
  if (!ep || !ep->reachable()) fail(ErrorCode::transport, "connection to " + peer + " refused");
  auto rtt = profile_.rtt(local, peer);
  clock_->sleep_for(rtt);
  {
    std::lock_guard lk(mu_);
    ++established_;
  }
  return std::make_shared<MemoryChannel>(local, peer, ep, rtt, *clock_, *this);
}

std::size_t MemoryNetwork::connections_established() const {
  std::lock_guard lk(mu_);
  return established_;
}

void MemoryNetwork::set_down(const Address& address, bool down) {
  std::lock_guard lk(mu_);
  auto it = endpoints_.find(address);
  if (it == endpoints_.end()) fail(ErrorCode::not_found, "no endpoint " + address);
  it->second->up = !down;
}

bool MemoryNetwork::is_up(const Address& address) const {
  std::lock_guard lk(mu_);
  auto it = endpoints_.find(address);
  return it != endpoints_.end() && it->second->reachable();
}

}  // namespace sector::transport
