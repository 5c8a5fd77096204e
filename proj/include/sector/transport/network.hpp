#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "sector/transport/message.hpp"

namespace sector::transport {

/// Node or client address. In-memory networks accept any non-empty name;
/// the socket backend expects "host:port".
using Address = std::string;

/// Host part of an address ("10.0.0.1:6000" -> "10.0.0.1"); names without a
/// port are returned whole.
std::string host_of(const Address& address);

struct Request {
  Address peer;
  const Message& message;
  /// Sends an interim frame to the caller. The transport stamps the request id.
  std::function<void(Message)> notify;
};

/// Server-side dispatch. The returned message is the final reply; its
/// request_id is overwritten by the transport. Throwing sector::Error sends
/// an error frame carrying the same code.
using Handler = std::function<Message(const Request&)>;

using ProgressFn = std::function<void(const Message&)>;

enum class Backend { memory, socket };

/// A connection from a local node to a peer. Shareable across threads;
/// concurrent rpc calls are matched to their replies by request_id.
class Channel {
 public:
  virtual ~Channel() = default;

  /// Sends `request` and waits for the reply carrying the same request_id.
  /// Progress frames for that id are forwarded to `on_progress`.
  virtual Message rpc(const Message& request, ProgressFn on_progress = {}) = 0;
  virtual bool is_open() const = 0;
  virtual void close() = 0;
  virtual const Address& peer() const = 0;
  virtual Backend backend() const = 0;

  std::uint64_t next_request_id() { return next_id_.fetch_add(1) + 1; }

 private:
  std::atomic<std::uint64_t> next_id_{0};
};

class Network {
 public:
  virtual ~Network() = default;

  /// Registers a handler; returns the bound address (the socket backend
  /// resolves port 0 to an ephemeral port).
  virtual Address listen(const Address& address, Handler handler) = 0;
  /// Stops accepting requests and waits for in-flight handlers to finish.
  virtual void unlisten(const Address& address) = 0;
  virtual std::shared_ptr<Channel> connect(const Address& local, const Address& peer) = 0;

  /// Underlying connections established so far.
  virtual std::size_t connections_established() const = 0;

  void set_rpc_timeout(std::chrono::milliseconds t) { timeout_ms_.store(t.count()); }
  std::chrono::milliseconds rpc_timeout() const { return std::chrono::milliseconds(timeout_ms_.load()); }

 private:
  std::atomic<std::int64_t> timeout_ms_{10'000};
};

/// Throws sector::Error if `reply` is an error frame, otherwise returns it.
Message expect_reply(Message reply);

/// Runs a handler and converts exceptions into error frames.
Message dispatch_safely(const Handler& handler, const Request& request);

}  // namespace sector::transport
