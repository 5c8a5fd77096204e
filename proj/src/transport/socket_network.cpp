#include "sector/transport/socket_network.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <atomic>
#include <future>
#include <list>
#include <thread>
#include <unordered_map>

#include "sector/error.hpp"

namespace sector::transport {

namespace {

std::pair<std::string, std::string> split_address(const Address& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    fail(ErrorCode::invalid_argument, "socket address must be host:port, got '" + address + "'");
  return {address.substr(0, colon), address.substr(colon + 1)};
}

sockaddr_in resolve(const Address& address) {
  auto [host, port] = split_address(address);
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0 || !res)
    fail(ErrorCode::transport, "cannot resolve " + address + ": " + ::gai_strerror(rc));
  sockaddr_in out{};
  std::memcpy(&out, res->ai_addr, sizeof out);
  ::freeaddrinfo(res);
  return out;
}

Address format(const sockaddr_in& sa) {
  char buf[INET_ADDRSTRLEN] = {};
  ::inet_ntop(AF_INET, &sa.sin_addr, buf, sizeof buf);
  return std::string(buf) + ":" + std::to_string(ntohs(sa.sin_port));
}

bool write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    auto n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

bool read_exact(int fd, char* out, std::size_t n) {
  while (n > 0) {
    auto got = ::recv(fd, out, n, 0);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) return false;
    out += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

std::optional<Message> read_frame(int fd) {
  std::string header(kHeaderSize, '\0');
  if (!read_exact(fd, header.data(), kHeaderSize)) return std::nullopt;
  auto len = *peek_payload_length(header);
  if (len > kDefaultMaxPayload) return std::nullopt;
  std::string frame = header;
  frame.resize(kHeaderSize + len);
  if (!read_exact(fd, frame.data() + kHeaderSize, len)) return std::nullopt;
  return decode_message(frame);
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

struct ServerConn {
  int fd;
  Address peer;
  std::mutex write_mu;
  std::thread reader;

  bool send(const Message& m) {
    auto frame = encode_message(m);
    std::lock_guard lk(write_mu);
    return write_all(fd, frame);
  }
};

}  // namespace

struct SocketNetwork::Listener {
  int fd = -1;
  Handler handler;
  std::thread acceptor;
  std::mutex mu;
  std::condition_variable idle;
  std::list<std::shared_ptr<ServerConn>> conns;
  std::size_t inflight = 0;
  std::atomic<bool> stopping{false};

  void serve(std::shared_ptr<ServerConn> conn, std::shared_ptr<Listener> self) {
    while (auto msg = read_frame(conn->fd)) {
      {
        std::lock_guard lk(mu);
        ++inflight;
      }
      std::thread([conn, self, m = std::move(*msg)]() {
        auto id = m.request_id;
        Request req{conn->peer, m, [&conn, id](Message p) {
                      p.kind = MessageKind::progress;
                      p.request_id = id;
                      conn->send(p);
                    }};
        Message reply = dispatch_safely(self->handler, req);
        reply.request_id = id;
        conn->send(reply);
        std::lock_guard lk(self->mu);
        if (--self->inflight == 0) self->idle.notify_all();
      }).detach();
    }
  }
};

namespace {

class SocketChannel final : public Channel {
 public:
  SocketChannel(int fd, Address peer, const Network& net) : fd_(fd), peer_(std::move(peer)), net_(net) {
    reader_ = std::thread([this] { read_loop(); });
  }
  ~SocketChannel() override {
    close();
    if (reader_.joinable()) reader_.join();
    ::close(fd_);
  }

  Message rpc(const Message& request, ProgressFn on_progress) override {
    auto slot = std::make_shared<Pending>();
    slot->progress = std::move(on_progress);
    auto future = slot->reply.get_future();
    {
      std::lock_guard lk(mu_);
      if (closed_) fail(ErrorCode::transport, "channel to " + peer_ + " is closed");
      if (!pending_.emplace(request.request_id, slot).second)
        fail(ErrorCode::invalid_argument, "request id " + std::to_string(request.request_id) + " already pending");
    }
    auto frame = encode_message(request);
    bool sent;
    {
      std::lock_guard lk(write_mu_);
      sent = write_all(fd_, frame);
    }
    if (!sent) {
      erase(request.request_id);
      close();
      fail(ErrorCode::transport, "send to " + peer_ + " failed");
    }
    for (std::uint64_t seen = 0;;) {
      if (future.wait_for(net_.rpc_timeout()) == std::future_status::ready) break;
      auto now_seen = slot->frames.load();
      if (now_seen != seen) {
        seen = now_seen;
        continue;
      }
      erase(request.request_id);
      fail(ErrorCode::timeout, "rpc to " + peer_ + " timed out");
    }
    return future.get();
  }

  bool is_open() const override { return !closed_.load(); }
  void close() override {
    if (!closed_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
  }
  const Address& peer() const override { return peer_; }
  Backend backend() const override { return Backend::socket; }

 private:
  struct Pending {
    std::promise<Message> reply;
    ProgressFn progress;
    std::atomic<std::uint64_t> frames{0};
  };

  void erase(std::uint64_t id) {
    std::lock_guard lk(mu_);
    pending_.erase(id);
  }

  void read_loop() {
    while (auto msg = read_frame(fd_)) {
      std::shared_ptr<Pending> slot;
      {
        std::lock_guard lk(mu_);
        auto it = pending_.find(msg->request_id);
        if (it == pending_.end()) continue;
        slot = it->second;
        if (msg->kind != MessageKind::progress) pending_.erase(it);
      }
      if (msg->kind == MessageKind::progress) {
        slot->frames.fetch_add(1);
        if (slot->progress) slot->progress(*msg);
      } else {
        slot->reply.set_value(std::move(*msg));
      }
    }
    std::unordered_map<std::uint64_t, std::shared_ptr<Pending>> orphans;
    {
      std::lock_guard lk(mu_);
      closed_ = true;
      orphans.swap(pending_);
    }
    for (auto& [_, slot] : orphans)
      slot->reply.set_exception(std::make_exception_ptr(Error(ErrorCode::transport, "connection to " + peer_ + " lost")));
  }

  int fd_;
  Address peer_;
  const Network& net_;
  std::thread reader_;
  std::mutex mu_, write_mu_;
  std::atomic<bool> closed_{false};
  std::unordered_map<std::uint64_t, std::shared_ptr<Pending>> pending_;
};

}  // namespace

SocketNetwork::~SocketNetwork() {
  std::vector<Address> addrs;
  {
    std::lock_guard lk(mu_);
    for (auto& [a, _] : listeners_) addrs.push_back(a);
  }
  for (auto& a : addrs) unlisten(a);
}

Address SocketNetwork::listen(const Address& address, Handler handler) {
  auto sa = resolve(address);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail(ErrorCode::transport, std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0 || ::listen(fd, 64) != 0) {
    auto err = std::string(std::strerror(errno));
    ::close(fd);
    fail(ErrorCode::transport, "cannot listen on " + address + ": " + err);
  }
  socklen_t len = sizeof sa;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&sa), &len);
  auto bound = format(sa);

  auto l = std::make_shared<Listener>();
  l->fd = fd;
  l->handler = std::move(handler);
  l->acceptor = std::thread([l] {
    while (!l->stopping) {
      sockaddr_in peer{};
      socklen_t plen = sizeof peer;
      int cfd = ::accept(l->fd, reinterpret_cast<sockaddr*>(&peer), &plen);
      if (cfd < 0) {
        if (errno == EINTR) continue;
        break;
      }
      set_nodelay(cfd);
      auto conn = std::make_shared<ServerConn>();
      conn->fd = cfd;
      conn->peer = format(peer);
      std::lock_guard lk(l->mu);
      if (l->stopping) {
        ::close(cfd);
        break;
      }
      l->conns.push_back(conn);
      conn->reader = std::thread([l, conn] { l->serve(conn, l); });
    }
  });
  std::lock_guard lk(mu_);
  listeners_[bound] = l;
  return bound;
}

void SocketNetwork::unlisten(const Address& address) {
  std::shared_ptr<Listener> l;
  {
    std::lock_guard lk(mu_);
    auto it = listeners_.find(address);
    if (it == listeners_.end()) return;
    l = it->second;
    listeners_.erase(it);
  }
  {
    std::lock_guard lk(l->mu);
    l->stopping = true;
  }
  ::shutdown(l->fd, SHUT_RDWR);
  if (l->acceptor.joinable()) l->acceptor.join();
  ::close(l->fd);
  std::list<std::shared_ptr<ServerConn>> conns;
  {
    std::lock_guard lk(l->mu);
    conns.swap(l->conns);
  }
  for (auto& c : conns) ::shutdown(c->fd, SHUT_RDWR);
  for (auto& c : conns)
    if (c->reader.joinable()) c->reader.join();
  {
    std::unique_lock lk(l->mu);
    l->idle.wait(lk, [&] { return l->inflight == 0; });
  }
  for (auto& c : conns) ::close(c->fd);
}

std::shared_ptr<Channel> SocketNetwork::connect(const Address& /*local*/, const Address& peer) {
  auto sa = resolve(peer);
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail(ErrorCode::transport, std::string("socket: ") + std::strerror(errno));
  if (::connect(fd, reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    auto err = std::string(std::strerror(errno));
    ::close(fd);
    fail(ErrorCode::transport, "connection to " + peer + " refused: " + err);
  }
  set_nodelay(fd);
  ++established_;
  return std::make_shared<SocketChannel>(fd, peer, *this);
}

}  // namespace sector::transport
