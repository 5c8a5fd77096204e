#include "sector/transport/channel_cache.hpp"

#include "sector/error.hpp"

namespace sector::transport {

std::shared_ptr<Channel> ChannelCache::open(const Address& peer) {
  if (peer.empty()) fail(ErrorCode::invalid_argument, "empty peer address");
  std::lock_guard lk(mu_);
  auto it = channels_.find(peer);
  if (it != channels_.end() && it->second->is_open()) return it->second;
  auto ch = network_->connect(local_, peer);
  channels_[peer] = ch;
  return ch;
}

void ChannelCache::evict(const Address& peer) {
  std::lock_guard lk(mu_);
  channels_.erase(peer);
}

Message ChannelCache::call(const Address& peer, MessageKind kind, std::string payload, ProgressFn on_progress) {
  auto ch = open(peer);
  Message req{kind, ch->next_request_id(), std::move(payload)};
  try {
    return expect_reply(ch->rpc(req, std::move(on_progress)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::transport) evict(peer);
    throw;
  }
}

}  // namespace sector::transport
