#include "sector/routing/ring.hpp"

#include <algorithm>

#include "sector/error.hpp"

namespace sector::routing {

RingView RingView::from_members(std::vector<Member> members, unsigned bits) {
  RingView r(bits);
  for (auto& m : members) m.id = m.id.truncated(bits);
  std::sort(members.begin(), members.end(), [](const Member& a, const Member& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (members[i].id == members[i - 1].id)
      fail(ErrorCode::already_exists, "identifier collision between " + members[i - 1].address + " and " + members[i].address);
  }
  r.members_ = std::move(members);
  for (std::size_t i = 0; i < r.members_.size(); ++i)
    for (std::size_t j = i + 1; j < r.members_.size(); ++j)
      if (r.members_[i].address == r.members_[j].address)
        fail(ErrorCode::already_exists, "duplicate member " + r.members_[i].address);
  r.rebuild_fingers();
  return r;
}

RingView RingView::from_addresses(const std::vector<transport::Address>& addresses) {
  std::vector<Member> ms;
  ms.reserve(addresses.size());
  for (const auto& a : addresses) ms.push_back({hash_name(a), a});
  return from_members(std::move(ms));
}

namespace {
std::size_t successor_index(const std::vector<Member>& members, const NodeId& id) {
  auto it = std::lower_bound(members.begin(), members.end(), id,
                             [](const Member& m, const NodeId& v) { return m.id < v; });
  return it == members.end() ? 0 : static_cast<std::size_t>(it - members.begin());
}
}  // namespace

void RingView::rebuild_fingers() {
  fingers_.assign(members_.size(), {});
  for (std::size_t m = 0; m < members_.size(); ++m) {
    auto& f = fingers_[m];
    f.resize(bits_);
    for (unsigned i = 0; i < bits_; ++i) f[i] = successor_index(members_, members_[m].id.plus_pow2(i, bits_));
  }
}

const Member& RingView::find_successor(const NodeId& id) const {
  if (members_.empty()) fail(ErrorCode::not_found, "lookup on an empty ring");
  return members_[successor_index(members_, id.truncated(bits_))];
}

RouteResult RingView::route(std::size_t start, const NodeId& raw) const {
  if (members_.empty()) fail(ErrorCode::not_found, "lookup on an empty ring");
  if (start >= members_.size()) fail(ErrorCode::range, "route start out of range");
  const NodeId id = raw.truncated(bits_);
  std::size_t n = start;
  std::size_t visited = 1;
  while (true) {
    if (members_[n].id == id) return {n, visited};
    std::size_t succ = fingers_[n][0];
    if (in_interval_open_closed(id, members_[n].id, members_[succ].id)) return {succ, visited};
    // closest preceding finger
    std::size_t next = n;
    for (unsigned i = bits_; i-- > 0;) {
      std::size_t f = fingers_[n][i];
      if (in_interval_open(members_[f].id, members_[n].id, id)) {
        next = f;
        break;
      }
    }
    if (next == n) return {succ, visited};
    n = next;
    ++visited;
  }
}

std::optional<std::size_t> RingView::index_of(const transport::Address& address) const {
  for (std::size_t i = 0; i < members_.size(); ++i)
    if (members_[i].address == address) return i;
  return std::nullopt;
}

std::vector<Member> RingView::successors_from(const NodeId& id) const {
  std::vector<Member> out;
  if (members_.empty()) return out;
  auto first = successor_index(members_, id.truncated(bits_));
  for (std::size_t k = 0; k < members_.size(); ++k) out.push_back(members_[(first + k) % members_.size()]);
  return out;
}

RingView join(const RingView& ring, const transport::Address& node) {
  return join_with_id(ring, node, hash_name(node));
}

RingView join_with_id(const RingView& ring, const transport::Address& node, const NodeId& id) {
  if (node.empty()) fail(ErrorCode::invalid_argument, "empty node address");
  if (ring.contains(node)) fail(ErrorCode::already_exists, node + " is already a ring member");
  auto members = ring.members_;
  members.push_back({id, node});
  return RingView::from_members(std::move(members), ring.bits_);
}

RingView leave(const RingView& ring, const transport::Address& node) {
  auto idx = ring.index_of(node);
  if (!idx) fail(ErrorCode::not_found, node + " is not a ring member");
  auto members = ring.members_;
  members.erase(members.begin() + static_cast<std::ptrdiff_t>(*idx));
  return RingView::from_members(std::move(members), ring.bits_);
}

}  // namespace sector::routing
