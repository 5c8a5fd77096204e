#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "sector/routing/node_id.hpp"
#include "sector/transport/network.hpp"

namespace sector::routing {

struct Member {
  NodeId id;
  transport::Address address;

  friend bool operator==(const Member&, const Member&) = default;
};

struct RouteResult {
  std::size_t member;  // index into members()
  std::size_t visited; // members contacted, including the starting one
  /// Forwarding steps between members: the origin is not a hop.
  std::size_t hops() const noexcept { return visited - 1; }
};

/// Full-membership Chord ring. Immutable: join and leave return a new view,
/// and each view carries complete finger tables.
class RingView {
 public:
  explicit RingView(unsigned bits = kIdBits) : bits_(bits) {}

  /// Builds a view from explicit (id, address) pairs; ids are reduced mod 2^bits.
  static RingView from_members(std::vector<Member> members, unsigned bits = kIdBits);
  /// Builds a view hashing each address with hash_name.
  static RingView from_addresses(const std::vector<transport::Address>& addresses);

  const std::vector<Member>& members() const noexcept { return members_; }
  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  unsigned bits() const noexcept { return bits_; }

  /// Member whose id is the first at or after `id` in circular order.
  const Member& find_successor(const NodeId& id) const;
  /// Member responsible for a file or node name.
  const Member& owner_of(std::string_view name) const { return find_successor(hash_name(name).truncated(bits_)); }

  /// Chord lookup using only finger tables, starting at member `start`.
  RouteResult route(std::size_t start, const NodeId& id) const;

  /// finger[i] of member m: index of successor(m.id + 2^i).
  const std::vector<std::size_t>& fingers(std::size_t member) const { return fingers_.at(member); }

  std::optional<std::size_t> index_of(const transport::Address& address) const;
  bool contains(const transport::Address& address) const { return index_of(address).has_value(); }

  /// Members in ring order starting at the successor of `id`.
  std::vector<Member> successors_from(const NodeId& id) const;

  friend RingView join(const RingView& ring, const transport::Address& node);
  friend RingView join_with_id(const RingView& ring, const transport::Address& node, const NodeId& id);
  friend RingView leave(const RingView& ring, const transport::Address& node);

 private:
  void rebuild_fingers();

  unsigned bits_;
  std::vector<Member> members_;
  std::vector<std::vector<std::size_t>> fingers_;
};

/// Inserts `node` at hash_name(node). Throws already-exists for a member.
RingView join(const RingView& ring, const transport::Address& node);
RingView join_with_id(const RingView& ring, const transport::Address& node, const NodeId& id);
/// Removes `node`. Throws not-found for a non-member.
RingView leave(const RingView& ring, const transport::Address& node);

/// Current ring epoch, replaced atomically on membership change.
class RingHolder {
 public:
  std::shared_ptr<const RingView> get() const {
    std::lock_guard lk(mu_);
    return view_;
  }
  void install(std::shared_ptr<const RingView> view) {
    std::lock_guard lk(mu_);
    view_ = std::move(view);
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const RingView> view_ = std::make_shared<RingView>();
};

}  // namespace sector::routing
