#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "sector/error.hpp"
#include "sector/routing/ring.hpp"

using namespace sector;
using namespace sector::routing;

namespace {

// Linear-scan oracle: smallest member id >= query, wrapping to the minimum.
const Member& scan_successor(const std::vector<Member>& members, const NodeId& id) {
  const Member* best = nullptr;
  const Member* lowest = nullptr;
  for (const auto& m : members) {
    if (!lowest || m.id < lowest->id) lowest = &m;
    if (m.id >= id && (!best || m.id < best->id)) best = &m;
  }
  return best ? *best : *lowest;
}

NodeId random_id(std::mt19937_64& rng) {
  NodeId::Bytes b;
  for (auto& x : b) x = static_cast<std::uint8_t>(rng());
  return NodeId(b);
}

RingView random_ring(std::mt19937_64& rng, std::size_t n) {
  std::vector<Member> ms;
  for (std::size_t i = 0; i < n; ++i) ms.push_back({random_id(rng), "node" + std::to_string(i)});
  return RingView::from_members(ms);
}

}  // namespace

TEST(HashName, DeterministicAndRejectsEmpty) {
  EXPECT_EQ(hash_name("file01.dat"), hash_name("file01.dat"));
  EXPECT_NE(hash_name("file01.dat"), hash_name("file02.dat"));
  // SHA-1("abc")
  EXPECT_EQ(hash_name("abc").hex(), "a9993e364706816aba3e25717850c26c9cd0d89d");
  EXPECT_THROW(hash_name(""), Error);
}

TEST(HashName, NoCollisionsOverManyNames) {
  std::mt19937_64 rng(7);
  std::set<NodeId> seen;
  for (int i = 0; i < 100000; ++i) seen.insert(hash_name("name-" + std::to_string(rng())));
  EXPECT_EQ(seen.size(), 100000u);
}

TEST(NodeId, PlusPow2Wraps) {
  EXPECT_EQ(NodeId::from_u64(1000).plus_pow2(4, 10), NodeId::from_u64(1016 % 1024));
  EXPECT_EQ(NodeId::from_u64(1020).plus_pow2(3, 10), NodeId::from_u64(4));
  NodeId::Bytes ones;
  ones.fill(0xff);
  EXPECT_EQ(NodeId(ones).plus_pow2(0), NodeId());
}

TEST(Ring, EmptyRingLookupFails) {
  RingView r;
  EXPECT_THROW(r.find_successor(NodeId()), Error);
}

TEST(Ring, SingleMemberOwnsEverything) {
  auto r = join(RingView(), "solo");
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(r.find_successor(random_id(rng)).address, "solo");
}

TEST(Ring, TruncatedSpaceCircularOrder) {
  auto r = RingView::from_members({{NodeId::from_u64(10), "a"}, {NodeId::from_u64(100), "b"}, {NodeId::from_u64(1000), "c"}}, 10);
  EXPECT_EQ(r.find_successor(NodeId::from_u64(101)).address, "c");
  EXPECT_EQ(r.find_successor(NodeId::from_u64(100)).address, "b");
  EXPECT_EQ(r.find_successor(NodeId::from_u64(1001)).address, "a");
  EXPECT_EQ(r.find_successor(NodeId::from_u64(5)).address, "a");
}

TEST(Ring, FingerIsSuccessorOfPowerOfTwoOffset) {
  std::mt19937_64 rng(3);
  auto r = random_ring(rng, 16);
  for (std::size_t m = 0; m < r.size(); ++m)
    for (unsigned i = 0; i < kIdBits; i += 7)
      EXPECT_EQ(r.members()[r.fingers(m)[i]], scan_successor(r.members(), r.members()[m].id.plus_pow2(i)));
}

TEST(Ring, FingerRoutingMatchesOracle) {
  std::mt19937_64 rng(11);
  auto r = random_ring(rng, 64);
  const auto bound = static_cast<std::size_t>(std::ceil(std::log2(64.0))) + 1;
  for (int q = 0; q < 10000; ++q) {
    auto id = random_id(rng);
    auto start = rng() % r.size();
    auto res = r.route(start, id);
    ASSERT_EQ(r.members()[res.member], scan_successor(r.members(), id));
    ASSERT_EQ(r.find_successor(id), scan_successor(r.members(), id));
    EXPECT_LE(res.visited, bound);
  }
}

TEST(Ring, JoinLeaveInverse) {
  auto r = RingView::from_addresses({"n1", "n2", "n3"});
  auto r2 = leave(join(r, "n4"), "n4");
  EXPECT_EQ(r2.members(), r.members());
  EXPECT_THROW(join(r, "n2"), Error);
  EXPECT_THROW(leave(r, "zz"), Error);
  auto empty = leave(join(RingView(), "x"), "x");
  EXPECT_TRUE(empty.empty());
}

TEST(Ring, OwnershipTransferMatchesRecomputation) {
  std::mt19937_64 rng(5);
  auto r = random_ring(rng, 10);
  std::vector<NodeId> files;
  for (int i = 0; i < 2000; ++i) files.push_back(random_id(rng));
  auto newcomer_id = random_id(rng);
  auto joined = join_with_id(r, "newcomer", newcomer_id);
  const auto& succ_of_new = scan_successor(r.members(), newcomer_id);
  for (const auto& f : files) {
    const auto& before = r.find_successor(f);
    const auto& after = joined.find_successor(f);
    EXPECT_EQ(after, scan_successor(joined.members(), f));
    if (after.address == "newcomer") {
      EXPECT_EQ(before, succ_of_new);  // only the successor gives up ids
    } else {
      EXPECT_EQ(before, after);
    }
  }
  auto left = leave(joined, "newcomer");
  for (const auto& f : files) EXPECT_EQ(left.find_successor(f), scan_successor(left.members(), f));
}

TEST(Ring, RandomizedJoinLeaveKeepsSortedUnique) {
  std::mt19937_64 rng(9);
  RingView r;
  std::set<std::string> present;
  for (int op = 0; op < 1000; ++op) {
    if (present.empty() || rng() % 3 != 0) {
      auto name = "n" + std::to_string(rng() % 200);
      if (present.count(name)) {
        EXPECT_THROW(join(r, name), Error);
        continue;
      }
      r = join(r, name);
      present.insert(name);
    } else {
      auto it = present.begin();
      std::advance(it, rng() % present.size());
      r = leave(r, *it);
      present.erase(it);
    }
    ASSERT_EQ(r.size(), present.size());
    for (std::size_t i = 1; i < r.size(); ++i) ASSERT_LT(r.members()[i - 1].id, r.members()[i].id);
  }
}
