#include <gtest/gtest.h>

#include "sector/client/session.hpp"
#include "sector/error.hpp"
#include "sector/storage/sector_node.hpp"
#include "sector/transport/socket_network.hpp"
#include "test_support.hpp"

using namespace sector;
using namespace std::chrono_literals;
using sector::testutil::StorageCluster;
using sector::testutil::TempDir;

TEST(ClientSession, UploadLocateDownload) {
  StorageCluster c(4);
  client::ClientSession s(c.net, "client", "node1");
  std::mt19937_64 rng(3);
  auto data = sector::testutil::random_bytes(rng, 1000);
  auto locs = s.upload_bytes(data, "up.dat", storage::RecordIndex::uniform(10, 100));
  ASSERT_EQ(locs.size(), 1u);
  EXPECT_EQ(locs[0], c.ring->owner_of("up.dat").address);
  EXPECT_EQ(s.locate("up.dat"), locs);
  auto out = c.dir.path() / "down.dat";
  EXPECT_EQ(s.download("up.dat", out), 1000u);
  EXPECT_EQ(sector::testutil::read_file(out), data);
  EXPECT_EQ(storage::RecordIndex::load(out.string() + ".idx"), storage::RecordIndex::uniform(10, 100));
}

TEST(ClientSession, UnauthorizedUploadDenied) {
  StorageCluster c(2);
  client::ClientSession s(c.net, "stranger", "node1");
  try {
    s.upload_bytes("abc", "x", std::nullopt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::access_denied);
  }
  for (auto& n : c.nodes) EXPECT_FALSE(n->holds("x"));
}

TEST(ClientSession, MissingNameIsNotFound) {
  StorageCluster c(2);
  client::ClientSession s(c.net, "client", "node2");
  try {
    s.download("nothing", c.dir.path() / "n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_found);
  }
  EXPECT_FALSE(std::filesystem::exists(c.dir.path() / "n"));
  EXPECT_THROW(s.locate("nothing"), Error);
}

TEST(ClientSession, ReplicationThenFailover) {
  StorageCluster c(5);
  client::ClientSession s(c.net, "client", "node1");
  std::mt19937_64 rng(4);
  auto data = sector::testutil::random_bytes(rng, 10 << 20);  // spans several chunks
  s.upload_bytes(data, "big.dat", std::nullopt);
  c.daily_cycle();
  auto locs = s.locate("big.dat");
  ASSERT_EQ(locs.size(), 3u);
  for (const auto& victim : locs) {
    c.net->set_down(victim, true);
    auto out = c.dir.path() / "copy";
    EXPECT_EQ(s.download("big.dat", out), data.size());
    EXPECT_EQ(sector::testutil::read_file(out), data);
    c.net->set_down(victim, false);
  }
}

TEST(ClientSession, LocationsSortedByRtt) {
  transport::LinkProfile p;
  p.set_rtt("client", "node1", 55ms);
  p.set_rtt("client", "node2", 16ms);
  StorageCluster c(2, 2, 1, p);
  client::ClientSession s(c.net, "client", "node1", p);
  c.node("node1").store_file("client", "both", "z", std::nullopt);
  c.node("node1").replicate_check();
  EXPECT_EQ(s.locate("both"), (std::vector<transport::Address>{"node2", "node1"}));
}

TEST(ClientSession, SocketBackendRoundTrip) {
  TempDir d;
  auto net = std::make_shared<transport::SocketNetwork>();
  storage::NodeOptions o;
  o.address = "127.0.0.1:0";
  o.data_dir = d.path() / "n";
  o.acl.allow("127.0.0.1");
  // bind first to learn the port, then restart with the real address
  auto probe = net->listen("127.0.0.1:0", [](const transport::Request&) { return transport::Message{}; });
  net->unlisten(probe);
  o.address = probe;
  storage::SectorNode node(o, net);
  node.install_ring(std::make_shared<routing::RingView>(routing::RingView::from_addresses({probe})));
  node.start();
  client::ClientSession s(net, "127.0.0.1:0", probe);
  s.upload_bytes("line1\nline2\n", "lines.txt", storage::RecordIndex::from_lines("line1\nline2\n"));
  EXPECT_EQ(s.locate("lines.txt"), std::vector<transport::Address>{probe});
  auto out = d.path() / "got";
  EXPECT_EQ(s.download("lines.txt", out), 12u);
  EXPECT_EQ(sector::testutil::read_file(out), "line1\nline2\n");
}
