#pragma once

#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "sector/clock.hpp"
#include "sector/routing/ring.hpp"
#include "sector/storage/local_store.hpp"
#include "sector/storage/policy.hpp"
#include "sector/storage/transfer.hpp"
#include "sector/transport/channel_cache.hpp"
#include "sector/transport/network.hpp"

namespace sector::storage {

struct NodeOptions {
  transport::Address address;
  std::filesystem::path data_dir;
  Acl acl;
  ReplicaPolicy replica;
  std::uint64_t seed = 0;  // replica placement
  std::size_t chunk_bytes = kDefaultChunkBytes;
};

struct ReplicationAction {
  std::string name;
  transport::Address source;
  transport::Address target;
};

struct ReplicationReport {
  std::vector<ReplicationAction> actions;
  std::vector<std::string> warnings;
};

/// Storage daemon. Holds record files, keeps the location record for every
/// name it is responsible for on the ring, serves reads to anyone and
/// writes to ACL members and ring peers, and re-replicates the files it
/// originated when their replica count drops below target.
class SectorNode {
 public:
  SectorNode(NodeOptions options, std::shared_ptr<transport::Network> network,
             std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());
  ~SectorNode();

  SectorNode(const SectorNode&) = delete;
  SectorNode& operator=(const SectorNode&) = delete;

  /// Starts serving. Returns the bound address.
  transport::Address start();
  void stop();

  const transport::Address& address() const noexcept { return options_.address; }
  const NodeOptions& options() const noexcept { return options_; }

  void install_ring(std::shared_ptr<const routing::RingView> ring) { ring_.install(std::move(ring)); }
  std::shared_ptr<const routing::RingView> ring() const { return ring_.get(); }

  /// Registers every locally held file with its responsible node.
  void announce();

  /// Adds a request handler for another service hosted on this node.
  /// Must be called before start().
  void add_service(transport::MessageKind kind, transport::Handler handler);

  /// Persists a file (and index) on this node on behalf of `client`.
  /// Returns the replica locations after registration.
  std::vector<transport::Address> store_file(const transport::Address& client, const std::string& name,
                                             std::string_view data, const std::optional<RecordIndex>& index);

  /// All nodes holding a replica of `name`. Throws not-found when none do.
  std::vector<transport::Address> lookup(const std::string& name);

  /// Records [first, first+count) from the local copy or, failing that,
  /// from any replica holder.
  RecordBatch read_records(const std::string& name, std::uint64_t first, std::uint64_t count);

  /// Metadata from the local copy or any holder.
  FileInfo file_info(const std::string& name);

  /// For each file originated here with fewer than target replicas, copies
  /// data and index to uniformly chosen nodes not already holding it.
  ReplicationReport replicate_check();
  /// Runs replicate_check when a check interval has elapsed on the clock.
  std::optional<ReplicationReport> run_due_replication();

  /// Background thread polling run_due_replication every `poll`.
  void start_replication_timer(std::chrono::milliseconds poll);

  LocalStore& store() noexcept { return store_; }
  transport::ChannelCache& channels() noexcept { return channels_; }
  Clock& clock() noexcept { return *clock_; }
  bool holds(const std::string& name) const { return store_.contains(name); }
  /// Origin node recorded for a local file.
  transport::Address origin_of(const std::string& name) const;

  /// Whether `peer` may write here: listed in the ACL or a ring member.
  bool may_write(const transport::Address& peer) const;

 private:
  transport::Message handle(const transport::Request& req);
  void register_location(const std::string& name, const transport::Address& holder);
  void register_location_or_warn(const std::string& name);
  std::vector<transport::Address> local_record(const std::string& name) const;
  void commit_put(const transport::Address& peer, std::string_view payload);
  void discard_staging(std::uint64_t token);
  void stage_chunk(const transport::Address& peer, std::string_view payload);
  RecordBatch sample_records(const std::string& name, std::uint64_t count) const;

  NodeOptions options_;
  std::shared_ptr<transport::Network> network_;
  std::shared_ptr<Clock> clock_;
  LocalStore store_;
  routing::RingHolder ring_;
  transport::ChannelCache channels_;
  std::map<transport::MessageKind, transport::Handler> services_;
  bool listening_ = false;

  mutable std::mutex meta_mu_;
  std::map<std::string, std::set<transport::Address>> records_;  // names this node is responsible for
  std::map<std::string, transport::Address> origins_;
  std::set<std::string> applied_keys_;

  struct Staging {
    std::filesystem::path data;
    std::filesystem::path index;
    bool has_index = false;
  };
  std::mutex staging_mu_;
  std::map<std::uint64_t, Staging> staging_;

  std::mutex rng_mu_;
  std::mt19937_64 rng_;

  std::mutex repl_mu_;
  Clock::time_point last_check_;

  std::mutex timer_mu_;
  std::condition_variable timer_cv_;
  bool timer_stop_ = false;
  std::thread timer_;
};

}  // namespace sector::storage
