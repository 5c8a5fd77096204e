#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "sector/storage/record_index.hpp"
#include "sector/storage/transfer.hpp"
#include "sector/transport/channel_cache.hpp"
#include "sector/transport/link_profile.hpp"

namespace sector::client {

/// A client's view of the storage cloud: it talks to one known entry
/// server, which resolves names through the routing layer, and then opens
/// data channels directly to the nodes holding the file.
class ClientSession {
 public:
  ClientSession(std::shared_ptr<transport::Network> network, transport::Address self, transport::Address entry_server,
                std::optional<transport::LinkProfile> profile = std::nullopt);

  /// Replica locations, nearest first when a link profile is known.
  std::vector<transport::Address> locate(const std::string& name);

  /// Stores a local file (and its index) on the node responsible for `name`.
  std::vector<transport::Address> upload(const std::filesystem::path& local_path, const std::string& name,
                                         const std::optional<storage::RecordIndex>& index);
  std::vector<transport::Address> upload_bytes(std::string_view data, const std::string& name,
                                               const std::optional<storage::RecordIndex>& index);

  /// Copies `name` to `destination` (plus `destination`.idx when indexed).
  /// Tries each replica in turn, retrying each once. A failed attempt
  /// leaves no partial file behind.
  std::uint64_t download(const std::string& name, const std::filesystem::path& destination);

  storage::FileInfo info(const std::string& name);
  /// Records [first, first+count) from the nearest replica that answers.
  storage::RecordBatch read_records(const std::string& name, std::uint64_t first, std::uint64_t count);
  std::vector<transport::Address> members();

  const transport::Address& self() const noexcept { return channels_.local(); }
  const transport::Address& entry_server() const noexcept { return entry_; }
  transport::ChannelCache& channels() noexcept { return channels_; }
  const std::optional<transport::LinkProfile>& profile() const noexcept { return profile_; }

 private:
  std::vector<transport::Address> resolved(const std::string& name);
  void download_from(const transport::Address& holder, const std::string& name, const std::filesystem::path& dest,
                     std::uint64_t& bytes);

  transport::ChannelCache channels_;
  transport::Address entry_;
  std::optional<transport::LinkProfile> profile_;
  std::mutex mu_;
  std::map<std::string, std::vector<transport::Address>> cache_;
};

}  // namespace sector::client
