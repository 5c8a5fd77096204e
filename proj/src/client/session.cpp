#include "sector/client/session.hpp"

#include <algorithm>
#include <fstream>

#include "sector/bytes.hpp"
#include "sector/error.hpp"
#include "sector/storage/local_store.hpp"

namespace fs = std::filesystem;

namespace sector::client {

using transport::Address;
using transport::MessageKind;

ClientSession::ClientSession(std::shared_ptr<transport::Network> network, Address self, Address entry_server,
                             std::optional<transport::LinkProfile> profile)
    : channels_(std::move(network), std::move(self)), entry_(std::move(entry_server)), profile_(std::move(profile)) {}

std::vector<Address> ClientSession::locate(const std::string& name) {
  std::vector<Address> locs;
  try {
    locs = storage::decode_addresses(channels_.call(entry_, MessageKind::lookup, ByteWriter().str(name).bytes()).payload);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::not_found) {
      std::lock_guard lk(mu_);
      cache_.erase(name);
    }
    throw;
  }
  if (profile_) {
    std::stable_sort(locs.begin(), locs.end(), [&](const Address& a, const Address& b) {
      return profile_->rtt(self(), a) < profile_->rtt(self(), b);
    });
  }
  std::lock_guard lk(mu_);
  cache_[name] = locs;
  return locs;
}

std::vector<Address> ClientSession::resolved(const std::string& name) {
  {
    std::lock_guard lk(mu_);
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
  }
  return locate(name);
}

std::vector<Address> ClientSession::upload(const fs::path& local_path, const std::string& name,
                                           const std::optional<storage::RecordIndex>& index) {
  std::error_code ec;
  auto size = fs::file_size(local_path, ec);
  if (ec) fail(ErrorCode::not_found, "cannot read " + local_path.string());
  if (index) index->validate(size);
  storage::LocalStore::check_name(name);
  auto owner = ByteReader(channels_.call(entry_, MessageKind::route, ByteWriter().str(name).bytes()).payload).str();
  storage::PutRequest put;
  put.name = name;
  put.size = size;
  put.index = index;
  put.mode = storage::WriteMode::create;
  put.source = [local_path](std::uint64_t off, std::uint64_t len) {
    std::ifstream in(local_path, std::ios::binary);
    std::string buf(len, '\0');
    in.seekg(static_cast<std::streamoff>(off));
    in.read(buf.data(), static_cast<std::streamsize>(len));
    if (static_cast<std::uint64_t>(in.gcount()) != len) fail(ErrorCode::internal, "short read from " + local_path.string());
    return buf;
  };
  storage::push_file(channels_, owner, put);
  return locate(name);
}

std::vector<Address> ClientSession::upload_bytes(std::string_view data, const std::string& name,
                                                 const std::optional<storage::RecordIndex>& index) {
  if (index) index->validate(data.size());
  storage::LocalStore::check_name(name);
  auto owner = ByteReader(channels_.call(entry_, MessageKind::route, ByteWriter().str(name).bytes()).payload).str();
  storage::PutRequest put;
  put.name = name;
  put.size = data.size();
  put.index = index;
  put.mode = storage::WriteMode::create;
  put.source = [data](std::uint64_t off, std::uint64_t len) { return std::string(data.substr(off, len)); };
  storage::push_file(channels_, owner, put);
  return locate(name);
}

void ClientSession::download_from(const Address& holder, const std::string& name, const fs::path& dest,
                                  std::uint64_t& bytes) {
  auto info = storage::remote_file_info(channels_, holder, name);
  std::ofstream out(dest, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::internal, "cannot write " + dest.string());
  for (std::uint64_t off = 0; off < info.bytes;) {
    auto n = std::min<std::uint64_t>(storage::kDefaultChunkBytes, info.bytes - off);
    auto chunk = storage::remote_read_bytes(channels_, holder, name, off, n);
    out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
    off += n;
  }
  out.close();
  if (!out) fail(ErrorCode::internal, "cannot write " + dest.string());
  auto idx_path = fs::path(dest.string() + std::string(storage::kIndexSuffix));
  if (info.indexed) {
    storage::remote_read_index(channels_, holder, name, 0, info.records).save(idx_path);
  } else {
    std::error_code ec;
    fs::remove(idx_path, ec);
  }
  bytes = info.bytes;
}

std::uint64_t ClientSession::download(const std::string& name, const fs::path& destination) {
  std::string last_error;
  for (int round = 0; round < 2; ++round) {
    auto locs = round == 0 ? resolved(name) : locate(name);
    for (const auto& holder : locs) {
      for (int attempt = 0; attempt < 2; ++attempt) {
        std::uint64_t bytes = 0;
        try {
          download_from(holder, name, destination, bytes);
          return bytes;
        } catch (const Error& e) {
          std::error_code ec;
          fs::remove(destination, ec);
          fs::remove(destination.string() + std::string(storage::kIndexSuffix), ec);
          last_error = holder + ": " + e.what();
          if (e.code() == ErrorCode::not_found) break;
        }
      }
    }
  }
  fail(ErrorCode::transport, "download of " + name + " failed on every replica (" + last_error + ")");
}

storage::FileInfo ClientSession::info(const std::string& name) {
  std::string last;
  for (const auto& holder : resolved(name)) {
    try {
      return storage::remote_file_info(channels_, holder, name);
    } catch (const Error& e) {
      last = e.what();
    }
  }
  fail(ErrorCode::transport, "no replica of " + name + " answered: " + last);
}

storage::RecordBatch ClientSession::read_records(const std::string& name, std::uint64_t first, std::uint64_t count) {
  std::string last;
  for (const auto& holder : resolved(name)) {
    try {
      return storage::remote_read_records(channels_, holder, name, first, count);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::range) throw;
      last = e.what();
    }
  }
  fail(ErrorCode::transport, "no replica of " + name + " answered: " + last);
}

std::vector<Address> ClientSession::members() {
  return storage::decode_addresses(channels_.call(entry_, MessageKind::members, "").payload);
}

}  // namespace sector::client
