#include "sector/storage/sector_node.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <future>

#include "sector/bytes.hpp"
#include "sector/error.hpp"

namespace fs = std::filesystem;

namespace sector::storage {

using transport::Address;
using transport::Message;
using transport::MessageKind;

namespace {

Message reply(std::string payload = {}) { return Message{MessageKind::reply, 0, std::move(payload)}; }

std::string encode_batch(const RecordBatch& b) {
  ByteWriter w;
  w.str(b.data).str(b.index.encode());
  return std::move(w).take();
}

}  // namespace

SectorNode::SectorNode(NodeOptions options, std::shared_ptr<transport::Network> network, std::shared_ptr<Clock> clock)
    : options_(std::move(options)),
      network_(std::move(network)),
      clock_(std::move(clock)),
      store_(options_.data_dir),
      channels_(network_, options_.address),
      rng_(options_.seed),
      last_check_(clock_->now()) {
  options_.replica.validate();
  for (const auto& name : store_.list()) origins_[name] = options_.address;
}

SectorNode::~SectorNode() { stop(); }

Address SectorNode::start() {
  auto bound = network_->listen(options_.address, [this](const transport::Request& r) { return handle(r); });
  listening_ = true;
  return bound;
}

void SectorNode::stop() {
  {
    std::lock_guard lk(timer_mu_);
    timer_stop_ = true;
  }
  timer_cv_.notify_all();
  if (timer_.joinable()) timer_.join();
  if (listening_) {
    network_->unlisten(options_.address);
    listening_ = false;
  }
}

void SectorNode::add_service(MessageKind kind, transport::Handler handler) {
  if (listening_) fail(ErrorCode::internal, "services must be added before start()");
  services_[kind] = std::move(handler);
}

void SectorNode::announce() {
  for (const auto& name : store_.list()) {
    try {
      register_location(name, options_.address);
    } catch (const Error& e) {
      spdlog::warn("{}: could not announce {}: {}", options_.address, name, e.what());
    }
  }
}

bool SectorNode::may_write(const Address& peer) const {
  if (options_.acl.allows(peer)) return true;
  auto host = transport::host_of(peer);
  for (const auto& m : ring()->members())
    if (transport::host_of(m.address) == host) return true;
  return false;
}

Address SectorNode::origin_of(const std::string& name) const {
  std::lock_guard lk(meta_mu_);
  auto it = origins_.find(name);
  return it == origins_.end() ? options_.address : it->second;
}

// ---- location records -------------------------------------------------

void SectorNode::register_location(const std::string& name, const Address& holder) {
  auto ring = this->ring();
  if (ring->empty() || ring->owner_of(name).address == options_.address) {
    std::lock_guard lk(meta_mu_);
    records_[name].insert(holder);
    return;
  }
  ByteWriter w;
  w.str(name).str(holder);
  channels_.call(ring->owner_of(name).address, MessageKind::register_location, std::move(w).take());
}

// The data is stored either way; if the responsible node is unreachable,
// lookups find this copy through the holder sweep.
void SectorNode::register_location_or_warn(const std::string& name) {
  try {
    register_location(name, options_.address);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::transport && e.code() != ErrorCode::timeout) throw;
    spdlog::warn("{}: could not register {}: {}", options_.address, name, e.what());
  }
}

std::vector<Address> SectorNode::local_record(const std::string& name) const {
  std::set<Address> out;
  {
    std::lock_guard lk(meta_mu_);
    auto it = records_.find(name);
    if (it != records_.end()) out = it->second;
  }
  if (store_.contains(name)) out.insert(options_.address);
  return {out.begin(), out.end()};
}

std::vector<Address> SectorNode::lookup(const std::string& name) {
  LocalStore::check_name(name);
  auto ring = this->ring();
  if (ring->empty()) {
    auto local = local_record(name);
    if (local.empty()) fail(ErrorCode::not_found, "no replica of " + name);
    return local;
  }
  const auto owner = ring->owner_of(name).address;
  try {
    std::vector<Address> locs;
    if (owner == options_.address) {
      locs = local_record(name);
    } else {
      ByteWriter w;
      w.str(name);
      locs = decode_addresses(channels_.call(owner, MessageKind::locate_record, std::move(w).take()).payload);
    }
    if (!locs.empty()) return locs;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::not_found && e.code() != ErrorCode::transport && e.code() != ErrorCode::timeout) throw;
  }

  // The responsible node is unreachable or lost the record (e.g. after a
  // membership change): ask every member whether it holds a copy.
  std::vector<std::future<std::optional<Address>>> probes;
  for (const auto& m : ring->members()) {
    if (m.address == owner) continue;
    probes.push_back(std::async(std::launch::async, [this, m, name]() -> std::optional<Address> {
      if (m.address == options_.address) return store_.contains(name) ? std::optional(m.address) : std::nullopt;
      try {
        ByteWriter w;
        w.str(name);
        auto r = channels_.call(m.address, MessageKind::holds_local, std::move(w).take());
        if (ByteReader(r.payload).boolean()) return m.address;
      } catch (const Error&) {
      }
      return std::nullopt;
    }));
  }
  std::vector<Address> found;
  for (auto& p : probes)
    if (auto a = p.get()) found.push_back(*a);
  if (found.empty()) fail(ErrorCode::not_found, "no replica of " + name);
  std::sort(found.begin(), found.end());
  for (const auto& a : found) {
    try {
      register_location(name, a);
    } catch (const Error&) {
      break;  // owner still down
    }
  }
  return found;
}

// ---- reads --------------------------------------------------------------

RecordBatch SectorNode::read_records(const std::string& name, std::uint64_t first, std::uint64_t count) {
  if (store_.contains(name)) return store_.read_records(name, first, count);
  auto locs = lookup(name);
  std::optional<Error> last;
  for (const auto& loc : locs) {
    if (loc == options_.address) continue;
    try {
      return remote_read_records(channels_, loc, name, first, count, options_.chunk_bytes);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::range) throw;
      last = e;
    }
  }
  if (last) throw *last;
  fail(ErrorCode::not_found, "no reachable replica of " + name);
}

FileInfo SectorNode::file_info(const std::string& name) {
  if (store_.contains(name)) {
    auto i = store_.info(name);
    return FileInfo{name, i.indexed, i.records, i.bytes, origin_of(name), options_.address};
  }
  std::optional<Error> last;
  for (const auto& loc : lookup(name)) {
    try {
      return remote_file_info(channels_, loc, name);
    } catch (const Error& e) {
      last = e;
    }
  }
  if (last) throw *last;
  fail(ErrorCode::not_found, "no reachable replica of " + name);
}

RecordBatch SectorNode::sample_records(const std::string& name, std::uint64_t count) const {
  auto info = store_.info(name);
  RecordBatch out;
  if (info.records == 0 || count == 0) return out;
  count = std::min(count, info.records);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto ordinal = i * info.records / count;
    auto rec = store_.read_records(name, ordinal, 1);
    out.index.push_back({out.data.size(), rec.data.size()});
    out.data += rec.data;
  }
  return out;
}

// ---- writes -------------------------------------------------------------

std::vector<Address> SectorNode::store_file(const Address& client, const std::string& name, std::string_view data,
                                            const std::optional<RecordIndex>& index) {
  if (!may_write(client)) fail(ErrorCode::access_denied, client + " is not in the ACL of " + options_.address);
  store_.write(name, data, index, WriteMode::create);
  {
    std::lock_guard lk(meta_mu_);
    origins_[name] = options_.address;
  }
  register_location_or_warn(name);
  return lookup(name);
}

void SectorNode::stage_chunk(const Address& peer, std::string_view payload) {
  if (!may_write(peer)) fail(ErrorCode::access_denied, peer + " is not in the ACL of " + options_.address);
  ByteReader r(payload);
  auto token = r.u64();
  auto data = r.view();
  auto idx = r.view();
  std::lock_guard lk(staging_mu_);
  auto it = staging_.find(token);
  if (it == staging_.end()) {
    Staging s;
    s.data = store_.staging_dir() / ("put-" + std::to_string(token));
    s.index = store_.staging_dir() / ("put-" + std::to_string(token) + ".idx");
    std::ofstream(s.data, std::ios::binary | std::ios::trunc);
    std::ofstream(s.index, std::ios::binary | std::ios::trunc);
    it = staging_.emplace(token, s).first;
  }
  std::ofstream d(it->second.data, std::ios::binary | std::ios::app);
  d.write(data.data(), static_cast<std::streamsize>(data.size()));
  std::ofstream i(it->second.index, std::ios::binary | std::ios::app);
  i.write(idx.data(), static_cast<std::streamsize>(idx.size()));
  if (!d || !i) fail(ErrorCode::internal, "staging write failed on " + options_.address);
}

void SectorNode::commit_put(const Address& peer, std::string_view payload) {
  if (!may_write(peer)) fail(ErrorCode::access_denied, peer + " is not in the ACL of " + options_.address);
  ByteReader r(payload);
  auto token = r.u64();
  auto name = r.str();
  auto mode = static_cast<WriteMode>(r.u8());
  bool has_index = r.boolean();
  auto origin = r.str();
  auto dedupe_key = r.str();
  LocalStore::check_name(name);
  if (!dedupe_key.empty()) {
    std::lock_guard lk(meta_mu_);
    if (!applied_keys_.insert(dedupe_key).second) {
      discard_staging(token);
      return;
    }
  }

  Staging s;
  {
    std::lock_guard lk(staging_mu_);
    auto it = staging_.find(token);
    if (it == staging_.end()) {
      s.data = store_.staging_dir() / ("put-" + std::to_string(token));
      s.index = store_.staging_dir() / ("put-" + std::to_string(token) + ".idx");
      std::ofstream(s.data, std::ios::binary | std::ios::trunc);
      std::ofstream(s.index, std::ios::binary | std::ios::trunc);
    } else {
      s = it->second;
      staging_.erase(it);
    }
  }
  try {
    store_.commit_staged(name, s.data, has_index ? std::optional(s.index) : std::nullopt, mode);
  } catch (...) {
    std::error_code ec;
    fs::remove(s.data, ec);
    fs::remove(s.index, ec);
    if (!dedupe_key.empty()) {
      std::lock_guard lk(meta_mu_);
      applied_keys_.erase(dedupe_key);
    }
    throw;
  }
  std::error_code ec;
  fs::remove(s.index, ec);
  {
    std::lock_guard lk(meta_mu_);
    if (mode != WriteMode::append || !origins_.count(name)) origins_[name] = origin.empty() ? options_.address : origin;
  }
  register_location_or_warn(name);
}

void SectorNode::discard_staging(std::uint64_t token) {
  std::lock_guard lk(staging_mu_);
  auto it = staging_.find(token);
  if (it == staging_.end()) return;
  std::error_code ec;
  fs::remove(it->second.data, ec);
  fs::remove(it->second.index, ec);
  staging_.erase(it);
}

// ---- replication --------------------------------------------------------

ReplicationReport SectorNode::replicate_check() {
  ReplicationReport report;
  auto ring = this->ring();
  const auto target = static_cast<std::size_t>(options_.replica.target_count);
  for (const auto& name : store_.list()) {
    if (origin_of(name) != options_.address) continue;
    std::vector<Address> holders;
    try {
      holders = lookup(name);
    } catch (const Error& e) {
      report.warnings.push_back(name + ": lookup failed: " + e.what());
      continue;
    }
    if (holders.size() >= target) continue;
    std::vector<Address> eligible;
    for (const auto& m : ring->members())
      if (std::find(holders.begin(), holders.end(), m.address) == holders.end()) eligible.push_back(m.address);
    const auto need = target - holders.size();
    std::vector<Address> chosen;
    {
      std::lock_guard lk(rng_mu_);
      std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen), need, rng_);
      std::shuffle(chosen.begin(), chosen.end(), rng_);
    }
    if (chosen.size() < need) {
      auto msg = name + ": only " + std::to_string(chosen.size()) + " of " + std::to_string(need) +
                 " additional replicas possible";
      spdlog::warn("{}: {}", options_.address, msg);
      report.warnings.push_back(msg);
    }
    auto info = store_.info(name);
    std::optional<RecordIndex> index;
    if (info.indexed) index = store_.read_index(name, 0, info.records);
    for (const auto& target_node : chosen) {
      PutRequest put;
      put.name = name;
      put.size = info.bytes;
      put.source = [this, name](std::uint64_t off, std::uint64_t len) { return store_.read_bytes(name, off, len); };
      put.index = index;
      put.mode = WriteMode::replace;
      put.origin = options_.address;
      try {
        push_file(channels_, target_node, put, options_.chunk_bytes);
        report.actions.push_back({name, options_.address, target_node});
      } catch (const Error& e) {
        auto msg = name + ": replica to " + target_node + " failed: " + e.what();
        spdlog::warn("{}: {}", options_.address, msg);
        report.warnings.push_back(msg);
      }
    }
  }
  return report;
}

std::optional<ReplicationReport> SectorNode::run_due_replication() {
  {
    std::lock_guard lk(repl_mu_);
    auto now = clock_->now();
    if (now - last_check_ < options_.replica.check_interval) return std::nullopt;
    last_check_ = now;
  }
  return replicate_check();
}

void SectorNode::start_replication_timer(std::chrono::milliseconds poll) {
  timer_ = std::thread([this, poll] {
    std::unique_lock lk(timer_mu_);
    while (!timer_cv_.wait_for(lk, poll, [&] { return timer_stop_; })) {
      lk.unlock();
      try {
        run_due_replication();
      } catch (const std::exception& e) {
        spdlog::warn("{}: replication cycle failed: {}", options_.address, e.what());
      }
      lk.lock();
    }
  });
}

// ---- request dispatch ---------------------------------------------------

Message SectorNode::handle(const transport::Request& req) {
  const auto& m = req.message;
  ByteReader r(m.payload);
  switch (m.kind) {
    case MessageKind::ping:
      return Message{MessageKind::pong, 0, m.payload};
    case MessageKind::route: {
      auto ring = this->ring();
      if (ring->empty()) return reply(ByteWriter().str(options_.address).bytes());
      return reply(ByteWriter().str(ring->owner_of(r.str()).address).bytes());
    }
    case MessageKind::lookup:
      return reply(encode_addresses(lookup(r.str())));
    case MessageKind::locate_record: {
      auto locs = local_record(r.str());
      if (locs.empty()) fail(ErrorCode::not_found, "no location record here");
      return reply(encode_addresses(locs));
    }
    case MessageKind::register_location: {
      auto name = r.str();
      auto holder = r.str();
      std::lock_guard lk(meta_mu_);
      records_[name].insert(holder);
      return reply();
    }
    case MessageKind::holds_local:
      return reply(ByteWriter().boolean(store_.contains(r.str())).bytes());
    case MessageKind::file_info: {
      auto name = r.str();
      auto i = store_.info(name);
      return reply(encode_file_info(FileInfo{name, i.indexed, i.records, i.bytes, origin_of(name), options_.address}));
    }
    case MessageKind::read_records: {
      auto name = r.str();
      auto first = r.u64();
      auto count = r.u64();
      return reply(encode_batch(store_.read_records(name, first, count)));
    }
    case MessageKind::read_bytes: {
      auto name = r.str();
      auto off = r.u64();
      auto len = r.u64();
      if (len > transport::kDefaultMaxPayload) fail(ErrorCode::range, "read_bytes request too large");
      return reply(store_.read_bytes(name, off, len));
    }
    case MessageKind::read_index: {
      auto name = r.str();
      auto first = r.u64();
      auto count = r.u64();
      return reply(store_.read_index(name, first, count).encode());
    }
    case MessageKind::sample_records: {
      auto name = r.str();
      auto count = r.u64();
      return reply(encode_batch(sample_records(name, count)));
    }
    case MessageKind::members: {
      std::vector<Address> addrs;
      for (const auto& mem : ring()->members()) addrs.push_back(mem.address);
      return reply(encode_addresses(addrs));
    }
    case MessageKind::put_chunk:
      stage_chunk(req.peer, m.payload);
      return reply();
    case MessageKind::put_commit:
      commit_put(req.peer, m.payload);
      return reply();
    case MessageKind::replicate_now: {
      auto rep = replicate_check();
      ByteWriter w;
      w.u32(static_cast<std::uint32_t>(rep.actions.size()));
      for (const auto& a : rep.actions) w.str(a.name).str(a.target);
      w.strings(rep.warnings);
      return reply(std::move(w).take());
    }
    default:
      break;
  }
  auto it = services_.find(m.kind);
  if (it == services_.end())
    fail(ErrorCode::invalid_argument, "unsupported message kind " + std::to_string(static_cast<int>(m.kind)));
  return it->second(req);
}

}  // namespace sector::storage
