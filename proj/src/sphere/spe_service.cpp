#include "sector/sphere/spe_service.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <condition_variable>
#include <future>
#include <thread>

#include "sector/bytes.hpp"
#include "sector/error.hpp"
#include "sector/storage/transfer.hpp"

namespace sector::sphere {

using transport::Address;
using transport::Message;
using transport::MessageKind;

namespace {

struct Buffer {
  std::string data;
  storage::RecordIndex index;

  void add(std::string_view rec) {
    index.push_back({data.size(), rec.size()});
    data.append(rec);
  }
};

class BufferEmitter final : public Emitter {
 public:
  explicit BufferEmitter(bool shuffle) : shuffle_(shuffle) {}

  void emit(std::string_view record, std::optional<std::uint64_t> bucket) override {
    if (shuffle_) {
      if (!bucket) fail(ErrorCode::invalid_argument, "shuffle output record without bucket");
      buckets[*bucket].add(record);
    } else {
      single.add(record);
    }
    ++count;
  }

  bool shuffle_;
  Buffer single;
  std::map<std::uint64_t, Buffer> buckets;
  std::uint64_t count = 0;
};

// Sends an empty progress frame every second while a long operator runs,
// so the caller's idle timeout does not expire.
class Heartbeat {
 public:
  explicit Heartbeat(std::function<void(Message)> notify)
      : thread_([this, notify = std::move(notify)](std::stop_token st) {
          std::mutex m;
          std::unique_lock lk(m);
          while (!cv_.wait_for(lk, st, std::chrono::seconds(1), [&st] { return st.stop_requested(); }))
            notify(Message{MessageKind::progress, 0, {}});
        }) {}

 private:
  std::condition_variable_any cv_;
  std::jthread thread_;
};

Message reply(std::string payload = {}) { return Message{MessageKind::reply, 0, std::move(payload)}; }

std::string describe(const DataSegment& s) {
  return s.file + "[" + std::to_string(s.offset) + "+" + std::to_string(s.rows) + "]";
}

}  // namespace

std::string encode_segment_result(const SegmentResult& r) {
  ByteWriter w;
  w.u64(r.records_in).u64(r.records_out).strings(r.outputs).strings(r.warnings);
  return std::move(w).take();
}

SegmentResult decode_segment_result(std::string_view payload) {
  ByteReader rd(payload);
  SegmentResult r;
  r.records_in = rd.u64();
  r.records_out = rd.u64();
  r.outputs = rd.strings();
  r.warnings = rd.strings();
  return r;
}

std::string segment_output_name(const std::string& job_id, std::uint64_t segment) {
  return job_id + "/" + std::to_string(segment) + ".dat";
}

std::string bucket_output_name(const std::string& job_id, std::uint64_t bucket) {
  return job_id + "/b" + std::to_string(bucket) + ".dat";
}

std::uint64_t bucket_of_output(const std::string& name) {
  auto slash = name.rfind('/');
  if (slash == std::string::npos || slash + 2 >= name.size() || name[slash + 1] != 'b')
    fail(ErrorCode::invalid_argument, "not a bucket output: " + name);
  return std::stoull(name.substr(slash + 2));
}

SpeService::SpeService(storage::SectorNode& node, std::shared_ptr<const OperatorRegistry> registry, std::size_t slots)
    : node_(node), registry_(std::move(registry)), slots_(slots) {
  if (slots_ == 0) fail(ErrorCode::invalid_argument, "a node needs at least one SPE");
}

void SpeService::install() {
  node_.add_service(MessageKind::spe_start, [this](const transport::Request& r) { return start_job(r); });
  node_.add_service(MessageKind::spe_segment, [this](const transport::Request& r) { return run_segment(r); });
  node_.add_service(MessageKind::spe_stop, [this](const transport::Request& r) { return stop_job(r); });
}

Message SpeService::start_job(const transport::Request& req) {
  ByteReader r(req.message.payload);
  auto id = r.str();
  Job job;
  job.op = registry_->find(r.str());
  job.params = r.str();
  job.output = decode_output_spec(r.str());
  job.output.validate();
  std::lock_guard lk(mu_);
  jobs_[id] = std::move(job);
  return reply(ByteWriter().u32(static_cast<std::uint32_t>(slots_)).bytes());
}

Message SpeService::stop_job(const transport::Request& req) {
  ByteReader r(req.message.payload);
  std::lock_guard lk(mu_);
  jobs_.erase(r.str());
  return reply();
}

Message SpeService::run_segment(const transport::Request& req) {
  ByteReader r(req.message.payload);
  auto id = r.str();
  auto ordinal = r.u64();
  auto seg = decode_segment(r.str());
  Job job;
  {
    std::lock_guard lk(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) fail(ErrorCode::not_found, "job " + id + " not started on " + node_.address());
    if (active_ >= slots_) fail(ErrorCode::busy, "all SPEs busy on " + node_.address());
    job = it->second;
    ++active_;
  }
  struct Slot {
    SpeService* s;
    ~Slot() {
      std::lock_guard lk(s->mu_);
      --s->active_;
    }
  } slot{this};
  auto ack = [&](std::uint64_t n) { req.notify(Message{MessageKind::progress, 0, ByteWriter().u64(n).bytes()}); };
  Heartbeat beat(req.notify);
  try {
    return reply(encode_segment_result(process(id, job, ordinal, seg, ack)));
  } catch (const Error& e) {
    // A peer this SPE depends on failed; this node itself is fine.
    if (e.code() == ErrorCode::transport || e.code() == ErrorCode::timeout)
      fail(ErrorCode::job_failed, "segment " + describe(seg) + " on " + node_.address() + ": " + e.what());
    throw;
  }
}

SegmentResult SpeService::process(const std::string& job_id, const Job& job, std::uint64_t ordinal,
                                  const DataSegment& seg, const std::function<void(std::uint64_t)>& ack) {
  SegmentResult result;
  auto batch = node_.read_records(seg.file, seg.offset, seg.rows);
  result.records_in = batch.records();
  const bool shuffle = job.output.mode == OutputMode::shuffle;
  BufferEmitter out(shuffle);
  if (job.op.per_segment) {
    try {
      job.op.per_segment(batch, job.params, out);
    } catch (const std::exception& e) {
      fail(ErrorCode::job_failed, "segment " + describe(seg) + " failed: " + e.what());
    }
    ack(batch.records());
  } else {
    const std::uint64_t every = std::max<std::uint64_t>(1, batch.records() / 10);
    for (std::size_t i = 0; i < batch.records(); ++i) {
      try {
        job.op.per_record(batch.record(i), job.params, out);
      } catch (const std::exception& e) {
        fail(ErrorCode::job_failed,
             "segment " + describe(seg) + " failed at record " + std::to_string(seg.offset + i) + ": " + e.what());
      }
      if ((i + 1) % every == 0 || i + 1 == batch.records()) ack(i + 1);
    }
  }
  batch = {};
  result.records_out = out.count;

  auto& channels = node_.channels();
  const auto chunk = node_.options().chunk_bytes;
  auto push = [&](const Address& dest, const std::string& name, const Buffer& buf, storage::WriteMode mode,
                  const std::string& dedupe) {
    storage::PutRequest put;
    put.name = name;
    put.size = buf.data.size();
    put.source = [&buf](std::uint64_t off, std::uint64_t len) { return buf.data.substr(off, len); };
    put.index = buf.index;
    put.mode = mode;
    put.dedupe_key = dedupe;
    storage::push_file(channels, dest, put, chunk);
  };

  if (!shuffle) {
    if (out.single.index.empty()) return result;
    auto name = segment_output_name(job_id, ordinal);
    Address dest = node_.address();
    if (job.output.mode == OutputMode::return_to_origin) {
      try {
        dest = node_.file_info(seg.file).origin;
        push(dest, name, out.single, storage::WriteMode::replace, {});
        result.outputs.push_back(name);
        return result;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::transport && e.code() != ErrorCode::timeout) throw;
        result.warnings.push_back("origin " + dest + " unreachable, wrote " + name + " locally");
        dest = node_.address();
      }
    }
    push(dest, name, out.single, storage::WriteMode::replace, {});
    result.outputs.push_back(name);
    return result;
  }

  const auto& dests = job.output.destinations;
  struct Pushed {
    std::string name;
    std::vector<std::string> warnings;
  };
  // buckets go to different nodes, so they are sent concurrently
  auto send = [&](std::uint64_t bucket, const Buffer& buf) {
    Pushed p;
    const auto first = shuffle_destination(bucket, dests.size());
    for (std::size_t k = 0; k < dests.size(); ++k) {
      const auto j = (first + k) % dests.size();
      // A redirected batch gets its own name so one Sector name never has
      // different contents on different nodes.
      auto name = k == 0 ? bucket_output_name(job_id, bucket)
                         : job_id + "/b" + std::to_string(bucket) + "-r" + std::to_string(j) + ".dat";
      try {
        push(dests[j], name, buf, storage::WriteMode::append, name + "#" + std::to_string(ordinal));
        p.name = name;
        return p;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::transport && e.code() != ErrorCode::timeout) throw;
        auto msg = "bucket " + std::to_string(bucket) + ": destination " + dests[j] + " unreachable";
        spdlog::warn("{}: {}", node_.address(), msg);
        p.warnings.push_back(msg);
      }
    }
    fail(ErrorCode::transport, "no shuffle destination reachable for bucket " + std::to_string(bucket));
  };
  std::vector<std::future<Pushed>> sends;
  for (const auto& [bucket, buf] : out.buckets) sends.push_back(std::async(std::launch::async, send, bucket, std::cref(buf)));
  std::exception_ptr first_error;
  for (auto& f : sends) {
    try {
      auto p = f.get();
      result.warnings.insert(result.warnings.end(), p.warnings.begin(), p.warnings.end());
      result.outputs.push_back(std::move(p.name));
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return result;
}

}  // namespace sector::sphere
