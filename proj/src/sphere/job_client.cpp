#include "sector/sphere/job.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "sector/bytes.hpp"
#include "sector/client/session.hpp"
#include "sector/sphere/scheduler.hpp"

namespace sector::sphere {

using transport::Address;
using transport::MessageKind;

std::vector<const SegmentReport*> JobReport::failed() const {
  std::vector<const SegmentReport*> out;
  for (const auto& s : segments)
    if (!s.ok) out.push_back(&s);
  return out;
}

namespace {

std::string new_job_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lk(mu);
  return "job-" + to_hex(ByteWriter().u64(rng()).bytes());
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Completion {
  std::size_t spe = 0;
  std::size_t ordinal = 0;
  bool ok = false;
  ErrorCode code = ErrorCode::internal;
  std::string error;
  SegmentResult result;
  std::vector<std::uint64_t> acks;
  double seconds = 0;
};

bool node_unreachable(ErrorCode c) { return c == ErrorCode::transport || c == ErrorCode::timeout; }

}  // namespace

JobReport JobClient::run(const JobSpec& spec, SegmentCallback on_segment) {
  const auto t0 = std::chrono::steady_clock::now();
  JobReport report;
  report.id = spec.id.empty() ? new_job_id() : spec.id;
  spec.output.validate();
  spec.limits.validate();
  auto& channels = session_.channels();

  auto nodes = spec.nodes.empty() ? session_.members() : spec.nodes;
  if (nodes.empty()) fail(ErrorCode::invalid_argument, "no SPE hosts");

  // Start the job everywhere; an unknown operator fails here.
  ByteWriter start;
  start.str(report.id).str(spec.op).str(spec.params).str(encode_output_spec(spec.output));
  const auto start_payload = std::move(start).take();
  // input resolution overlaps the start round trips
  auto resolving = std::async(std::launch::async, [&] { return resolve_stream(session_, spec.inputs); });
  std::vector<std::future<std::uint32_t>> starts;
  for (const auto& n : nodes)
    starts.push_back(std::async(std::launch::async, [&, n] {
      return ByteReader(channels.call(n, MessageKind::spe_start, start_payload).payload).u32();
    }));
  std::vector<Address> spe_nodes;
  std::optional<Error> start_error;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    try {
      auto slots = starts[i].get();
      for (std::uint32_t s = 0; s < slots; ++s) spe_nodes.push_back(nodes[i]);
    } catch (const Error& e) {
      if (!node_unreachable(e.code())) {
        if (!start_error) start_error = e;
        continue;
      }
      report.warnings.push_back("SPE host " + nodes[i] + " unreachable: " + e.what());
    }
  }
  auto stop_all = [&] {
    std::vector<std::future<void>> stops;
    for (const auto& n : nodes)
      stops.push_back(std::async(std::launch::async, [&, n] {
        try {
          channels.call(n, MessageKind::spe_stop, ByteWriter().str(report.id).bytes());
        } catch (const Error&) {
        }
      }));
  };
  if (start_error) {
    resolving.wait();
    stop_all();
    throw *start_error;
  }
  if (spe_nodes.empty()) {
    resolving.wait();
    fail(ErrorCode::transport, "no SPE host reachable");
  }
  try {
    report.input = resolving.get();
  } catch (...) {
    stop_all();
    throw;
  }
  if (report.input.total_records() == 0) {
    stop_all();
    report.seconds = since(t0);
    return report;
  }
  auto segments = segment_stream(report.input, spe_nodes.size(), spec.limits, spec.params, spec.whole_file);
  std::map<std::string, const StreamFile*> files;
  for (const auto& f : report.input.files) files[f.name] = &f;
  std::vector<SchedSegment> sched_segments;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    sched_segments.push_back({segments[i].file, files.at(segments[i].file)->locations});
    SegmentReport sr;
    sr.ordinal = i;
    sr.segment = segments[i];
    report.segments.push_back(std::move(sr));
  }
  Scheduler sched(std::move(sched_segments), spe_nodes);

  std::mutex mu;
  std::condition_variable cv;
  std::deque<Completion> done;
  std::vector<std::thread> workers;

  auto launch = [&](std::size_t spe, std::size_t ordinal) {
    auto& sr = report.segments[ordinal];
    sr.node = spe_nodes[spe];
    sr.local = sched.is_local(ordinal, spe);
    ++sr.attempts;
    ByteWriter w;
    w.str(report.id).u64(ordinal).str(encode_segment(segments[ordinal]));
    workers.emplace_back([&, spe, ordinal, payload = std::move(w).take()] {
      Completion c;
      c.spe = spe;
      c.ordinal = ordinal;
      const auto started = std::chrono::steady_clock::now();
      try {
        auto reply = channels.call(spe_nodes[spe], MessageKind::spe_segment, payload, [&c](const transport::Message& m) {
          if (!m.payload.empty()) c.acks.push_back(ByteReader(m.payload).u64());
        });
        c.result = decode_segment_result(reply.payload);
        c.ok = true;
      } catch (const Error& e) {
        c.code = e.code();
        c.error = e.what();
      } catch (const std::exception& e) {
        c.error = e.what();
      }
      c.seconds = since(started);
      std::lock_guard lk(mu);
      done.push_back(std::move(c));
      cv.notify_one();
    });
  };

  std::vector<bool> idle(spe_nodes.size(), true);
  std::set<Address> dead;
  std::size_t finished = 0;
  while (finished < segments.size()) {
    std::vector<std::size_t> idle_ids;
    for (std::size_t s = 0; s < idle.size(); ++s)
      if (idle[s] && !dead.count(spe_nodes[s])) idle_ids.push_back(s);
    for (auto [spe, ordinal] : sched.assign(idle_ids)) {
      idle[spe] = false;
      launch(spe, ordinal);
    }
    if (sched.running() == 0) {
      // Nothing can run any more: every remaining SPE host is down.
      for (auto& sr : report.segments)
        if (!sr.ok && sr.error.empty()) sr.error = "no SPE available";
      break;
    }
    Completion c;
    {
      std::unique_lock lk(mu);
      cv.wait(lk, [&] { return !done.empty(); });
      c = std::move(done.front());
      done.pop_front();
    }
    idle[c.spe] = true;
    sched.release(c.spe);
    auto& sr = report.segments[c.ordinal];
    sr.acks = std::move(c.acks);
    sr.seconds += c.seconds;
    report.node_seconds[spe_nodes[c.spe]] += c.seconds;
    if (c.ok) {
      sr.ok = true;
      sr.error.clear();
      sr.result = std::move(c.result);
      for (const auto& w : sr.result.warnings) report.warnings.push_back(w);
      ++finished;
      if (on_segment) on_segment(sr);
      continue;
    }
    sr.error = c.error;
    if (node_unreachable(c.code)) dead.insert(spe_nodes[c.spe]);
    if (sr.attempts < 2) {
      spdlog::warn("job {}: segment {} failed on {}, retrying elsewhere: {}", report.id, c.ordinal,
                   spe_nodes[c.spe], c.error);
      sched.requeue(c.ordinal, spe_nodes[c.spe]);
    } else {
      ++finished;
      if (on_segment) on_segment(sr);
    }
  }
  for (auto& t : workers) t.join();
  stop_all();

  std::set<std::string> outs;
  for (const auto& sr : report.segments)
    for (const auto& o : sr.result.outputs) outs.insert(o);
  report.outputs.assign(outs.begin(), outs.end());
  report.seconds = since(t0);

  auto failed = report.failed();
  if (!failed.empty()) {
    std::string msg = "job " + report.id + " failed segments:";
    for (const auto* sr : failed)
      msg += " #" + std::to_string(sr->ordinal) + " " + sr->segment.file + "[" + std::to_string(sr->segment.offset) +
             "+" + std::to_string(sr->segment.rows) + "] (" + sr->error + ");";
    throw JobError(msg, std::move(report));
  }
  return report;
}

}  // namespace sector::sphere
