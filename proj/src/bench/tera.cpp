#include "sector/bench/tera.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <map>
#include <numeric>
#include <random>

#include "sector/bytes.hpp"
#include "sector/client/session.hpp"
#include "sector/error.hpp"
#include "sector/storage/transfer.hpp"

namespace sector::bench {

using sphere::Emitter;

std::string teragen(std::uint64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string out(n * kRecordSize, '\0');
  for (std::size_t off = 0; off < out.size(); off += 8) {
    auto v = rng();
    std::memcpy(out.data() + off, &v, std::min<std::size_t>(8, out.size() - off));
  }
  return out;
}

storage::RecordIndex tera_index(std::uint64_t n) { return storage::RecordIndex::uniform(n, kRecordSize); }

void teragen_file(std::uint64_t n, std::uint64_t seed, const std::filesystem::path& path) {
  auto data = teragen(n, seed);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) fail(ErrorCode::internal, "cannot write " + path.string());
  tera_index(n).save(path.string() + std::string(storage::kIndexSuffix));
}

bool key_less(std::string_view a, std::string_view b) {
  return std::memcmp(a.data(), b.data(), kKeySize) < 0;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void MultisetChecksum::add(std::string_view record) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : record) h = (h ^ c) * 0x100000001b3ULL;
  h = mix(h ^ record.size());
  ++count;
  sum += h;
  sum_sq += mix(h);
}

std::string encode_boundaries(const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (k.size() != kKeySize) fail(ErrorCode::invalid_argument, "boundary keys must be 10 bytes");
    out += k;
  }
  return out;
}

std::vector<std::string> decode_boundaries(std::string_view params) {
  if (params.size() % kKeySize) fail(ErrorCode::encoding, "boundary list length not a multiple of the key size");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < params.size(); i += kKeySize) out.emplace_back(params.substr(i, kKeySize));
  return out;
}

std::size_t bucket_of(std::string_view key, const std::vector<std::string>& boundaries) {
  return static_cast<std::size_t>(
      std::upper_bound(boundaries.begin(), boundaries.end(), key.substr(0, kKeySize),
                       [](std::string_view k, const std::string& b) { return key_less(k, b); }) -
      boundaries.begin());
}

std::vector<std::string> quantile_boundaries(std::vector<std::string> keys, std::size_t buckets) {
  if (buckets == 0) fail(ErrorCode::invalid_argument, "need at least one bucket");
  std::vector<std::string> out;
  if (keys.empty()) return out;
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 1; i < buckets; ++i) out.push_back(keys[i * keys.size() / buckets]);
  return out;
}

void register_operators(sphere::OperatorRegistry& registry) {
  registry.add({kPartitionOp,
                [](std::string_view rec, const std::string& params, Emitter& out) {
                  // The boundary list is tiny; decoding per record keeps the
                  // operator stateless.
                  thread_local std::string cached_params;
                  thread_local std::vector<std::string> bounds;
                  if (cached_params != params) {
                    bounds = decode_boundaries(params);
                    cached_params = params;
                  }
                  if (rec.size() < kKeySize) fail(ErrorCode::invalid_argument, "record shorter than a key");
                  out.emit(rec, bucket_of(rec, bounds));
                },
                {}});
  registry.add({kSortOp,
                {},
                [](const storage::RecordBatch& batch, const std::string&, Emitter& out) {
                  std::vector<std::string_view> recs(batch.records());
                  for (std::size_t i = 0; i < recs.size(); ++i) recs[i] = batch.record(i);
                  std::sort(recs.begin(), recs.end(), [](std::string_view a, std::string_view b) {
                    int c = std::memcmp(a.data(), b.data(), std::min({a.size(), b.size(), kKeySize}));
                    return c != 0 ? c < 0 : a < b;
                  });
                  for (auto r : recs) out.emit(r);
                }});
}

TerasortResult terasort(client::ClientSession& session, const std::vector<std::string>& inputs,
                        const TerasortOptions& options) {
  using clock = std::chrono::steady_clock;
  auto secs = [](clock::time_point a) { return std::chrono::duration<double>(clock::now() - a).count(); };
  TerasortResult result;
  auto nodes = options.nodes.empty() ? session.members() : options.nodes;

  auto t0 = clock::now();
  auto stream = sphere::resolve_stream(session, inputs);
  const auto total = stream.total_records();
  if (total == 0) return result;
  auto sample = [&session, &options, total](const sphere::StreamFile& f) {
    std::vector<std::string> keys;
    if (f.records == 0) return keys;
    auto want = std::max<std::uint64_t>(1, (options.sample_size * f.records + total - 1) / total);
    std::string last_error;
    for (const auto& holder : f.locations) {
      try {
        auto reply = session.channels().call(holder, transport::MessageKind::sample_records,
                                             ByteWriter().str(f.name).u64(want).bytes());
        ByteReader r(reply.payload);
        storage::RecordBatch b;
        b.data = r.str();
        b.index = storage::RecordIndex::decode(r.view());
        for (std::size_t i = 0; i < b.records(); ++i) keys.emplace_back(tera_key(b.record(i)));
        return keys;
      } catch (const Error& e) {
        last_error = e.what();
      }
    }
    fail(ErrorCode::transport, "cannot sample " + f.name + ": " + last_error);
  };
  std::vector<std::future<std::vector<std::string>>> samples;
  for (const auto& f : stream.files) samples.push_back(std::async(std::launch::async, sample, std::cref(f)));
  std::vector<std::string> keys;
  for (auto& s : samples) {
    auto part = s.get();
    keys.insert(keys.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  result.boundaries = quantile_boundaries(std::move(keys), nodes.size());
  result.sample_seconds = secs(t0);

  sphere::JobClient jobs(session);
  sphere::JobSpec shuffle;
  shuffle.inputs = inputs;
  shuffle.op = kPartitionOp;
  shuffle.params = encode_boundaries(result.boundaries);
  shuffle.output = {sphere::OutputMode::shuffle, nodes};
  shuffle.limits = options.limits;
  auto t1 = clock::now();
  result.shuffle_job = jobs.run(shuffle);
  result.shuffle_seconds = secs(t1);

  std::map<std::uint64_t, std::string> buckets;
  for (const auto& name : result.shuffle_job.outputs) {
    auto b = sphere::bucket_of_output(name);
    if (!buckets.emplace(b, name).second)
      fail(ErrorCode::job_failed, "bucket " + std::to_string(b) + " was split across destinations");
  }
  sphere::JobSpec sort;
  for (const auto& [b, name] : buckets) sort.inputs.push_back(name);
  sort.op = kSortOp;
  sort.output = {sphere::OutputMode::local_write, {}};
  sort.limits = options.limits;
  sort.whole_file = true;
  auto t2 = clock::now();
  result.sort_job = jobs.run(sort);
  result.sort_seconds = secs(t2);
  for (const auto& seg : result.sort_job.segments)
    for (const auto& o : seg.result.outputs) result.outputs.push_back(o);
  return result;
}

void for_each_record(client::ClientSession& session, const std::vector<std::string>& names,
                     const std::function<void(std::string_view)>& fn, std::uint64_t batch) {
  for (const auto& name : names) {
    auto info = session.info(name);
    for (std::uint64_t first = 0; first < info.records; first += batch) {
      auto b = session.read_records(name, first, std::min(batch, info.records - first));
      for (std::size_t i = 0; i < b.records(); ++i) fn(b.record(i));
    }
  }
}

SortCheck check_sorted(client::ClientSession& session, const std::vector<std::string>& names) {
  SortCheck c;
  std::string prev;
  for_each_record(session, names, [&](std::string_view rec) {
    if (!prev.empty() && key_less(rec, prev)) c.sorted = false;
    prev.assign(rec.substr(0, kKeySize));
    c.checksum.add(rec);
    ++c.records;
  });
  return c;
}

// ---- Terasplit -----------------------------------------------------------

double entropy(const std::vector<std::uint64_t>& counts) {
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  if (n == 0) fail(ErrorCode::invalid_argument, "entropy of an empty distribution");
  double h = 0;
  for (auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

double split_gain(std::uint64_t l0, std::uint64_t l1, std::uint64_t r0, std::uint64_t r1) {
  const double n = static_cast<double>(l0 + l1 + r0 + r1);
  const double parent = entropy({l0 + r0, l1 + r1});
  double children = 0;
  if (l0 + l1) children += static_cast<double>(l0 + l1) / n * entropy({l0, l1});
  if (r0 + r1) children += static_cast<double>(r0 + r1) / n * entropy({r0, r1});
  return std::clamp(parent - children, 0.0, parent);
}

Key80 key_value(std::string_view key10) {
  if (key10.size() < kKeySize) fail(ErrorCode::invalid_argument, "key shorter than 10 bytes");
  Key80 v = 0;
  for (std::size_t i = 0; i < kKeySize; ++i) v = (v << 8) | static_cast<unsigned char>(key10[i]);
  return v;
}

std::string key_hex(Key80 k) {
  std::string bytes(kKeySize, '\0');
  for (std::size_t i = kKeySize; i-- > 0; k >>= 8) bytes[i] = static_cast<char>(k & 0xff);
  return to_hex(bytes);
}

std::string SplitResult::to_line() const {
  return fmt::format(R"({{"threshold": {}, "gain": {:.12g}, "parent_entropy": {:.12g}, "left": [{}, {}], "right": [{}, {}]}})",
                     threshold ? "\"" + key_hex(*threshold) + "\"" : std::string("null"), gain, parent_entropy,
                     left[0], left[1], right[0], right[1]);
}

void TerasplitScanner::add(Key80 key, int label) {
  if (label != 0 && label != 1) fail(ErrorCode::invalid_argument, "labels must be 0 or 1");
  if (last_) {
    if (key < *last_) fail(ErrorCode::invalid_argument, "terasplit input is not sorted by key");
    if (key != *last_) boundaries_.push_back({*last_, key, totals_[0], totals_[1]});
  }
  last_ = key;
  ++totals_[static_cast<std::size_t>(label)];
  ++n_;
}

SplitResult TerasplitScanner::finish() const {
  SplitResult r;
  r.left = totals_;
  if (n_ == 0) return r;
  r.parent_entropy = entropy({totals_[0], totals_[1]});
  if (totals_[0] == 0 || totals_[1] == 0) return r;
  double best = -1;
  for (const auto& b : boundaries_) {
    const auto r0 = totals_[0] - b.left0, r1 = totals_[1] - b.left1;
    const double g = split_gain(b.left0, b.left1, r0, r1);
    if (g > best) {
      best = g;
      r.threshold = b.below + (b.above - b.below) / 2;
      r.gain = g;
      r.left = {b.left0, b.left1};
      r.right = {r0, r1};
    }
  }
  return r;
}

SplitResult terasplit(client::ClientSession& session, const std::vector<std::string>& sorted_names) {
  TerasplitScanner scan;
  for_each_record(session, sorted_names, [&](std::string_view rec) { scan.add_record(rec); });
  return scan.finish();
}

}  // namespace sector::bench
