#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "sector/bytes.hpp"
#include "sector/cluster/in_process.hpp"
#include "sector/sphere/job.hpp"
#include "sector/sphere/scheduler.hpp"
#include "sector/sphere/stream.hpp"
#include "test_support.hpp"

using namespace sector;
using namespace sector::sphere;
using sector::testutil::TempDir;

namespace {

Stream make_stream(std::vector<std::pair<std::uint64_t, std::uint64_t>> files) {  // (records, bytes)
  Stream s;
  for (std::size_t i = 0; i < files.size(); ++i)
    s.files.push_back({"f" + std::to_string(i), files[i].first, files[i].second, true, {}});
  return s;
}

// Covers [0, records) of every file exactly once, segments within one file.
void expect_tiling(const Stream& s, const std::vector<DataSegment>& segs) {
  std::map<std::string, std::vector<int>> cover;
  for (const auto& f : s.files) cover[f.name].assign(f.records, 0);
  for (const auto& g : segs) {
    ASSERT_GE(g.rows, 1u);
    auto& c = cover.at(g.file);
    ASSERT_LE(g.offset + g.rows, c.size());
    for (auto i = g.offset; i < g.offset + g.rows; ++i) ++c[i];
  }
  for (const auto& [name, c] : cover)
    for (std::size_t i = 0; i < c.size(); ++i) ASSERT_EQ(c[i], 1) << name << " record " << i;
}

std::shared_ptr<OperatorRegistry> registry_with_extras() {
  auto reg = std::make_shared<OperatorRegistry>();
  register_builtin_operators(*reg);
  reg->add({"first-byte-bucket",
            [](std::string_view rec, const std::string&, Emitter& out) {
              out.emit(rec, static_cast<std::uint8_t>(rec.empty() ? 0 : rec[0]));
            },
            {}});
  reg->add({"drop-all", [](std::string_view, const std::string&, Emitter&) {}, {}});
  reg->add({"reverse-segment",
            {},
            [](const storage::RecordBatch& b, const std::string&, Emitter& out) {
              for (std::size_t i = b.records(); i-- > 0;) out.emit(b.record(i));
            }});
  return reg;
}

std::multiset<std::string> records_of(client::ClientSession& s, const std::vector<std::string>& names,
                                      cluster::InProcessCluster& c) {
  std::multiset<std::string> out;
  for (const auto& n : names) {
    auto info = s.info(n);
    auto batch = c.node(0).read_records(n, 0, info.records);
    for (std::size_t i = 0; i < batch.records(); ++i) out.emplace(batch.record(i));
  }
  return out;
}

struct Fixture {
  explicit Fixture(std::size_t nodes, int replicas = 1, std::size_t spes = 1) {
    auto o = cluster::InProcessOptions::numbered(nodes, dir.path());
    o.replica_target = replicas;
    o.spes_per_node = spes;
    c = std::make_unique<cluster::InProcessCluster>(o, registry_with_extras());
  }

  // n records "name:i:" padded to varying sizes.
  std::multiset<std::string> upload(const std::string& name, std::size_t n, std::size_t base_size = 20) {
    std::string data;
    storage::RecordIndex idx;
    std::multiset<std::string> recs;
    for (std::size_t i = 0; i < n; ++i) {
      auto r = name + ":" + std::to_string(i) + ":";
      r.resize(base_size + i % 7, static_cast<char>('a' + i % 26));
      idx.push_back({data.size(), r.size()});
      data += r;
      recs.insert(r);
    }
    c->client().upload_bytes(data, name, idx);
    return recs;
  }

  TempDir dir;
  std::unique_ptr<cluster::InProcessCluster> c;
};

}  // namespace

TEST(SegmentStream, ClampsTarget) {
  SegmentLimits lim{5, 20};
  EXPECT_DOUBLE_EQ(segment_target_bytes(60, 6, lim), 10);
  EXPECT_DOUBLE_EQ(segment_target_bytes(12, 6, lim), 5);
  EXPECT_DOUBLE_EQ(segment_target_bytes(600, 6, lim), 20);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t smin = rng() % 1000 + 1, smax = smin + rng() % 1000, S = rng() % 100000;
    std::size_t n = rng() % 50 + 1;
    double mid[] = {double(smin), double(S) / double(n), double(smax)};
    std::sort(std::begin(mid), std::end(mid));
    EXPECT_DOUBLE_EQ(segment_target_bytes(S, n, {smin, smax}), mid[1]);
  }
  EXPECT_THROW(segment_target_bytes(1, 1, {0, 5}), Error);
  EXPECT_THROW(segment_target_bytes(1, 1, {6, 5}), Error);
}

TEST(SegmentStream, SixtyUnitsOverSixSpes) {
  auto s = make_stream({{60, 60}});
  auto segs = segment_stream(s, 6, {5, 20});
  ASSERT_EQ(segs.size(), 6u);
  for (const auto& g : segs) EXPECT_EQ(g.rows, 10u);
  expect_tiling(s, segs);
}

TEST(SegmentStream, RandomStreamsTileExactly) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 300; ++t) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> files;
    int nf = 1 + rng() % 5;
    for (int f = 0; f < nf; ++f) {
      std::uint64_t recs = rng() % 500;
      files.push_back({recs, recs * (1 + rng() % 200)});
    }
    auto s = make_stream(files);
    if (s.total_records() == 0) {
      EXPECT_THROW(segment_stream(s, 3, {1, 100}), Error);
      continue;
    }
    std::uint64_t smin = 1 + rng() % 5000;
    auto segs = segment_stream(s, 1 + rng() % 8, {smin, smin + rng() % 20000}, "p");
    expect_tiling(s, segs);
    for (const auto& g : segs) EXPECT_EQ(g.params, "p");
    std::uint64_t total = 0;
    for (const auto& g : segs) total += g.rows;
    EXPECT_EQ(total, s.total_records());
  }
}

TEST(SegmentStream, WholeFileAndUnindexed) {
  auto s = make_stream({{10, 100}, {4, 400}});
  s.files[1].indexed = false;
  s.files[1].records = 1;
  auto segs = segment_stream(s, 10, {1, 10});
  EXPECT_EQ(segs.back(), (DataSegment{"f1", 0, 1, ""}));
  auto whole = segment_stream(s, 10, {1, 10}, "", true);
  ASSERT_EQ(whole.size(), 2u);
  EXPECT_EQ(whole[0].rows, 10u);
  EXPECT_THROW(segment_stream(Stream{}, 1, {1, 2}), Error);
}

TEST(Scheduler, LocalityForced) {
  Scheduler s({{"a", {"n1"}}, {"a", {"n1"}}, {"b", {"n2"}}, {"b", {"n2"}}}, {"n1", "n2"});
  auto first = s.assign({0, 1});
  ASSERT_EQ(first.size(), 2u);
  for (auto [spe, seg] : first) EXPECT_TRUE(s.is_local(seg, spe));
  s.release(0);
  s.release(1);
  for (auto [spe, seg] : s.assign({0, 1})) EXPECT_TRUE(s.is_local(seg, spe));
}

TEST(Scheduler, SameFileRunsConcurrentlyRatherThanIdle) {
  Scheduler s({{"a", {"n1"}}, {"a", {"n1"}}, {"a", {"n1"}}, {"a", {"n1"}}}, {"n1", "n2"});
  EXPECT_EQ(s.assign({0, 1}).size(), 2u);
}

TEST(Scheduler, PrefersIdleFileOverSecondSegmentOfRunningFile) {
  Scheduler s({{"a", {"n1"}}, {"a", {"n1"}}, {"b", {"n3"}}}, {"n1", "n1"});
  auto got = s.assign({0, 1});
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0], (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(got[1].second, 2u);  // remote segment of b instead of a's second segment
}

TEST(Scheduler, RequeueAvoidsFailedNode) {
  Scheduler s({{"a", {"n1"}}}, {"n1", "n2"});
  auto got = s.assign({0});
  ASSERT_EQ(got.size(), 1u);
  s.release(0);
  s.requeue(0, "n1");
  EXPECT_TRUE(s.assign({0}).empty());
  auto retry = s.assign({1});
  ASSERT_EQ(retry.size(), 1u);
  EXPECT_EQ(retry[0].first, 1u);
}

TEST(Scheduler, RandomSchedulesPassValidator) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 300; ++i) {
    auto inst = random_schedule_instance(rng);
    auto log = simulate_schedule(inst);
    auto bad = validate_schedule(inst, log);
    ASSERT_TRUE(bad.empty()) << "instance " << i << ": " << bad.front();
  }
}

TEST(Scheduler, ValidatorCatchesViolations) {
  ScheduleInstance inst{{{"a", {"n1"}}, {"b", {"n1"}}}, {"n1", "n2"}, {1, 1}};
  using K = ScheduleEvent::Kind;
  // n2 idles while segment 1 waits
  std::vector<ScheduleEvent> idle{{0, K::assign, 0, 0}, {1, K::finish, 0, 0}, {1, K::assign, 0, 1}, {2, K::finish, 0, 1}};
  EXPECT_FALSE(validate_schedule(inst, idle).empty());
  // n2 takes a remotely while n1, which holds it, stays idle
  ScheduleInstance one{{{"a", {"n1"}}}, {"n1", "n2"}, {1}};
  std::vector<ScheduleEvent> remote{{0, K::assign, 1, 0}, {1, K::finish, 1, 0}};
  EXPECT_FALSE(validate_schedule(one, remote).empty());
  // n2 takes a remote segment although a local one is pending for it
  ScheduleInstance mine{{{"a", {"n1"}}, {"b", {"n2"}}}, {"n2"}, {1, 1}};
  std::vector<ScheduleEvent> skip{{0, K::assign, 0, 0}, {1, K::finish, 0, 0}, {1, K::assign, 0, 1},
                                  {2, K::finish, 0, 1}};
  EXPECT_FALSE(validate_schedule(mine, skip).empty());
  ScheduleInstance same{{{"a", {"n1"}}, {"a", {"n1"}}, {"b", {"n1"}}}, {"n1", "n1"}, {1, 1, 1}};
  std::vector<ScheduleEvent> clash{{0, K::assign, 0, 0}, {0, K::assign, 1, 1}, {1, K::finish, 0, 0},
                                   {1, K::finish, 1, 1}, {1, K::assign, 0, 2}, {2, K::finish, 0, 2}};
  EXPECT_FALSE(validate_schedule(same, clash).empty());
  std::vector<ScheduleEvent> good{{0, K::assign, 0, 0}, {0, K::assign, 1, 2}, {1, K::finish, 0, 0},
                                  {1, K::finish, 1, 2}, {1, K::assign, 0, 1}, {2, K::finish, 0, 1}};
  EXPECT_TRUE(validate_schedule(same, good).empty());
}

TEST(OutputSpec, RoundTripAndValidation) {
  OutputSpec o{OutputMode::shuffle, {"a", "b"}};
  auto d = decode_output_spec(encode_output_spec(o));
  EXPECT_EQ(d.mode, OutputMode::shuffle);
  EXPECT_EQ(d.destinations, o.destinations);
  EXPECT_THROW((OutputSpec{OutputMode::shuffle, {}}.validate()), Error);
  EXPECT_EQ(parse_output_mode("origin"), OutputMode::return_to_origin);
  EXPECT_THROW(parse_output_mode("x"), Error);
  EXPECT_EQ(bucket_of_output(bucket_output_name("j", 17)), 17u);
  EXPECT_EQ(bucket_of_output("j/b3-r1.dat"), 3u);
}

TEST(SphereJob, IdentityOnTenRecordsOneSegment) {
  Fixture f(1);
  auto in = f.upload("ten", 10);
  JobClient jc(f.c->client());
  JobSpec spec{"", {"ten"}, "identity", "", {OutputMode::local_write, {}}, {}, false, {}};
  auto rep = jc.run(spec);
  ASSERT_EQ(rep.segments.size(), 1u);
  const auto& sr = rep.segments[0];
  EXPECT_EQ(sr.result.records_in, 10u);
  EXPECT_EQ(sr.result.records_out, 10u);
  // one ack per record for 10 rows, strictly increasing, ending at rows
  ASSERT_FALSE(sr.acks.empty());
  EXPECT_TRUE(std::is_sorted(sr.acks.begin(), sr.acks.end(), std::less_equal<>()) &&
              std::adjacent_find(sr.acks.begin(), sr.acks.end()) == sr.acks.end());
  EXPECT_EQ(sr.acks.back(), 10u);
  EXPECT_EQ(records_of(f.c->client(), rep.outputs, *f.c), in);
}

TEST(SphereJob, AcksStrictlyIncreaseToRows) {
  Fixture f(2);
  f.upload("many", 1234);
  JobClient jc(f.c->client());
  auto rep = jc.run({"", {"many"}, "identity", "", {}, {1, 1 << 20}, false, {}});
  for (const auto& sr : rep.segments) {
    ASSERT_FALSE(sr.acks.empty());
    for (std::size_t i = 1; i < sr.acks.size(); ++i) EXPECT_LT(sr.acks[i - 1], sr.acks[i]);
    EXPECT_EQ(sr.acks.back(), sr.segment.rows);
    EXPECT_LE(sr.acks.size(), 11u);
  }
}

TEST(SphereJob, IdentityPreservesMultisetAllModes) {
  Fixture f(4, 2);
  auto a = f.upload("a", 3000);
  auto b = f.upload("b", 1700, 40);
  f.c->replicate_all();
  a.merge(b);
  JobClient jc(f.c->client());
  SegmentLimits small{4000, 8000};
  for (auto mode : {OutputMode::local_write, OutputMode::return_to_origin}) {
    auto rep = jc.run({"", {"a", "b"}, "identity", "", {mode, {}}, small, false, {}});
    EXPECT_GT(rep.segments.size(), 4u);
    EXPECT_EQ(records_of(f.c->client(), rep.outputs, *f.c), a) << to_string(mode);
  }
  auto rep = jc.run({"", {"a", "b"}, "first-byte-bucket", "", {OutputMode::shuffle, f.c->addresses()}, small, false, {}});
  EXPECT_EQ(records_of(f.c->client(), rep.outputs, *f.c), a);
}

TEST(SphereJob, CountOperatorConservesRecords) {
  Fixture f(3);
  f.upload("a", 999);
  f.upload("b", 1);
  JobClient jc(f.c->client());
  auto rep = jc.run({"", {"a", "b"}, "count", "", {}, {1, 4096}, false, {}});
  std::uint64_t total = 0;
  for (const auto& r : records_of(f.c->client(), rep.outputs, *f.c)) total += ByteReader(r).u64();
  EXPECT_EQ(total, 1000u);
}

TEST(SphereJob, ShuffleRoutesByBucketModulo) {
  Fixture f(4);
  auto in = f.upload("s", 2000);
  auto dests = f.c->addresses();
  JobClient jc(f.c->client());
  auto rep = jc.run({"", {"s"}, "first-byte-bucket", "", {OutputMode::shuffle, dests}, {1, 8192}, false, {}});
  std::size_t seen = 0;
  for (const auto& name : rep.outputs) {
    auto b = bucket_of_output(name);
    auto holders = f.c->client().locate(name);
    ASSERT_EQ(holders.size(), 1u);
    EXPECT_EQ(holders[0], dests[shuffle_destination(b, dests.size())]);
    auto info = f.c->client().info(name);
    auto batch = f.c->node(0).read_records(name, 0, info.records);
    for (std::size_t i = 0; i < batch.records(); ++i, ++seen)
      EXPECT_EQ(static_cast<std::uint8_t>(batch.record(i)[0]), b);
  }
  EXPECT_EQ(seen, in.size());
}

TEST(SphereJob, ShuffleSingleDestinationAndEmptyOutput) {
  Fixture f(3);
  auto in = f.upload("s", 500);
  JobClient jc(f.c->client());
  auto rep = jc.run({"", {"s"}, "first-byte-bucket", "", {OutputMode::shuffle, {"node2"}}, {1, 2048}, false, {}});
  for (const auto& name : rep.outputs) EXPECT_EQ(f.c->client().locate(name), std::vector<transport::Address>{"node2"});
  EXPECT_EQ(records_of(f.c->client(), rep.outputs, *f.c), in);
  auto empty = jc.run({"", {"s"}, "drop-all", "", {OutputMode::shuffle, {"node2"}}, {1, 2048}, false, {}});
  EXPECT_TRUE(empty.outputs.empty());
  EXPECT_TRUE(empty.failed().empty());
}

TEST(SphereJob, ShuffleRedirectsAroundDownDestination) {
  Fixture f(3);
  auto in = f.upload("s", 300);
  auto holder = f.c->client().locate("s").front();
  transport::Address victim;
  for (const auto& a : f.c->addresses())
    if (a != holder) victim = a;
  f.c->set_down(victim, true);
  JobClient jc(f.c->client());
  JobSpec spec{"", {"s"}, "first-byte-bucket", "", {OutputMode::shuffle, f.c->addresses()}, {1, 1 << 20}, false,
               {holder}};
  auto rep = jc.run(spec);
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(records_of(f.c->client(), rep.outputs, *f.c), in);
}

TEST(SphereJob, PerSegmentOperator) {
  Fixture f(2);
  auto in = f.upload("s", 100);
  JobClient jc(f.c->client());
  auto rep = jc.run({"", {"s"}, "reverse-segment", "", {}, {}, true, {}});
  ASSERT_EQ(rep.outputs.size(), 1u);
  auto batch = f.c->node(0).read_records(rep.outputs[0], 0, 100);
  EXPECT_EQ(batch.record(0).substr(0, 5), "s:99:");
  EXPECT_EQ(records_of(f.c->client(), rep.outputs, *f.c), in);
}

TEST(SphereJob, FailingRecordIsReportedAfterRetry) {
  Fixture f(2, 2);
  f.upload("s", 10);
  f.c->replicate_all();
  JobClient jc(f.c->client());
  try {
    jc.run({"", {"s"}, "fail-at", "s:5:", {}, {}, false, {}});
    FAIL() << "job should fail";
  } catch (const JobError& e) {
    auto failed = e.report().failed();
    ASSERT_EQ(failed.size(), 1u);
    EXPECT_EQ(failed[0]->attempts, 2);
    EXPECT_NE(std::string(e.what()).find("s[0+10]"), std::string::npos) << e.what();
    EXPECT_NE(failed[0]->error.find("record 5"), std::string::npos) << failed[0]->error;
  }
}

TEST(SphereJob, UnknownOperatorAndMissingInput) {
  Fixture f(2);
  f.upload("s", 10);
  JobClient jc(f.c->client());
  try {
    jc.run({"", {"s"}, "no-such-op", "", {}, {}, false, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
  try {
    jc.run({"", {"missing"}, "identity", "", {}, {}, false, {}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::not_found);
  }
}

TEST(SphereJob, RetriesOnOtherReplicaWhenSpeHostDies) {
  Fixture f(3, 2);
  auto in = f.upload("s", 2000);
  f.c->replicate_all();
  auto holders = f.c->client().locate("s");
  ASSERT_EQ(holders.size(), 2u);
  auto victim = holders[0] == "node1" ? holders[1] : holders[0];  // keep the entry server up
  f.c->set_down(victim, true);
  JobClient jc(f.c->client());
  auto rep = jc.run({"", {"s"}, "identity", "", {}, {1, 4096}, false, {}});
  EXPECT_FALSE(rep.warnings.empty());
  EXPECT_EQ(records_of(f.c->client(), rep.outputs, *f.c), in);
}

TEST(SphereJob, ReplicasProcessedInParallel) {
  Fixture f(2, 2);
  f.upload("a", 4000);
  f.upload("b", 4000);
  f.c->replicate_all();
  JobClient jc(f.c->client());
  auto rep = jc.run({"", {"a", "b"}, "identity", "", {}, {1, 1 << 20}, false, {}});
  std::set<transport::Address> used;
  for (const auto& sr : rep.segments) {
    used.insert(sr.node);
    EXPECT_TRUE(sr.local);
  }
  EXPECT_EQ(used.size(), 2u);
}

TEST(SphereJob, DualRunsGiveSameMultiset) {
  Fixture f(3, 1, 2);
  f.upload("a", 2500);
  JobClient jc(f.c->client());
  JobSpec spec{"", {"a"}, "first-byte-bucket", "", {OutputMode::shuffle, f.c->addresses()}, {1, 5000}, false, {}};
  auto r1 = jc.run(spec);
  auto r2 = jc.run(spec);
  EXPECT_NE(r1.id, r2.id);
  EXPECT_EQ(records_of(f.c->client(), r1.outputs, *f.c), records_of(f.c->client(), r2.outputs, *f.c));
}
