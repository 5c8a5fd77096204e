#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <set>

#include "sector/bench/tera.hpp"
#include "sector/cluster/in_process.hpp"
#include "test_support.hpp"

using namespace sector;
using namespace sector::bench;
using sector::testutil::TempDir;

namespace {

std::string key_bytes(Key80 k) {
  std::string s(kKeySize, '\0');
  for (std::size_t i = kKeySize; i-- > 0; k >>= 8) s[i] = static_cast<char>(k & 0xff);
  return s;
}

// Every candidate threshold evaluated by recounting the whole dataset.
SplitResult brute_force_split(std::vector<std::pair<Key80, int>> data) {
  SplitResult best;
  std::array<std::uint64_t, 2> tot{};
  for (auto& [k, l] : data) ++tot[l];
  best.left = tot;
  if (data.empty()) return best;
  best.parent_entropy = entropy({tot[0], tot[1]});
  if (tot[0] == 0 || tot[1] == 0) return best;
  std::set<Key80> keys;
  for (auto& [k, l] : data) keys.insert(k);
  double best_gain = -1;
  for (auto it = keys.begin(); std::next(it) != keys.end(); ++it) {
    Key80 lo = *it, hi = *std::next(it);
    Key80 t = lo + (hi - lo) / 2;
    std::array<std::uint64_t, 2> left{}, right{};
    for (auto& [k, l] : data) (k <= t ? left : right)[l]++;
    double g = split_gain(left[0], left[1], right[0], right[1]);
    if (g > best_gain) {
      best_gain = g;
      best.threshold = t;
      best.gain = g;
      best.left = left;
      best.right = right;
    }
  }
  return best;
}

SplitResult scan(std::vector<std::pair<Key80, int>> data) {
  std::sort(data.begin(), data.end(), [](auto& a, auto& b) { return a.first < b.first; });
  TerasplitScanner s;
  for (auto& [k, l] : data) s.add(k, l);
  EXPECT_EQ(s.records(), data.size());
  return s.finish();
}

std::string make_records(const std::vector<std::string>& keys) {
  std::string data;
  for (const auto& k : keys) {
    auto r = k;
    r.resize(kRecordSize, 'p');
    data += r;
  }
  return data;
}

std::shared_ptr<sphere::OperatorRegistry> registry() {
  auto r = std::make_shared<sphere::OperatorRegistry>();
  sphere::register_builtin_operators(*r);
  register_operators(*r);
  return r;
}

}  // namespace

TEST(Teragen, Format) {
  EXPECT_TRUE(teragen(0, 1).empty());
  EXPECT_TRUE(tera_index(0).empty());
  EXPECT_EQ(teragen(2, 1).size(), 200u);
  EXPECT_EQ(tera_index(2), storage::RecordIndex({{0, 100}, {100, 100}}));
  EXPECT_EQ(teragen(1000, 5), teragen(1000, 5));
  EXPECT_NE(teragen(1000, 5), teragen(1000, 6));
  TempDir d;
  teragen_file(3, 9, d.path() / "t");
  EXPECT_EQ(testutil::read_file(d.path() / "t"), teragen(3, 9));
  EXPECT_EQ(storage::RecordIndex::load(d.path() / "t.idx"), tera_index(3));
}

TEST(Checksum, OrderIndependentAndSensitive) {
  MultisetChecksum a, b, c;
  a.add("x");
  a.add("y");
  b.add("y");
  b.add("x");
  c.add("x");
  c.add("x");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Partition, BoundariesAndBuckets) {
  std::vector<std::string> bounds{key_bytes(10), key_bytes(20)};
  EXPECT_EQ(decode_boundaries(encode_boundaries(bounds)), bounds);
  EXPECT_EQ(bucket_of(key_bytes(0), bounds), 0u);
  EXPECT_EQ(bucket_of(key_bytes(10), bounds), 1u);
  EXPECT_EQ(bucket_of(key_bytes(19), bounds), 1u);
  EXPECT_EQ(bucket_of(key_bytes(20), bounds), 2u);
  std::vector<std::string> sample;
  for (int i = 0; i < 100; ++i) sample.push_back(key_bytes(99 - i));
  auto q = quantile_boundaries(sample, 4);
  EXPECT_EQ(q, (std::vector<std::string>{key_bytes(25), key_bytes(50), key_bytes(75)}));
  EXPECT_TRUE(quantile_boundaries({}, 4).empty());
}

TEST(Entropy, Examples) {
  EXPECT_DOUBLE_EQ(entropy({5, 5}), 1.0);
  EXPECT_DOUBLE_EQ(entropy({10, 0}), 0.0);
  EXPECT_NEAR(entropy({2, 6}), 0.811278, 1e-6);
  EXPECT_DOUBLE_EQ(entropy({3, 7}), entropy({7, 3}));
  EXPECT_DOUBLE_EQ(entropy({1, 2, 3}), entropy({3, 1, 2}));
  EXPECT_GT(entropy({4, 4}), entropy({3, 5}));
  EXPECT_THROW(entropy({0, 0}), Error);
}

TEST(SplitGain, MatchesClosedForm) {
  auto h = [](double p) { return p <= 0 || p >= 1 ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); };
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t l0 = rng() % 50, l1 = rng() % 50, r0 = rng() % 50, r1 = rng() % 50 + 1;
    double n = double(l0 + l1 + r0 + r1), nl = double(l0 + l1), nr = double(r0 + r1);
    double expect = h((l1 + r1) / n) - (nl ? nl / n * h(l1 / nl) : 0) - nr / n * h(r1 / nr);
    EXPECT_NEAR(split_gain(l0, l1, r0, r1), std::max(0.0, expect), 1e-12);
  }
}

TEST(Terasplit, PerfectSplit) {
  auto r = scan({{1, 0}, {2, 0}, {3, 0}, {4, 1}, {5, 1}, {6, 1}});
  ASSERT_TRUE(r.threshold);
  EXPECT_EQ(*r.threshold, 3u);  // floor midpoint of 3 and 4
  EXPECT_DOUBLE_EQ(r.gain, 1.0);
  EXPECT_EQ(r.left, (std::array<std::uint64_t, 2>{3, 0}));
  EXPECT_EQ(r.right, (std::array<std::uint64_t, 2>{0, 3}));
  EXPECT_NE(r.to_line().find("\"threshold\": \"00000000000000000003\""), std::string::npos) << r.to_line();
}

TEST(Terasplit, PureLabelsAndEmpty) {
  auto r = scan({{1, 1}, {2, 1}, {9, 1}});
  EXPECT_FALSE(r.threshold);
  EXPECT_EQ(r.gain, 0.0);
  auto e = scan({});
  EXPECT_FALSE(e.threshold);
  EXPECT_NE(r.to_line().find("null"), std::string::npos);
}

TEST(Terasplit, RejectsUnsortedInput) {
  TerasplitScanner s;
  s.add(5, 0);
  EXPECT_THROW(s.add(4, 1), Error);
}

TEST(Terasplit, TiesGoToSmallestThreshold) {
  // splits after 1 and after 3 both separate one pure class
  auto r = scan({{1, 0}, {2, 1}, {3, 1}, {4, 0}});
  auto b = brute_force_split({{1, 0}, {2, 1}, {3, 1}, {4, 0}});
  EXPECT_EQ(r.threshold, b.threshold);
  EXPECT_EQ(*r.threshold, 1u);
}

TEST(Terasplit, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(77);
  for (int t = 0; t < 20; ++t) {
    std::vector<std::pair<Key80, int>> data;
    const Key80 range = t % 2 ? 500 : (Key80(1) << 79);  // odd rounds: many duplicate keys
    for (int i = 0; i < 2000; ++i) {
      Key80 k = ((Key80(rng()) << 64) | rng()) % range;
      int label = (k < range / 3 ? rng() % 4 == 0 : rng() % 3 != 0) ? 1 : 0;
      data.emplace_back(k, label);
    }
    auto a = scan(data), b = brute_force_split(data);
    ASSERT_EQ(a.threshold, b.threshold) << "round " << t;
    EXPECT_EQ(a.gain, b.gain);
    EXPECT_EQ(a.left, b.left);
    EXPECT_EQ(a.right, b.right);
    EXPECT_GE(a.gain, 0.0);
    EXPECT_LE(a.gain, a.parent_entropy);
  }
}

class TerasortCluster : public ::testing::Test {
 protected:
  void SetUp() override {
    auto o = cluster::InProcessOptions::numbered(4, dir.path());
    o.replica_target = 1;
    c = std::make_unique<cluster::InProcessCluster>(o, registry());
  }
  TempDir dir;
  std::unique_ptr<cluster::InProcessCluster> c;
};

TEST_F(TerasortCluster, RandomWithDuplicates) {
  std::vector<std::string> names;
  MultisetChecksum in;
  for (std::size_t i = 0; i < c->size(); ++i) {
    auto data = teragen(5000, 100 + i);
    // duplicate some keys (and whole records) across nodes
    std::memcpy(data.data(), teragen(1, 1).data(), kKeySize);
    std::memcpy(data.data() + kRecordSize, teragen(1, 1).data(), kRecordSize);
    auto name = "tera/in" + std::to_string(i);
    c->node(i).store_file("client", name, data, tera_index(5000));
    for (std::size_t r = 0; r < 5000; ++r) in.add(std::string_view(data).substr(r * kRecordSize, kRecordSize));
    names.push_back(name);
  }
  TerasortOptions opt;
  opt.limits = {1, 200'000};
  auto res = terasort(c->client(), names, opt);
  EXPECT_EQ(res.boundaries.size(), 3u);
  EXPECT_EQ(res.outputs.size(), 4u);
  auto check = check_sorted(c->client(), res.outputs);
  EXPECT_TRUE(check.sorted);
  EXPECT_EQ(check.records, 20000u);
  EXPECT_EQ(check.checksum, in);
  // each sorted bucket stays on the node it was shuffled to
  for (std::size_t b = 0; b < res.outputs.size(); ++b)
    EXPECT_EQ(c->client().locate(res.outputs[b]), c->client().locate(res.sort_job.segments[b].segment.file));
  // split on the sorted output equals the oracle on the raw input
  std::vector<std::pair<Key80, int>> labelled;
  for_each_record(c->client(), names, [&](std::string_view r) { labelled.emplace_back(key_value(tera_key(r)), tera_label(r)); });
  auto split = terasplit(c->client(), res.outputs);
  auto oracle = brute_force_split(labelled);
  EXPECT_EQ(split.threshold, oracle.threshold);
  EXPECT_EQ(split.gain, oracle.gain);
}

TEST_F(TerasortCluster, SmallCases) {
  std::vector<std::string> keys{key_bytes(3), key_bytes(2), key_bytes(1)};
  c->client().upload_bytes(make_records(keys), "rev", tera_index(3));
  auto res = terasort(c->client(), {"rev"});
  std::vector<std::string> got;
  for_each_record(c->client(), res.outputs, [&](std::string_view r) { got.emplace_back(tera_key(r)); });
  EXPECT_EQ(got, (std::vector<std::string>{key_bytes(1), key_bytes(2), key_bytes(3)}));

  std::vector<std::string> sorted_keys;
  for (int i = 0; i < 50; ++i) sorted_keys.push_back(key_bytes(static_cast<Key80>(i) * 1000));
  auto sorted_data = make_records(sorted_keys);
  c->client().upload_bytes(sorted_data, "sorted", tera_index(50));
  auto res2 = terasort(c->client(), {"sorted"});
  std::string out;
  for_each_record(c->client(), res2.outputs, [&](std::string_view r) { out += r; });
  EXPECT_EQ(out, sorted_data);

  c->client().upload_bytes("", "empty", storage::RecordIndex{});
  auto res3 = terasort(c->client(), {"empty"});
  EXPECT_TRUE(res3.outputs.empty());
}
