#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sector/angle/angle.hpp"
#include "sector/angle/pipeline.hpp"
#include "sector/cluster/in_process.hpp"
#include "test_support.hpp"

using namespace sector;
using namespace sector::angle;

namespace {

ClusterModel model_of(std::vector<Vec> centers) {
  ClusterModel m;
  m.centers = std::move(centers);
  return m;
}

Vec random_vec(std::mt19937_64& rng, std::size_t dim, double scale = 10) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(dim);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST(Features, ParseAndFormatRoundTrip) {
  auto v = parse_features("a,1.5,0.1,2\n\nb,3,4,5\n");
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].entity, "a");
  EXPECT_EQ(v[0].timestamp, 1.5);
  EXPECT_EQ(v[0].values, (Vec{0.1, 2}));
  FeatureVector f{"e", 1.0 / 3.0, {std::sqrt(2.0), -1e-300}};
  auto back = parse_feature_line(format_feature(f));
  EXPECT_EQ(back.timestamp, f.timestamp);
  EXPECT_EQ(back.values, f.values);
  EXPECT_EQ(parse_features("x|1|2", '|')[0].values, Vec{2});
  EXPECT_THROW(parse_features("a,1"), Error);
  EXPECT_THROW(parse_features("a,zz,1"), Error);
  EXPECT_THROW(parse_features("a,1,1\nb,2,1,2"), Error);
}

TEST(Windows, IntervalArithmetic) {
  std::vector<FeatureVector> v{{"a", 0, {1}}, {"b", 5, {1}}, {"c", 15, {1}}};
  auto w = window_partition(v, 10, 0);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].members.size(), 2u);
  EXPECT_EQ(w[1].members.size(), 1u);
  EXPECT_EQ(w[1].start, 10);
  EXPECT_TRUE(window_partition({}, 10, 0).empty());
  EXPECT_THROW(window_partition(v, 0, 0), Error);
  EXPECT_THROW(window_partition(v, 10, 1), Error);
}

TEST(Windows, RandomizedConservation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> t(0, 1000);
  for (int round = 0; round < 50; ++round) {
    std::vector<FeatureVector> v;
    for (int i = 0; i < 200; ++i) v.push_back({"e", t(rng), {0}});
    double d = 1 + rng() % 100, t0 = -static_cast<double>(rng() % 50);
    auto w = window_partition(v, d, t0);
    std::size_t total = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      EXPECT_EQ(w[j].index, static_cast<std::int64_t>(j));
      for (const auto& m : w[j].members) {
        EXPECT_EQ(static_cast<std::int64_t>(std::floor((m.timestamp - t0) / d)), w[j].index);
        EXPECT_GE(m.timestamp, w[j].start);
        EXPECT_LT(m.timestamp, w[j].start + d);
      }
      total += w[j].members.size();
    }
    EXPECT_EQ(total, v.size());
  }
}

TEST(KMeans, SingleClusterIsMean) {
  std::vector<Vec> pts{{0, 0}, {2, 0}, {4, 6}};
  auto m = cluster_window(pts, 1, 3);
  ASSERT_EQ(m.k(), 1u);
  EXPECT_NEAR(m.centers[0][0], 2, 1e-12);
  EXPECT_NEAR(m.centers[0][1], 2, 1e-12);
  EXPECT_NEAR(m.variances[0], (8 + 4 + 20) / 3.0, 1e-12);
  EXPECT_EQ(m.weights[0], 1.0);
  EXPECT_EQ(m.lambdas[0], 1.0);
}

TEST(KMeans, TwoBlobsRecovered) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0, 1);
  Vec mean_a{0, 0, 0}, mean_b{50, -20, 10};
  std::vector<Vec> pts;
  for (int i = 0; i < 400; ++i) {
    const auto& m = i % 2 ? mean_a : mean_b;
    pts.push_back({m[0] + n(rng), m[1] + n(rng), m[2] + n(rng)});
  }
  auto model = cluster_window(pts, 2, 1);
  for (const auto& target : {mean_a, mean_b}) {
    double best = std::min(squared_distance(model.centers[0], target), squared_distance(model.centers[1], target));
    EXPECT_LT(std::sqrt(best), 0.1 * 3.0);  // blob radius ~ 3 sigma
  }
  EXPECT_NEAR(model.weights[0] + model.weights[1], 1.0, 1e-12);
  EXPECT_NEAR(model.lambdas[0] + model.lambdas[1], 1.0, 1e-12);
}

TEST(KMeans, DeterministicAndOrderIndependent) {
  std::mt19937_64 rng(2);
  std::vector<Vec> pts;
  for (int i = 0; i < 300; ++i) pts.push_back(random_vec(rng, 3));
  auto a = cluster_window(pts, 5, 11);
  std::shuffle(pts.begin(), pts.end(), rng);
  auto b = cluster_window(pts, 5, 11);
  EXPECT_EQ(a, b);
}

TEST(KMeans, ObjectiveNeverIncreases) {
  std::mt19937_64 rng(4);
  for (int round = 0; round < 30; ++round) {
    std::vector<Vec> pts;
    for (int i = 0; i < 200; ++i) pts.push_back(random_vec(rng, 2));
    auto m = cluster_window(pts, 1 + round % 7, round);
    ASSERT_FALSE(m.objective.empty());
    EXPECT_LE(m.objective.size(), 100u);
    for (std::size_t i = 1; i < m.objective.size(); ++i) EXPECT_LE(m.objective[i], m.objective[i - 1] * (1 + 1e-12));
    for (double v : m.variances) EXPECT_GT(v, 0);
  }
}

TEST(KMeans, FewPointsReduceK) {
  auto m = cluster_window({{1, 1}, {2, 2}}, 5, 1);
  EXPECT_EQ(m.k(), 2u);
  EXPECT_FALSE(m.warnings.empty());
  for (double v : m.variances) EXPECT_GE(v, kMinVariance);
  EXPECT_THROW(cluster_window({}, 1, 1), Error);
}

TEST(Delta, Examples) {
  auto m = model_of({{0, 0}, {3, 4}, {-1, 7}});
  EXPECT_EQ(delta(m, m), 0.0);
  EXPECT_EQ(delta(model_of({{1, 2}}), model_of({{4, 2}})), 9.0);
  EXPECT_THROW(delta(model_of({}), m), Error);
}

TEST(Delta, MatchesBruteForceAndPermutationInvariant) {
  std::mt19937_64 rng(6);
  for (int round = 0; round < 200; ++round) {
    std::vector<Vec> a, b;
    for (int i = 0; i < 3; ++i) a.push_back(random_vec(rng, 4));
    for (int i = 0; i < 3; ++i) b.push_back(random_vec(rng, 4));
    double expect = 0;
    for (const auto& x : a) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& y : b) {
        double s = 0;
        for (int d = 0; d < 4; ++d) s += (x[d] - y[d]) * (x[d] - y[d]);
        best = std::min(best, s);
      }
      expect += best;
    }
    double got = delta(model_of(a), model_of(b));
    EXPECT_NEAR(got, expect, 1e-9 * std::max(1.0, expect));
    EXPECT_GE(got, 0);
    std::shuffle(b.begin(), b.end(), rng);
    EXPECT_EQ(delta(model_of(a), model_of(b)), got);
    std::shuffle(a.begin(), a.end(), rng);
    EXPECT_NEAR(delta(model_of(a), model_of(b)), got, 1e-9 * std::max(1.0, got));
  }
}

TEST(Detect, ConstantSeriesHasNoFlags) {
  EXPECT_TRUE(detect_emergent(std::vector<double>(30, 2.5), 10, 3).empty());
  EXPECT_TRUE(detect_emergent(std::vector<double>(5, 1.0), 10, 3).empty());  // too little history
}

TEST(Detect, SingleSpikeFlagged) {
  std::vector<double> d;
  for (int i = 0; i < 30; ++i) d.push_back(1.0 + (i % 2 ? 0.1 : -0.1));  // stddev 0.1
  d[20] = 1.0 + 10 * 0.1 + 0.01;
  EXPECT_EQ(detect_emergent(d, 10, 3), std::vector<std::size_t>{21});
}

TEST(Detect, NanNeverFlags) {
  std::vector<double> d(30, 1.0);
  d[15] = std::numeric_limits<double>::quiet_NaN();
  d[28] = 100;
  EXPECT_EQ(detect_emergent(d, 10, 3), std::vector<std::size_t>{29});
}

TEST(Score, Examples) {
  EmergentCluster big{0, 0, {1, 1}, 2.0, 0.7, 0.5}, small{0, 1, {5, 5}, 1.0, 0.3, 0.5};
  EXPECT_DOUBLE_EQ(score({1, 1}, {big, small}), 0.7);
  EmergentCluster unit{0, 0, {0, 0}, 1.0, 1.0, 1.0};
  EXPECT_NEAR(score({1, 1}, {unit}), std::exp(-1.0), 1e-9);
  EXPECT_NEAR(score({1, 1}, {unit}), 0.367879, 1e-6);
  EXPECT_THROW(score({1}, {}), Error);
  EXPECT_THROW(score({1}, {unit}), Error);
}

TEST(Score, MaxOfIndependentEvaluations) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.1, 2);
  for (int round = 0; round < 500; ++round) {
    std::vector<EmergentCluster> cs;
    for (int k = 0; k < 2; ++k) cs.push_back({0, std::size_t(k), random_vec(rng, 3, 3), u(rng), u(rng) / 2, u(rng) / 2});
    auto x = random_vec(rng, 3, 3);
    double best = 0;
    for (const auto& c : cs) {
      double d2 = 0;
      for (int i = 0; i < 3; ++i) d2 += (x[i] - c.a[i]) * (x[i] - c.a[i]);
      best = std::max(best, c.theta * std::exp(-(c.lambda * c.lambda) * d2 / (2 * c.variance)));
    }
    double got = score(x, cs);
    EXPECT_NEAR(got, best, 1e-9);
    EXPECT_GT(got, 0);
    EXPECT_LE(got, std::max(cs[0].theta, cs[1].theta));
  }
  // monotone in distance for one cluster
  EmergentCluster c{0, 0, {0}, 1.5, 0.8, 0.6};
  double prev = score_one({0}, c);
  for (double r = 0.1; r < 10; r += 0.1) {
    double s = score_one({r}, c);
    EXPECT_LT(s, prev);
    prev = s;
  }
}

TEST(Pipeline, PlantedShiftFlagsWindow21) {
  SyntheticOptions so;
  auto data = synthesize(so);
  AngleOptions o;
  o.window_length = so.window_length;
  auto rep = analyze(data.vectors, o);
  ASSERT_EQ(rep.windows.size(), so.windows);
  EXPECT_EQ(rep.flagged, std::vector<std::size_t>{21}) << rep.to_text();
  ASSERT_EQ(rep.emergent.size(), 1u) << rep.to_text();
  EXPECT_EQ(rep.emergent[0].window, 21);
  EXPECT_LT(std::sqrt(squared_distance(rep.emergent[0].a, data.injected)), 0.5);
  EXPECT_NEAR(score(data.injected, rep.emergent), rep.emergent[0].theta, 0.01);
}

TEST(Pipeline, DistributedMatchesSingleProcess) {
  testutil::TempDir dir;
  auto reg = std::make_shared<sphere::OperatorRegistry>();
  register_operators(*reg);
  auto opts = cluster::InProcessOptions::numbered(4, dir.path());
  opts.replica_target = 1;
  cluster::InProcessCluster c(opts, reg);

  SyntheticOptions so;
  so.windows = 25;
  so.points_per_blob = 60;
  auto data = synthesize(so);
  // feature files split across three uploads, as from several sensors
  std::string parts[3];
  for (std::size_t i = 0; i < data.vectors.size(); ++i) parts[i % 3] += format_feature(data.vectors[i]);
  std::vector<std::string> names;
  std::string all;
  for (int p = 0; p < 3; ++p) {
    names.push_back("angle/features" + std::to_string(p) + ".csv");
    c.client().upload_bytes(parts[p], names.back(), storage::RecordIndex::from_lines(parts[p]));
    all += parts[p];
  }
  AngleOptions o;
  o.window_length = so.window_length;
  auto local = analyze(parse_features(all), o);
  auto dist = analyze_distributed(c.client(), names, o);
  EXPECT_EQ(dist.to_text(), local.to_text());
  ASSERT_EQ(dist.windows.size(), local.windows.size());
  for (std::size_t j = 0; j < local.windows.size(); ++j) {
    EXPECT_EQ(dist.windows[j].members, local.windows[j].members);
    EXPECT_EQ(dist.windows[j].model, local.windows[j].model) << "window " << j;
  }
  EXPECT_EQ(dist.flagged, std::vector<std::size_t>{21});
}
