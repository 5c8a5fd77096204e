#include "sector/angle/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "sector/bytes.hpp"
#include "sector/client/session.hpp"
#include "sector/error.hpp"
#include "sector/sphere/job.hpp"
#include "sector/stats.hpp"

namespace sector::angle {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string encode_params(const AngleOptions& o) {
  ByteWriter w;
  w.f64(o.window_length).f64(o.t0).u64(o.k).u64(o.seed);
  return std::move(w).take();
}

AngleOptions decode_params(std::string_view p) {
  ByteReader r(p);
  AngleOptions o;
  o.window_length = r.f64();
  o.t0 = r.f64();
  o.k = r.u64();
  o.seed = r.u64();
  return o;
}

ClusterModel cluster_members(const std::vector<FeatureVector>& members, std::int64_t index, const AngleOptions& o) {
  std::vector<Vec> pts;
  pts.reserve(members.size());
  for (const auto& v : members) pts.push_back(v.values);
  return cluster_window(std::move(pts), o.k, o.seed + static_cast<std::uint64_t>(index));
}

}  // namespace

std::string AngleReport::to_text() const {
  std::string out;
  for (const auto& w : windows) {
    out += fmt::format("{} {:.10g} {}", w.index, w.delta_in, w.flagged ? 1 : 0);
    std::string centers;
    for (auto c : w.emergent_centers) centers += (centers.empty() ? "" : ",") + std::to_string(c);
    out += " " + (centers.empty() ? std::string("-") : centers) + "\n";
  }
  return out;
}

AngleReport assemble_report(std::vector<WindowResult> windows, const AngleOptions& o) {
  AngleReport rep;
  std::vector<double> deltas;  // δ_j between windows j and j+1
  std::vector<std::vector<double>> moves(windows.size());  // nearest-prior distance per center
  for (std::size_t j = 0; j + 1 < windows.size(); ++j) {
    const auto& a = windows[j].model;
    const auto& b = windows[j + 1].model;
    if (a && b) {
      deltas.push_back(delta(*a, *b));
      moves[j + 1] = nearest_prior_distances(*a, *b);
    } else {
      deltas.push_back(kNaN);
    }
    windows[j + 1].delta_in = deltas.back();
  }
  if (!windows.empty()) windows[0].delta_in = kNaN;
  rep.flagged = detect_emergent(deltas, o.history_len, o.z);
  for (auto w : rep.flagged) {
    auto& win = windows[w];
    win.flagged = true;
    std::vector<double> pool;
    for (std::size_t p = w - o.history_len; p < w; ++p) pool.insert(pool.end(), moves[p].begin(), moves[p].end());
    if (pool.empty()) continue;
    const double limit = stats::mean(pool) + o.z * stats::stddev(pool);
    for (std::size_t c = 0; c < moves[w].size(); ++c) {
      if (moves[w][c] <= limit) continue;
      win.emergent_centers.push_back(c);
      const auto& m = *win.model;
      rep.emergent.push_back({win.index, c, m.centers[c], m.variances[c], m.weights[c], m.lambdas[c]});
    }
  }
  rep.windows = std::move(windows);
  return rep;
}

AngleReport analyze(const std::vector<FeatureVector>& vectors, const AngleOptions& o) {
  std::vector<WindowResult> results;
  for (const auto& w : window_partition(vectors, o.window_length, o.t0)) {
    WindowResult r;
    r.index = w.index;
    r.members = w.members.size();
    if (!w.members.empty()) r.model = cluster_members(w.members, w.index, o);
    results.push_back(std::move(r));
  }
  return assemble_report(std::move(results), o);
}

SyntheticData synthesize(const SyntheticOptions& o) {
  if (o.blobs == 0 || o.dim == 0 || o.replaced_blob >= o.blobs)
    fail(ErrorCode::invalid_argument, "bad synthetic options");
  std::mt19937_64 rng(o.seed);
  const double box = o.separation * static_cast<double>(o.blobs);
  std::uniform_real_distribution<double> coord(-box, box);
  auto far_from = [&](const Vec& v, const std::vector<Vec>& others) {
    for (const auto& m : others)
      if (std::sqrt(squared_distance(v, m)) < o.separation) return false;
    return true;
  };
  SyntheticData data;
  while (data.means.size() < o.blobs) {
    Vec v(o.dim);
    for (auto& x : v) x = coord(rng);
    if (far_from(v, data.means)) data.means.push_back(v);
  }
  do {
    data.injected.assign(o.dim, 0);
    for (auto& x : data.injected) x = coord(rng);
  } while (!far_from(data.injected, data.means));

  std::normal_distribution<double> noise(0, o.spread);
  std::uniform_real_distribution<double> frac(0, 1);
  for (std::size_t w = 0; w < o.windows; ++w) {
    std::vector<FeatureVector> window;
    for (std::size_t b = 0; b < o.blobs; ++b) {
      const bool shifted = w >= o.shift_at && b == o.replaced_blob;
      const Vec& mean = shifted ? data.injected : data.means[b];
      for (std::size_t i = 0; i < o.points_per_blob; ++i) {
        FeatureVector f;
        f.entity = fmt::format("src-{}-{}", shifted ? o.blobs : b, i);
        f.timestamp = (static_cast<double>(w) + frac(rng)) * o.window_length;
        for (double m : mean) f.values.push_back(m + noise(rng));
        window.push_back(std::move(f));
      }
    }
    std::sort(window.begin(), window.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    data.vectors.insert(data.vectors.end(), window.begin(), window.end());
  }
  return data;
}

std::string encode_model(std::int64_t window, const ClusterModel& m) {
  ByteWriter w;
  w.i64(window).u64(m.members).u32(static_cast<std::uint32_t>(m.k()));
  for (std::size_t c = 0; c < m.k(); ++c) {
    w.u32(static_cast<std::uint32_t>(m.centers[c].size()));
    for (double x : m.centers[c]) w.f64(x);
    w.f64(m.variances[c]).f64(m.weights[c]).f64(m.lambdas[c]).u64(m.sizes[c]);
  }
  w.u32(static_cast<std::uint32_t>(m.objective.size()));
  for (double x : m.objective) w.f64(x);
  w.strings(m.warnings);
  return std::move(w).take();
}

std::pair<std::int64_t, ClusterModel> decode_model(std::string_view bytes) {
  ByteReader r(bytes);
  auto window = r.i64();
  ClusterModel m;
  m.members = r.u64();
  auto k = r.u32();
  for (std::uint32_t c = 0; c < k; ++c) {
    Vec v(r.u32());
    for (auto& x : v) x = r.f64();
    m.centers.push_back(std::move(v));
    m.variances.push_back(r.f64());
    m.weights.push_back(r.f64());
    m.lambdas.push_back(r.f64());
    m.sizes.push_back(r.u64());
  }
  m.objective.resize(r.u32());
  for (auto& x : m.objective) x = r.f64();
  m.warnings = r.strings();
  return {window, std::move(m)};
}

void register_operators(sphere::OperatorRegistry& registry) {
  registry.add({kWindowOp,
                [](std::string_view rec, const std::string& params, sphere::Emitter& out) {
                  auto o = decode_params(params);
                  auto v = parse_feature_line(rec);
                  auto j = window_index(v.timestamp, o.window_length, o.t0);
                  if (j < 0) fail(ErrorCode::invalid_argument, "feature vector precedes the first window");
                  out.emit(rec, static_cast<std::uint64_t>(j));
                },
                {}});
  registry.add({kClusterOp,
                {},
                [](const storage::RecordBatch& batch, const std::string& params, sphere::Emitter& out) {
                  auto o = decode_params(params);
                  std::vector<FeatureVector> members;
                  for (std::size_t i = 0; i < batch.records(); ++i) members.push_back(parse_feature_line(batch.record(i)));
                  if (members.empty()) return;
                  auto j = window_index(members.front().timestamp, o.window_length, o.t0);
                  for (const auto& m : members)
                    if (window_index(m.timestamp, o.window_length, o.t0) != j)
                      fail(ErrorCode::invalid_argument, "window file mixes windows");
                  out.emit(encode_model(j, cluster_members(members, j, o)));
                }});
}

AngleReport analyze_distributed(client::ClientSession& session, const std::vector<std::string>& feature_files,
                                const AngleOptions& o, const std::vector<transport::Address>& nodes) {
  auto dests = nodes.empty() ? session.members() : nodes;
  sphere::JobClient jobs(session);
  sphere::JobSpec shuffle;
  shuffle.inputs = feature_files;
  shuffle.op = kWindowOp;
  shuffle.params = encode_params(o);
  shuffle.output = {sphere::OutputMode::shuffle, dests};
  auto windows = jobs.run(shuffle);

  sphere::JobSpec cluster;
  cluster.inputs = windows.outputs;
  cluster.op = kClusterOp;
  cluster.params = encode_params(o);
  cluster.output = {sphere::OutputMode::local_write, {}};
  cluster.whole_file = true;
  std::map<std::int64_t, std::pair<std::size_t, ClusterModel>> models;
  if (!cluster.inputs.empty()) {
    auto rep = jobs.run(cluster);
    for (const auto& name : rep.outputs) {
      auto info = session.info(name);
      auto batch = session.read_records(name, 0, info.records);
      for (std::size_t i = 0; i < batch.records(); ++i) {
        auto [j, m] = decode_model(batch.record(i));
        auto members = m.members;
        if (!models.emplace(j, std::pair(members, std::move(m))).second)
          fail(ErrorCode::job_failed, "window " + std::to_string(j) + " clustered twice");
      }
    }
  }
  std::vector<WindowResult> results;
  const std::int64_t last = models.empty() ? -1 : models.rbegin()->first;
  for (std::int64_t j = 0; j <= last; ++j) {
    WindowResult r;
    r.index = j;
    if (auto it = models.find(j); it != models.end()) {
      r.members = it->second.first;
      r.model = std::move(it->second.second);
    }
    results.push_back(std::move(r));
  }
  return assemble_report(std::move(results), o);
}

}  // namespace sector::angle
