#include "sector/cluster/scenario.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include "sector/angle/pipeline.hpp"
#include "sector/bench/tera.hpp"
#include "sector/cluster/daemon.hpp"
#include "sector/cluster/in_process.hpp"
#include "sector/error.hpp"
#include "sector/stats.hpp"

namespace sector::cluster {

namespace fs = std::filesystem;

void Metrics::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_)
    if (k == key) {
      v = value;
      return;
    }
  entries_.emplace_back(key, value);
}

void Metrics::set(const std::string& key, double value) { set(key, fmt::format("{:.6g}", value)); }

std::optional<std::string> Metrics::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string Metrics::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

void Metrics::write(const fs::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  out << to_text();
  if (!out) fail(ErrorCode::internal, "cannot write metrics to " + path.string());
}

transport::LinkProfile wan_profile(const std::vector<std::vector<std::string>>& sites) {
  if (sites.size() != 3) fail(ErrorCode::invalid_argument, "the wide-area profile has three sites");
  return transport::LinkProfile::from_sites(sites, {{0, 16, 55}, {16, 0, 71}, {55, 71, 0}});
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Owns a temp dir when the caller gave none.
class WorkDir {
 public:
  explicit WorkDir(const fs::path& given) {
    if (!given.empty()) {
      path_ = given;
    } else {
      path_ = fs::temp_directory_path() / fmt::format("sector-scenario-{}", std::random_device{}());
      owned_ = true;
    }
    fs::create_directories(path_);
  }
  ~WorkDir() {
    std::error_code ec;
    if (owned_) fs::remove_all(path_, ec);
  }
  fs::path sub(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
  bool owned_ = false;
};

InProcessOptions cluster_options(const ScenarioOptions& so, std::size_t default_nodes, const fs::path& root) {
  InProcessOptions o;
  if (so.config) {
    o.addresses = so.config->addresses();
    o.replica_target = so.config->replica_target;
    o.profile = so.config->profile();
    o.spes_per_node = so.config->spes_per_node;
  } else {
    o = InProcessOptions::numbered(so.nodes ? so.nodes : default_nodes, root);
    o.replica_target = 1;
  }
  o.root = root;
  o.seed = so.seed;
  return o;
}

struct TerasortRun {
  bench::TerasortResult result;
  bench::SortCheck check;
  double terasort_seconds = 0;
};

/// Generates `records` per node on every node, sorts, and checks.
TerasortRun terasort_on(InProcessCluster& c, std::uint64_t records, std::uint64_t seed,
                        bench::MultisetChecksum& input_checksum) {
  std::vector<std::string> names;
  input_checksum = {};
  for (std::size_t i = 0; i < c.size(); ++i) {
    auto data = bench::teragen(records, seed + i);
    for (std::uint64_t r = 0; r < records; ++r)
      input_checksum.add(std::string_view(data).substr(r * bench::kRecordSize, bench::kRecordSize));
    names.push_back(fmt::format("tera/input-{}.dat", i));
    c.node(i).store_file(c.options().client, names.back(), data, bench::tera_index(records));
  }
  TerasortRun run;
  auto t0 = Clock::now();
  run.result = bench::terasort(c.client(), names);
  run.terasort_seconds = since(t0);
  run.check = bench::check_sorted(c.client(), run.result.outputs);
  return run;
}

ScenarioResult terasort_local(const ScenarioOptions& so) {
  WorkDir dir(so.work_dir);
  auto records = so.records_per_node ? so.records_per_node : 250'000;
  InProcessCluster c(cluster_options(so, 4, dir.sub("nodes")), default_registry());
  ScenarioResult res;
  auto& m = res.metrics;
  m.set("scenario", "terasort-local");
  m.set("nodes", static_cast<std::uint64_t>(c.size()));
  m.set("records_per_node", records);
  bench::MultisetChecksum in;
  auto t0 = Clock::now();
  auto run = terasort_on(c, records, so.seed, in);
  m.set("records", run.check.records);
  m.set("sample_seconds", run.result.sample_seconds);
  m.set("shuffle_seconds", run.result.shuffle_seconds);
  m.set("sort_seconds", run.result.sort_seconds);
  m.set("terasort_seconds", run.terasort_seconds);
  auto t1 = Clock::now();
  auto split = bench::terasplit(c.client(), run.result.outputs);
  m.set("terasplit_seconds", since(t1));
  m.set("total_seconds", since(t0));
  m.set("terasplit", split.to_line());
  bool checksum = run.check.checksum == in && run.check.records == in.count;
  m.set("sorted", run.check.sorted);
  m.set("checksum_match", checksum);
  res.ok = run.check.sorted && checksum;
  m.set("validation", res.ok ? "pass" : "fail");
  return res;
}

ScenarioResult terasort_wan(const ScenarioOptions& so) {
  WorkDir dir(so.work_dir);
  auto records = so.records_per_node ? so.records_per_node : 100'000;
  ScenarioResult res;
  auto& m = res.metrics;
  m.set("scenario", "terasort-wan");
  m.set("records_per_node", records);

  auto base_opts = cluster_options(so, 6, dir.sub("flat"));
  auto wan_opts = cluster_options(so, 6, dir.sub("wan"));
  if (!so.config || so.config->link_profile.empty()) {
    // two nodes per site in ring order; the client sits with the first site
    std::vector<std::vector<std::string>> sites(3);
    for (std::size_t i = 0; i < wan_opts.addresses.size(); ++i)
      sites[i * 3 / wan_opts.addresses.size()].push_back(wan_opts.addresses[i]);
    sites[0].push_back(wan_opts.client);
    wan_opts.profile = wan_profile(sites);
  }
  base_opts.profile = {};
  m.set("nodes", static_cast<std::uint64_t>(wan_opts.addresses.size()));

  bench::MultisetChecksum in_flat, in_wan;
  TerasortRun flat, wan;
  {
    InProcessCluster c(base_opts, default_registry());
    flat = terasort_on(c, records, so.seed, in_flat);
  }
  {
    InProcessCluster c(wan_opts, default_registry());
    wan = terasort_on(c, records, so.seed, in_wan);
  }
  double ratio = wan.terasort_seconds / std::max(flat.terasort_seconds, 1e-9);
  m.set("records", wan.check.records);
  m.set("flat_seconds", flat.terasort_seconds);
  m.set("flat_sample_seconds", flat.result.sample_seconds);
  m.set("flat_shuffle_seconds", flat.result.shuffle_seconds);
  m.set("flat_sort_seconds", flat.result.sort_seconds);
  m.set("wan_seconds", wan.terasort_seconds);
  m.set("wan_sample_seconds", wan.result.sample_seconds);
  m.set("wan_shuffle_seconds", wan.result.shuffle_seconds);
  m.set("wan_sort_seconds", wan.result.sort_seconds);
  m.set("slowdown_ratio", ratio);
  bool correct = flat.check.sorted && wan.check.sorted && flat.check.checksum == in_flat &&
                 wan.check.checksum == in_wan && in_flat == in_wan;
  m.set("sorted", flat.check.sorted && wan.check.sorted);
  m.set("checksum_match", correct);
  m.set("slowdown_bound", 2.5);
  m.set("slowdown_within_bound", ratio < 2.5);
  res.ok = correct && ratio < 2.5;
  m.set("validation", res.ok ? "pass" : "fail");
  return res;
}

ScenarioResult angle_synthetic(const ScenarioOptions& so) {
  WorkDir dir(so.work_dir);
  InProcessCluster c(cluster_options(so, 4, dir.sub("nodes")), default_registry());
  angle::SyntheticOptions syn;
  syn.seed = so.seed;
  auto data = angle::synthesize(syn);
  // one feature file per node, as if each node collected its own traffic
  std::vector<std::string> files(c.size()), names;
  for (std::size_t i = 0; i < data.vectors.size(); ++i) files[i % c.size()] += angle::format_feature(data.vectors[i]);
  for (std::size_t i = 0; i < c.size(); ++i) {
    names.push_back(fmt::format("angle/features-{}.csv", i));
    c.node(i).store_file(c.options().client, names.back(), files[i], storage::RecordIndex::from_lines(files[i]));
  }
  angle::AngleOptions ao;
  ao.window_length = syn.window_length;
  ao.seed = so.seed;
  auto t0 = Clock::now();
  auto report = angle::analyze_distributed(c.client(), names, ao);

  ScenarioResult res;
  auto& m = res.metrics;
  m.set("scenario", "angle-synthetic");
  m.set("nodes", static_cast<std::uint64_t>(c.size()));
  m.set("vectors", static_cast<std::uint64_t>(data.vectors.size()));
  m.set("windows", static_cast<std::uint64_t>(report.windows.size()));
  m.set("analysis_seconds", since(t0));
  m.set("planted_window", static_cast<std::uint64_t>(syn.shift_at));
  m.set("flagged_windows", fmt::format("{}", fmt::join(report.flagged, ",")));
  m.set("emergent_clusters", static_cast<std::uint64_t>(report.emergent.size()));
  double nearest = std::numeric_limits<double>::infinity();
  for (const auto& e : report.emergent) nearest = std::min(nearest, std::sqrt(angle::squared_distance(e.a, data.injected)));
  if (!report.emergent.empty()) {
    m.set("injected_center_distance", nearest);
    m.set("injected_score", angle::score(data.injected, report.emergent));
  }
  bool flagged_ok = report.flagged == std::vector<std::size_t>{syn.shift_at};
  bool center_ok = nearest < syn.spread;
  m.set("flagged_exactly_planted", flagged_ok);
  m.set("injected_center_found", center_ok);
  res.ok = flagged_ok && center_ok;
  m.set("validation", res.ok ? "pass" : "fail");
  return res;
}

ScenarioResult replication_uniformity(const ScenarioOptions& so) {
  WorkDir dir(so.work_dir);
  auto opts = cluster_options(so, 8, dir.sub("nodes"));
  if (!so.config) opts.replica_target = 3;
  auto clock = std::make_shared<ManualClock>();
  opts.clock = clock;
  InProcessCluster c(opts, default_registry());
  const std::size_t n = c.size();
  const int target = opts.replica_target;
  if (n < 2) fail(ErrorCode::config, "replication-uniformity needs at least two nodes");

  // 200 placements: 100 files at one replica each, raised to three
  const std::size_t files = 200 / static_cast<std::size_t>(std::max(1, target - 1));
  std::mt19937_64 rng(so.seed);
  std::vector<double> observed(n, 0), expected(n, 0);
  std::vector<std::string> names;
  for (std::size_t f = 0; f < files; ++f) {
    std::size_t origin = f % n;
    std::string data(1 + rng() % 4096, '\0');
    for (auto& ch : data) ch = static_cast<char>(rng());
    names.push_back(fmt::format("repl/file-{}", f));
    c.node(origin).store_file(opts.client, names.back(), data, std::nullopt);
    for (std::size_t j = 0; j < n; ++j)
      if (j != origin) expected[j] += static_cast<double>(target - 1) / static_cast<double>(n - 1);
  }
  int cycles = 0;
  auto all_at_target = [&] {
    for (const auto& name : names)
      if (c.node(0).lookup(name).size() != static_cast<std::size_t>(target)) return false;
    return true;
  };
  while (cycles < 3 && !all_at_target()) {
    clock->advance(std::chrono::hours(24));
    for (std::size_t i = 0; i < n; ++i) c.node(i).run_due_replication();
    ++cycles;
  }
  std::size_t at_target = 0;
  for (std::size_t f = 0; f < files; ++f) {
    auto locs = c.node(0).lookup(names[f]);
    if (locs.size() == static_cast<std::size_t>(target)) ++at_target;
    for (const auto& l : locs)
      for (std::size_t j = 0; j < n; ++j)
        if (j != f % n && c.addresses()[j] == l) observed[j] += 1;
  }
  auto chi = stats::chi_square(observed, expected);

  ScenarioResult res;
  auto& m = res.metrics;
  m.set("scenario", "replication-uniformity");
  m.set("nodes", static_cast<std::uint64_t>(n));
  m.set("replica_target", target);
  m.set("files", static_cast<std::uint64_t>(files));
  m.set("placements", static_cast<std::uint64_t>(std::accumulate(observed.begin(), observed.end(), 0.0)));
  m.set("daily_cycles", cycles);
  m.set("files_at_target", static_cast<std::uint64_t>(at_target));
  m.set("chi_square", chi.statistic);
  m.set("degrees_of_freedom", chi.degrees_of_freedom);
  m.set("p_value", chi.p_value);
  bool replicated = at_target == files;
  bool uniform = chi.p_value > 0.01;
  m.set("all_at_target", replicated);
  m.set("uniform", uniform);
  res.ok = replicated && uniform;
  m.set("validation", res.ok ? "pass" : "fail");
  return res;
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"terasort-local", "terasort-wan", "angle-synthetic",
                                              "replication-uniformity"};
  return names;
}

ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& options) {
  if (name == "terasort-local") return terasort_local(options);
  if (name == "terasort-wan") return terasort_wan(options);
  if (name == "angle-synthetic") return angle_synthetic(options);
  if (name == "replication-uniformity") return replication_uniformity(options);
  fail(ErrorCode::invalid_argument,
       fmt::format("unknown scenario '{}' (known: {})", name, fmt::join(scenario_names(), ", ")));
}

}  // namespace sector::cluster
