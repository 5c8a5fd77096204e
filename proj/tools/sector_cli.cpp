// sector: node daemon, file client, job submission, benchmarks and scenarios.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sector/angle/pipeline.hpp"
#include "sector/bench/tera.hpp"
#include "sector/client/session.hpp"
#include "sector/cluster/config.hpp"
#include "sector/cluster/daemon.hpp"
#include "sector/cluster/job_file.hpp"
#include "sector/cluster/scenario.hpp"
#include "sector/error.hpp"
#include "sector/sphere/job.hpp"
#include "sector/storage/record_index.hpp"
#include "sector/transport/socket_network.hpp"

namespace fs = std::filesystem;
using namespace sector;

namespace {

enum Exit { ok = 0, other = 1, usage = 2, transport_failure = 3, job_failure = 4, validation_failure = 5 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::invalid_argument:
      return usage;
    case ErrorCode::transport:
    case ErrorCode::timeout:
      return transport_failure;
    case ErrorCode::job_failed:
      return job_failure;
    case ErrorCode::validation:
    case ErrorCode::integrity:
      return validation_failure;
    default:
      return other;
  }
}

std::atomic<bool> g_stop{false};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorCode::not_found, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct ClientArgs {
  std::string config;
  std::string entry;  // default: first configured node
  std::string self = "127.0.0.1:0";

  void add(CLI::App* app) {
    app->add_option("-c,--config", config, "cluster config")->required()->check(CLI::ExistingFile);
    app->add_option("--entry", entry, "server to contact first (name or address)");
    app->add_option("--self", self, "client address presented to servers");
  }

  std::unique_ptr<client::ClientSession> session() const {
    auto cfg = cluster::ClusterConfig::load(config);
    auto server = entry.empty() ? cfg.nodes.front().address : cfg.node(entry).address;
    return std::make_unique<client::ClientSession>(std::make_shared<transport::SocketNetwork>(), self, server);
  }
};

void print_report(const sphere::JobReport& r) {
  std::size_t done = 0;
  for (const auto& s : r.segments) done += s.ok;
  fmt::print("job {}: {}/{} segments done in {:.3f} s\n", r.id, done, r.segments.size(), r.seconds);
  for (const auto& [node, secs] : r.node_seconds) fmt::print("  node {} {:.3f} s\n", node, secs);
  for (const auto& w : r.warnings) fmt::print("  warning: {}\n", w);
  for (const auto& o : r.outputs) fmt::print("  output {}\n", o);
  for (const auto* f : r.failed()) fmt::print("  failed segment {} ({}): {}\n", f->ordinal, f->node, f->error);
}

void on_segment(const sphere::SegmentReport& s) {
  fmt::print("segment {} {} on {}{} {} records in, {} out, {:.3f} s{}\n", s.ordinal, s.ok ? "done" : "FAILED", s.node,
             s.local ? " (local)" : "", s.result.records_in, s.result.records_out, s.seconds,
             s.ok ? "" : " : " + s.error);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sector storage cloud and Sphere compute cloud"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // node
  auto* node = app.add_subcommand("node", "run one configured node until interrupted");
  std::string node_config, node_name;
  node->add_option("-c,--config", node_config, "cluster config")->required()->check(CLI::ExistingFile);
  node->add_option("-n,--name", node_name, "node section name or address")->required();

  // upload / download / locate
  ClientArgs up_args, down_args, loc_args;
  auto* upload = app.add_subcommand("upload", "store a local file");
  up_args.add(upload);
  std::string up_local, up_name, up_index;
  std::uint64_t up_record_size = 0;
  bool up_lines = false;
  upload->add_option("local", up_local, "local file")->required()->check(CLI::ExistingFile);
  upload->add_option("name", up_name, "name in Sector (default: file name)");
  auto* idx_opt = upload->add_option("--index", up_index, "index file (default: <local>.idx when present)");
  auto* lines_opt = upload->add_flag("--lines", up_lines, "index one record per line");
  auto* rs_opt = upload->add_option("--record-size", up_record_size, "index fixed-size records")->check(CLI::PositiveNumber);
  idx_opt->excludes(lines_opt)->excludes(rs_opt);
  lines_opt->excludes(rs_opt);

  auto* download = app.add_subcommand("download", "fetch a file from the nearest replica");
  down_args.add(download);
  std::string down_name, down_local;
  download->add_option("name", down_name)->required();
  download->add_option("local", down_local, "destination path")->required();

  auto* locate = app.add_subcommand("locate", "list replica locations");
  loc_args.add(locate);
  std::string loc_name;
  locate->add_option("name", loc_name)->required();

  // submit
  ClientArgs sub_args;
  auto* submit = app.add_subcommand("submit", "run a Sphere job from a descriptor");
  sub_args.add(submit);
  std::string job_file;
  submit->add_option("job", job_file, "job descriptor")->required()->check(CLI::ExistingFile);

  // benchmarks
  auto* teragen = app.add_subcommand("teragen", "write 100-byte Terasort records");
  std::uint64_t tg_records = 0, tg_seed = 1;
  std::string tg_out;
  teragen->add_option("--records", tg_records)->required();
  teragen->add_option("--seed", tg_seed);
  teragen->add_option("--out", tg_out, "output path (index goes to <out>.idx)")->required();

  ClientArgs ts_args;
  auto* terasort = app.add_subcommand("terasort", "sort Terasort inputs across the cluster");
  ts_args.add(terasort);
  std::string ts_job;
  bool ts_split = false;
  terasort->add_option("--job", ts_job, "descriptor: inputs, optional nodes and sample_size")->required()->check(CLI::ExistingFile);
  terasort->add_flag("--terasplit", ts_split, "run Terasplit on the sorted output");

  auto* terasplit = app.add_subcommand("terasplit", "best single split of sorted Terasort records");
  std::vector<std::string> split_in, split_names;
  ClientArgs split_args;
  split_args.self = "127.0.0.1:0";
  terasplit->add_option("--in", split_in, "local sorted record files, in key order")->check(CLI::ExistingFile);
  terasplit->add_option("--file", split_names, "sorted files in Sector, in key order");
  terasplit->add_option("-c,--config", split_args.config, "cluster config (with --file)");
  terasplit->add_option("--entry", split_args.entry);

  // angle
  auto* angle_cmd = app.add_subcommand("angle", "find emergent clusters in feature vectors");
  std::string angle_in, angle_synth;
  angle::AngleOptions ao;
  angle::SyntheticOptions so;
  angle_cmd->add_option("--in", angle_in, "feature file: entity,timestamp,f1,...")->check(CLI::ExistingFile);
  angle_cmd->add_option("--synthesize", angle_synth, "write a synthetic feature file with a planted shift and exit");
  angle_cmd->add_option("--window", ao.window_length, "window length in timestamp units");
  angle_cmd->add_option("--t0", ao.t0);
  angle_cmd->add_option("-k", ao.k)->check(CLI::PositiveNumber);
  angle_cmd->add_option("--history", ao.history_len)->check(CLI::PositiveNumber);
  angle_cmd->add_option("--z", ao.z);
  angle_cmd->add_option("--seed", ao.seed);
  angle_cmd->add_option("--shift-at", so.shift_at, "synthetic: first shifted window");
  angle_cmd->add_option("--windows", so.windows, "synthetic: window count");

  // scenario
  auto* scenario = app.add_subcommand("scenario", "run an in-process experiment and write metrics");
  std::string sc_name, sc_config, sc_metrics, sc_work;
  cluster::ScenarioOptions sc;
  scenario->add_option("name", sc_name, fmt::format("one of: {}", fmt::join(cluster::scenario_names(), ", ")))->required();
  scenario->add_option("-c,--config", sc_config, "cluster config (addresses, replica target, link profile)")->check(CLI::ExistingFile);
  scenario->add_option("-m,--metrics", sc_metrics, "metrics file (default: stdout only)");
  scenario->add_option("--work-dir", sc_work, "data directories (default: temporary)");
  scenario->add_option("--seed", sc.seed);
  scenario->add_option("--records", sc.records_per_node, "records per node");
  scenario->add_option("--nodes", sc.nodes, "node count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : usage;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*node) {
      auto cfg = cluster::ClusterConfig::load(node_config);
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      spdlog::set_level(std::min(spdlog::get_level(), spdlog::level::info));
      cluster::run_node(cfg, node_name, g_stop);
    } else if (*upload) {
      std::optional<storage::RecordIndex> index;
      auto size = fs::file_size(up_local);
      if (!up_index.empty()) index = storage::RecordIndex::load(up_index);
      else if (up_lines) index = storage::RecordIndex::from_lines(slurp(up_local));
      else if (up_record_size) {
        if (size % up_record_size) fail(ErrorCode::invalid_argument, "file size is not a multiple of --record-size");
        index = storage::RecordIndex::uniform(size / up_record_size, up_record_size);
      } else if (fs::exists(up_local + std::string(storage::kIndexSuffix)))
        index = storage::RecordIndex::load(up_local + std::string(storage::kIndexSuffix));
      if (up_name.empty()) up_name = fs::path(up_local).filename().string();
      auto locs = up_args.session()->upload(up_local, up_name, index);
      fmt::print("{} stored at {}\n", up_name, fmt::join(locs, " "));
    } else if (*download) {
      auto bytes = down_args.session()->download(down_name, down_local);
      fmt::print("{} bytes written to {}\n", bytes, down_local);
    } else if (*locate) {
      for (const auto& l : loc_args.session()->locate(loc_name)) fmt::print("{}\n", l);
    } else if (*submit) {
      auto spec = cluster::load_job(job_file);
      auto session = sub_args.session();
      try {
        print_report(sphere::JobClient(*session).run(spec, on_segment));
      } catch (const sphere::JobError& e) {
        print_report(e.report());
        throw;
      }
    } else if (*teragen) {
      bench::teragen_file(tg_records, tg_seed, tg_out);
      fmt::print("{} records written to {}\n", tg_records, tg_out);
    } else if (*terasort) {
      auto text = slurp(ts_job);
      auto spec = cluster::parse_job(text);
      bench::TerasortOptions opt;
      opt.nodes = spec.nodes;
      opt.sample_size = cluster::job_sample_size(text);
      opt.limits = spec.limits;
      auto session = ts_args.session();
      auto res = bench::terasort(*session, spec.inputs, opt);
      double total = res.sample_seconds + res.shuffle_seconds + res.sort_seconds;
      fmt::print("sample {:.3f} s\nshuffle {:.3f} s\nsort {:.3f} s\nterasort total {:.3f} s\n", res.sample_seconds,
                 res.shuffle_seconds, res.sort_seconds, total);
      for (const auto& o : res.outputs) fmt::print("output {}\n", o);
      if (ts_split) {
        auto t0 = std::chrono::steady_clock::now();
        auto split = bench::terasplit(*session, res.outputs);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        fmt::print("terasplit {:.3f} s\n{}\ntotal {:.3f} s\n", secs, split.to_line(), total + secs);
      }
    } else if (*terasplit) {
      if (split_in.empty() == split_names.empty()) fail(ErrorCode::invalid_argument, "give either --in or --file");
      bench::SplitResult r;
      if (!split_in.empty()) {
        bench::TerasplitScanner scan;
        for (const auto& p : split_in) {
          auto data = slurp(p);
          if (data.size() % bench::kRecordSize) fail(ErrorCode::integrity, p + " is not a whole number of records");
          for (std::size_t off = 0; off < data.size(); off += bench::kRecordSize)
            scan.add_record(std::string_view(data).substr(off, bench::kRecordSize));
        }
        r = scan.finish();
      } else {
        if (split_args.config.empty()) fail(ErrorCode::invalid_argument, "--file needs --config");
        r = bench::terasplit(*split_args.session(), split_names);
      }
      fmt::print("{}\n", r.to_line());
    } else if (*angle_cmd) {
      if (!angle_synth.empty()) {
        so.window_length = ao.window_length;
        so.seed = ao.seed;
        auto data = angle::synthesize(so);
        std::ofstream out(angle_synth, std::ios::trunc);
        for (const auto& v : data.vectors) out << angle::format_feature(v);
        if (!out) fail(ErrorCode::internal, "cannot write " + angle_synth);
        fmt::print("{} vectors in {} windows written to {}\n", data.vectors.size(), so.windows, angle_synth);
      } else {
        if (angle_in.empty()) fail(ErrorCode::invalid_argument, "give --in or --synthesize");
        auto report = angle::analyze(angle::parse_features(slurp(angle_in)), ao);
        fmt::print("{}", report.to_text());
      }
    } else if (*scenario) {
      if (!sc_config.empty()) sc.config = cluster::ClusterConfig::load(sc_config);
      sc.work_dir = sc_work;
      auto res = cluster::run_scenario(sc_name, sc);
      fmt::print("{}", res.metrics.to_text());
      if (!sc_metrics.empty()) res.metrics.write(sc_metrics);
      if (!res.ok) return validation_failure;
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return other;
  }
  return ok;
}
