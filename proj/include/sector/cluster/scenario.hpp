#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sector/cluster/config.hpp"

namespace sector::cluster {

/// Ordered key=value lines. Keys ending in `_seconds` or `_ratio` are timings; every
/// other value is deterministic for a fixed seed and config.
class Metrics {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, bool value) { set(key, std::string(value ? "true" : "false")); }
  void set(const std::string& key, double value);
  void set(const std::string& key, std::uint64_t value) { set(key, std::to_string(value)); }
  void set(const std::string& key, int value) { set(key, std::to_string(value)); }
  std::optional<std::string> get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
  std::string to_text() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

struct ScenarioOptions {
  std::filesystem::path work_dir;     // node data dirs; empty: a fresh temp dir, removed afterwards
  std::uint64_t seed = 42;
  std::uint64_t records_per_node = 0;  // 0: scenario default
  std::size_t nodes = 0;               // 0: scenario default
  std::optional<ClusterConfig> config;  // node addresses, replica target and link profile
};

struct ScenarioResult {
  Metrics metrics;
  bool ok = false;  // every validation passed
};

const std::vector<std::string>& scenario_names();

/// Runs a named scenario on an in-process cluster. Throws invalid-argument
/// for an unknown name.
ScenarioResult run_scenario(const std::string& name, const ScenarioOptions& options);

/// Round trip times of the three-site wide-area testbed (ms): Chicago to
/// Greenbelt 16, Chicago to Pasadena 55, Greenbelt to Pasadena 71.
transport::LinkProfile wan_profile(const std::vector<std::vector<std::string>>& sites);

}  // namespace sector::cluster
