#include "sector/cluster/config.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <set>
#include <sstream>

#include "sector/error.hpp"

namespace sector::cluster {

namespace pt = boost::property_tree;

void ClusterConfig::validate() const {
  if (nodes.empty()) fail(ErrorCode::config, "config declares no nodes");
  std::set<std::string> addrs, names;
  for (const auto& n : nodes) {
    if (n.address.empty()) fail(ErrorCode::config, "node " + n.name + " has no address");
    if (n.data_dir.empty()) fail(ErrorCode::config, "node " + n.name + " has no data_dir");
    if (!addrs.insert(n.address).second) fail(ErrorCode::config, "duplicate node address " + n.address);
    if (!names.insert(n.name).second) fail(ErrorCode::config, "duplicate node name " + n.name);
  }
  if (replica_target < 1 || static_cast<std::size_t>(replica_target) > nodes.size())
    fail(ErrorCode::config, "replica_target must be between 1 and the node count (" + std::to_string(nodes.size()) + ")");
  if (spes_per_node < 1) fail(ErrorCode::config, "spes_per_node must be at least 1");
  if (!(acceleration > 0)) fail(ErrorCode::config, "acceleration must be positive");
}

const NodeEntry& ClusterConfig::node(const std::string& key) const {
  for (const auto& n : nodes)
    if (n.name == key || n.address == key) return n;
  fail(ErrorCode::config, "no node " + key + " in config");
}

std::vector<std::string> ClusterConfig::addresses() const {
  std::vector<std::string> out;
  for (const auto& n : nodes) out.push_back(n.address);
  return out;
}

transport::LinkProfile ClusterConfig::profile() const {
  if (link_profile.empty()) return {};
  return transport::LinkProfile::load(link_profile);
}

std::shared_ptr<Clock> ClusterConfig::make_clock() const {
  if (clock == ClockMode::accelerated) return std::make_shared<AcceleratedClock>(acceleration);
  return std::make_shared<SteadyClock>();
}

ClusterConfig ClusterConfig::parse(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::config, std::string("bad config: ") + e.message() + " at line " + std::to_string(e.line()));
  }
  ClusterConfig c;
  try {
    for (const auto& [section, body] : tree) {
      if (body.empty() && !body.data().empty()) fail(ErrorCode::config, "key " + section + " outside a section");
      if (section == "cluster") {
        c.replica_target = body.get("replica_target", c.replica_target);
        if (auto p = body.get_optional<std::string>("link_profile")) {
          c.link_profile = *p;
          if (c.link_profile.is_relative() && !base_dir.empty()) c.link_profile = base_dir / c.link_profile;
        }
        auto mode = body.get<std::string>("clock", "real");
        if (mode == "real") c.clock = ClockMode::real;
        else if (mode == "accelerated") c.clock = ClockMode::accelerated;
        else fail(ErrorCode::config, "clock must be real or accelerated, not " + mode);
        c.acceleration = body.get("acceleration", c.acceleration);
        c.spes_per_node = body.get("spes_per_node", c.spes_per_node);
        c.seed = body.get("seed", c.seed);
        continue;
      }
      NodeEntry n;
      n.name = section;
      n.address = body.get<std::string>("address", "");
      n.data_dir = body.get<std::string>("data_dir", "");
      if (n.data_dir.is_relative() && !n.data_dir.empty() && !base_dir.empty()) n.data_dir = base_dir / n.data_dir;
      auto writers = body.get<std::string>("writers", "");
      boost::split(n.writers, writers, boost::is_any_of(", "), boost::token_compress_on);
      std::erase(n.writers, std::string());
      c.nodes.push_back(std::move(n));
    }
  } catch (const pt::ptree_bad_data& e) {
    fail(ErrorCode::config, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

ClusterConfig ClusterConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

}  // namespace sector::cluster
