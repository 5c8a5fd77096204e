#include "sector/cluster/job_file.hpp"

#include <boost/algorithm/hex.hpp>
#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <sstream>

#include "sector/error.hpp"

namespace sector::cluster {

namespace pt = boost::property_tree;

namespace {

std::vector<std::string> list(const pt::ptree& t, const std::string& key) {
  std::vector<std::string> out;
  auto v = t.get<std::string>(key, "");
  boost::split(out, v, boost::is_any_of(", "), boost::token_compress_on);
  std::erase(out, std::string());
  return out;
}

pt::ptree read(const std::string& text) {
  pt::ptree t;
  std::istringstream in(text);
  try {
    pt::read_ini(in, t);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::config, "bad job descriptor: " + e.message() + " at line " + std::to_string(e.line()));
  }
  for (const auto& [k, v] : t)
    if (!v.empty()) fail(ErrorCode::config, "job descriptor takes no sections ([" + k + "])");
  return t;
}

}  // namespace

std::string hex_decode(const std::string& hex) {
  std::string out;
  try {
    boost::algorithm::unhex(hex.begin(), hex.end(), std::back_inserter(out));
  } catch (const std::exception&) {
    fail(ErrorCode::config, "params is not a hex string: " + hex);
  }
  return out;
}

sphere::JobSpec parse_job(const std::string& text) {
  auto t = read(text);
  sphere::JobSpec s;
  try {
    s.id = t.get<std::string>("id", "");
    s.inputs = list(t, "inputs");
    s.op = t.get<std::string>("operator", "");
    s.params = hex_decode(t.get<std::string>("params", ""));
    s.output.mode = sphere::parse_output_mode(t.get<std::string>("output", "origin"));
    s.output.destinations = list(t, "destinations");
    s.nodes = list(t, "nodes");
    s.whole_file = t.get("whole_file", false);
    s.limits.s_min = t.get("segment_min", s.limits.s_min);
    s.limits.s_max = t.get("segment_max", s.limits.s_max);
    s.limits.validate();
    s.output.validate();
  } catch (const pt::ptree_bad_data& e) {
    fail(ErrorCode::config, std::string("bad job descriptor value: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::config, std::string("bad job descriptor: ") + e.what());
  }
  if (s.inputs.empty()) fail(ErrorCode::config, "job descriptor lists no inputs");
  return s;
}

std::uint64_t job_sample_size(const std::string& text) { return read(text).get<std::uint64_t>("sample_size", 10'000); }

sphere::JobSpec load_job(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot read job descriptor " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_job(ss.str());
}

}  // namespace sector::cluster
