#include "sector/transport/link_profile.hpp"

#include <fstream>
#include <sstream>

#include "sector/error.hpp"

namespace sector::transport {

std::pair<Address, Address> LinkProfile::key(const Address& a, const Address& b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}

void LinkProfile::set_rtt(const Address& a, const Address& b, std::chrono::milliseconds rtt) {
  if (rtt.count() < 0) fail(ErrorCode::invalid_argument, "negative rtt for " + a + " <-> " + b);
  if (a == b) return;
  rtts_[key(a, b)] = rtt;
}

std::chrono::milliseconds LinkProfile::rtt(const Address& a, const Address& b) const {
  if (a == b) return std::chrono::milliseconds(0);
  auto it = rtts_.find(key(a, b));
  return it == rtts_.end() ? std::chrono::milliseconds(0) : it->second;
}

LinkProfile LinkProfile::parse(const std::string& text) {
  LinkProfile profile;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    Address a, b;
    long long ms = -1;
    std::string extra;
    if (!(fields >> a >> b >> ms) || (fields >> extra) || ms < 0)
      fail(ErrorCode::config, "link profile line " + std::to_string(lineno) + ": expected '<addr> <addr> <rtt-ms>'");
    profile.set_rtt(a, b, std::chrono::milliseconds(ms));
  }
  return profile;
}

LinkProfile LinkProfile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::config, "cannot read link profile " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

LinkProfile LinkProfile::from_sites(const std::vector<std::vector<Address>>& sites,
                                    const std::vector<std::vector<int>>& rtt_ms) {
  LinkProfile profile;
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = 0; j < sites.size(); ++j)
      for (const auto& a : sites[i])
        for (const auto& b : sites[j]) profile.set_rtt(a, b, std::chrono::milliseconds(rtt_ms.at(i).at(j)));
  return profile;
}

}  // namespace sector::transport
