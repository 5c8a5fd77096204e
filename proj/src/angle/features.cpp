#include <fmt/format.h>

#include <charconv>
#include <cmath>

#include "sector/angle/angle.hpp"
#include "sector/error.hpp"

namespace sector::angle {

namespace {

double parse_double(std::string_view s, std::string_view line) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    fail(ErrorCode::encoding, "bad number '" + std::string(s) + "' in feature line: " + std::string(line));
  return v;
}

}  // namespace

FeatureVector parse_feature_line(std::string_view line, char delim) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  for (std::size_t start = 0;;) {
    auto pos = line.find(delim, start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (fields.size() < 3) fail(ErrorCode::encoding, "feature line needs entity, timestamp and values: " + std::string(line));
  FeatureVector v;
  v.entity = std::string(fields[0]);
  v.timestamp = parse_double(fields[1], line);
  for (std::size_t i = 2; i < fields.size(); ++i) v.values.push_back(parse_double(fields[i], line));
  return v;
}

std::vector<FeatureVector> parse_features(std::string_view text, char delim) {
  std::vector<FeatureVector> out;
  for (std::size_t start = 0; start < text.size();) {
    auto end = text.find('\n', start);
    auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    start = end == std::string_view::npos ? text.size() : end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    out.push_back(parse_feature_line(line, delim));
    if (out.back().values.size() != out.front().values.size())
      fail(ErrorCode::invalid_argument, "feature vectors differ in dimension");
  }
  return out;
}

std::string format_feature(const FeatureVector& v, char delim) {
  std::string s = v.entity;
  s += delim;
  s += fmt::format("{:.17g}", v.timestamp);
  for (double x : v.values) {
    s += delim;
    s += fmt::format("{:.17g}", x);
  }
  s += '\n';
  return s;
}

std::int64_t window_index(double t, double d, double t0) {
  return static_cast<std::int64_t>(std::floor((t - t0) / d));
}

std::vector<Window> window_partition(const std::vector<FeatureVector>& vectors, double d, double t0) {
  if (!(d > 0)) fail(ErrorCode::invalid_argument, "window length must be positive");
  std::vector<Window> out;
  for (const auto& v : vectors) {
    auto j = window_index(v.timestamp, d, t0);
    if (j < 0) fail(ErrorCode::invalid_argument, "feature vector precedes the first window");
    while (static_cast<std::int64_t>(out.size()) <= j) {
      auto idx = static_cast<std::int64_t>(out.size());
      out.push_back({idx, t0 + static_cast<double>(idx) * d, d, {}});
    }
    out[static_cast<std::size_t>(j)].members.push_back(v);
  }
  return out;
}

}  // namespace sector::angle
