#include "sector/sphere/operator.hpp"

#include "sector/bytes.hpp"
#include "sector/error.hpp"

namespace sector::sphere {

void OperatorRegistry::add(Operator op) {
  if (op.name.empty()) fail(ErrorCode::invalid_argument, "operator needs a name");
  if (!op.per_record == !op.per_segment)
    fail(ErrorCode::invalid_argument, "operator " + op.name + " must define exactly one function");
  std::lock_guard lk(mu_);
  ops_[op.name] = std::move(op);
}

bool OperatorRegistry::contains(const std::string& name) const {
  std::lock_guard lk(mu_);
  return ops_.count(name) > 0;
}

Operator OperatorRegistry::find(const std::string& name) const {
  std::lock_guard lk(mu_);
  auto it = ops_.find(name);
  if (it == ops_.end()) fail(ErrorCode::invalid_argument, "unknown operator " + name);
  return it->second;
}

std::vector<std::string> OperatorRegistry::names() const {
  std::lock_guard lk(mu_);
  std::vector<std::string> out;
  for (const auto& [k, v] : ops_) out.push_back(k);
  return out;
}

void register_builtin_operators(OperatorRegistry& registry) {
  registry.add({"identity", [](std::string_view rec, const std::string&, Emitter& out) { out.emit(rec); }, {}});
  registry.add({"count",
                [](std::string_view, const std::string&, Emitter& out) {
                  out.emit(ByteWriter().u64(1).bytes());
                },
                {}});
  registry.add({"fail-at",
                [](std::string_view rec, const std::string& params, Emitter& out) {
                  if (!params.empty() && rec.substr(0, params.size()) == params)
                    fail(ErrorCode::job_failed, "operator rejected record");
                  out.emit(rec);
                },
                {}});
}

void OutputSpec::validate() const {
  if (mode == OutputMode::shuffle && destinations.empty())
    fail(ErrorCode::invalid_argument, "shuffle output needs at least one destination");
}

std::string encode_output_spec(const OutputSpec& spec) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(spec.mode)).strings(spec.destinations);
  return std::move(w).take();
}

OutputSpec decode_output_spec(std::string_view payload) {
  ByteReader r(payload);
  OutputSpec s;
  auto m = r.u8();
  if (m > 2) fail(ErrorCode::encoding, "bad output mode");
  s.mode = static_cast<OutputMode>(m);
  s.destinations = r.strings();
  return s;
}

const char* to_string(OutputMode mode) {
  switch (mode) {
    case OutputMode::return_to_origin:
      return "origin";
    case OutputMode::local_write:
      return "local";
    case OutputMode::shuffle:
      return "shuffle";
  }
  return "?";
}

OutputMode parse_output_mode(std::string_view s) {
  if (s == "origin") return OutputMode::return_to_origin;
  if (s == "local") return OutputMode::local_write;
  if (s == "shuffle") return OutputMode::shuffle;
  fail(ErrorCode::invalid_argument, "unknown output mode '" + std::string(s) + "'");
}

}  // namespace sector::sphere
