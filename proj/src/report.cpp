#include "relcont/report.hpp"

#include <json.hpp>

#include <cstdlib>
#include <sstream>

namespace relcont {

using ordered_json = nlohmann::ordered_json;

std::string report_json(const Report& r) {
  ordered_json env;
  env["seed"] = r.environment.seed;
  env["grid_sizes"] = r.environment.grid_sizes;
  env["constants"] = ordered_json::object();
  for (const auto& [k, v] : r.environment.constants) env["constants"][k] = v;
  env["timestamp"] = r.environment.timestamp;

  ordered_json checks = ordered_json::array();
  for (const auto& c : r.checks) {
    ordered_json j;
    j["name"] = c.name;
    j["anchor"] = c.anchor;
    j["max_residual"] = c.max_residual;
    j["l2_residual"] = c.l2_residual;
    j["tolerance"] = c.tolerance;
    j["mode"] = c.mode;
    j["pass"] = c.pass;
    if (!c.error.empty()) j["error"] = c.error;
    checks.push_back(std::move(j));
  }

  ordered_json out;
  out["scene"] = r.scene;
  out["environment"] = std::move(env);
  out["checks"] = std::move(checks);
  return out.dump(2) + "\n";
}

std::string report_text(const Report& r) {
  std::ostringstream os;
  os << "scene " << r.scene << "  (seed " << r.environment.seed;
  for (int gsz : r.environment.grid_sizes) os << ", grid " << gsz;
  for (const auto& [k, v] : r.environment.constants) os << ", " << k << "=" << v;
  os << ")\n";
  for (const auto& c : r.checks) {
    os << (c.pass ? "  pass  " : "  FAIL  ") << c.name << "  max=" << c.max_residual
       << " l2=" << c.l2_residual << " tol=" << c.tolerance << " [" << c.mode << "]";
    if (!c.anchor.empty()) os << "  {" << c.anchor << "}";
    if (!c.error.empty()) os << "  error: " << c.error;
    os << "\n";
  }
  os << (r.all_pass() ? "all checks pass" : "some checks FAILED") << "\n";
  return os.str();
}

std::int64_t report_timestamp() {
  const char* e = std::getenv("SOURCE_DATE_EPOCH");
  if (!e) return 0;
  char* end = nullptr;
  long long v = std::strtoll(e, &end, 10);
  if (end == e) return 0;
  return static_cast<std::int64_t>(v);
}

}  // namespace relcont
