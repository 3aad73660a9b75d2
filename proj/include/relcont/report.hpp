#pragma once

// Check outcomes and run reports. Serialization keeps a fixed field order so
// a repeated run with the same seed produces byte-identical output.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace relcont {

struct CheckResult {
  std::string name;
  std::string anchor;  // short label of the identity or theorem exercised
  double max_residual = 0.0;
  double l2_residual = 0.0;
  double tolerance = 0.0;
  std::string mode;  // "exact", "fd", "negative-control", "convergence"
  bool pass = false;
  std::string error;  // populated when the check aborted instead of finishing
};

struct RunEnvironment {
  std::uint64_t seed = 0;
  std::vector<int> grid_sizes;
  std::map<std::string, double> constants;
  std::int64_t timestamp = 0;  // SOURCE_DATE_EPOCH when set, otherwise 0
};

struct Report {
  std::string scene;
  RunEnvironment environment;
  std::vector<CheckResult> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// ResidualField and friends all expose {max_norm, l2, tolerance, mode, pass()};
// templating keeps this header independent of the field machinery
template <class RF>
CheckResult residual_check(std::string name, std::string anchor, const RF& rf) {
  CheckResult c;
  c.name = std::move(name);
  c.anchor = std::move(anchor);
  c.max_residual = rf.max_norm;
  c.l2_residual = rf.l2;
  c.tolerance = rf.tolerance;
  c.mode = rf.mode;
  c.pass = rf.pass();
  return c;
}

// a control passes when the corrupted configuration misses by a wide margin;
// `floor` is recorded in the tolerance slot and the sense of `pass` inverts
template <class RF>
CheckResult control_check(std::string name, std::string anchor, const RF& rf, double floor) {
  CheckResult c;
  c.name = std::move(name);
  c.anchor = std::move(anchor);
  c.max_residual = rf.max_norm;
  c.l2_residual = rf.l2;
  c.tolerance = floor;
  c.mode = "negative-control";
  c.pass = rf.max_norm > floor;
  return c;
}

std::string report_json(const Report& r);
std::string report_text(const Report& r);

// SOURCE_DATE_EPOCH when set and parseable, 0 otherwise
std::int64_t report_timestamp();

}  // namespace relcont
