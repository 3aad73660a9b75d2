#pragma once

// Scene registry: named verification configurations, each carrying a
// candidate solution and the closed-form oracle it is measured against.
// Checks are built lazily; everything heavy happens inside run().

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "relcont/gravity.hpp"

namespace relcont {

struct Scene {
  std::string name;
  std::string description;
  GravityConstants constants;
  std::uint64_t seed = 42;
  int grid = 3;
  std::map<std::string, double> params;
  std::map<std::string, double> tol_override;

  double param(const std::string& key) const;
  void set_param(const std::string& key, double value);  // rejects unknown keys
  double tol(const std::string& check, double fallback) const;
};

struct SceneCheck {
  std::string name;
  std::string anchor;  // the mathematical statement the check exercises
  std::string description;
  std::function<CheckResult()> run;
};

std::vector<std::string> scene_names();
bool has_scene(const std::string& name);
Scene make_scene(const std::string& name);
std::vector<SceneCheck> scene_checks(const Scene& s);

// "*" and "?" wildcards, anchored on both ends
bool glob_match(const std::string& pattern, const std::string& text);

// runs the selected checks (concurrently when RELCONT_THREADS allows) and
// assembles the report ordered by check name
Report run_suite(const Scene& scene, const std::string& only = "*");

// ---- scene oracles ----

// Uniform-density fluid ball in hydrostatic balance, geometric units. The
// profile comes from a self-contained 1-D evaluation; make_star substitutes
// it back into the TOV balance and the surface/matching conditions before
// returning, so a transcription slip cannot survive construction.
struct StarModel {
  double R = 1.0;      // surface radius
  double eps0 = 0.05;  // uniform total energy density

  double mass() const { return 4.0 * M_PI / 3.0 * eps0 * R * R * R; }
  double mass_inside(double r) const;
  double root(double r) const;  // sqrt(1 - 2 M r^2 / R^3)
  double pressure(double r) const;
  double lapse(double r) const;  // A with g_tt = -A^2
  double radial(double r) const;  // g_rr
};

StarModel make_star(double R, double eps0);

// star interior glued to a Schwarzschild exterior across the r = R tube;
// mass_scale != 1 deliberately breaks the matching for the junction controls
MatchedSpacetime star_spacetime(const StarModel& star, double mass_scale = 1.0,
                                double r_out = 3.0, double t0 = 0.1, double t1 = 0.9,
                                int nodes = 6);

// two flat half-boxes glued across the x^1 = 0 plane; rho_bar = 0 means no
// matter at all, the vacuum configuration whose total action vanishes
MatchedSpacetime flat_matched_dust(double rho_bar, int nodes = 4);

// moving-domain transport identity: d/deps of the re-meshed action against
// the fixed-domain variation plus the boundary flux of the Lagrangian
struct MovingDomainGap {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;  // relative
};

MovingDomainGap moving_domain_gap(std::uint64_t seed, int nodes = 6);

}  // namespace relcont
