#pragma once

// Matched spacetimes: Einstein residuals sourced by the continuum stress,
// the total action with its Gibbons-Hawking-York boundary terms, and the
// bundled junction report.
//
// Nothing here solves for a metric. Every routine takes a candidate
// metric/state pair and measures how far it is from the coupled equations.

#include <algorithm>
#include <cmath>
#include <optional>

#include "relcont/dynamics.hpp"
#include "relcont/hypersurface.hpp"
#include "relcont/report.hpp"

namespace relcont {

struct GravityConstants {
  double G = 1.0;
  double c = 1.0;
  double chi() const { return 8.0 * M_PI * G / (c * c * c * c); }
};

// One side of the matching: a metric, the coordinate box it occupies, and
// the matter carried there. Exterior sides leave the matter fields unset.
// `boundary` holds the outward-oriented pieces of the region's boundary
// other than the shared interface (caps, outer cutoff).
struct GravityRegion {
  MetricField g;
  std::vector<double> lo, hi;  // integration box in g's chart coordinates
  int nodes = 6;               // Gauss-Legendre nodes per axis
  std::optional<ContinuumLagrangian> matter;
  std::optional<EulerianState> state;
  std::vector<Hypersurface> boundary;
};

// A matched configuration should induce the same metric on the interface
// from both sides; a deliberately mismatched one is still constructible so
// that the junction checks can demonstrate the failure.
struct MatchedSpacetime {
  GravityRegion interior;
  std::optional<GravityRegion> exterior;
  // shared interface, embedded in the interior metric with outward normal;
  // the exterior view of the same surface comes from with_ambient
  std::optional<Hypersurface> interface_surface;
  GravityConstants constants;

  Hypersurface interface_outer() const {
    if (!exterior || !interface_surface)
      throw StateError("matched spacetime: no exterior view of the interface");
    return interface_surface->with_ambient(exterior->g);
  }
};

namespace detail {

inline void require_box(const GravityRegion& r) {
  std::size_t d = static_cast<std::size_t>(r.g.dim());
  if (r.lo.size() != d || r.hi.size() != d)
    throw ConfigError("gravity region: box dimension does not match the metric");
  for (std::size_t i = 0; i < d; ++i)
    if (r.hi[i] < r.lo[i]) throw ConfigError("gravity region: box with hi < lo");
}

inline bool degenerate_box(const GravityRegion& r) {
  for (std::size_t i = 0; i < r.lo.size(); ++i)
    if (r.hi[i] == r.lo[i]) return true;
  return false;
}

// tensor-product Gauss-Legendre over the region box
template <class F>
double integrate_region(const GravityRegion& r, F f) {
  require_box(r);
  if (degenerate_box(r)) return 0.0;
  int d = static_cast<int>(r.lo.size());
  std::vector<double> gx, gw;
  gauss_legendre(r.nodes, gx, gw);
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  double acc = 0.0;
  while (true) {
    double wt = 1.0;
    for (int a = 0; a < d; ++a) {
      double half = 0.5 * (r.hi[a] - r.lo[a]);
      x[a] = r.lo[a] + half * (gx[idx[a]] + 1.0);
      wt *= half * gw[idx[a]];
    }
    acc += wt * f(std::span<const double>(x));
    int a = 0;
    for (; a < d; ++a) {
      if (++idx[a] < r.nodes) break;
      idx[a] = 0;
    }
    if (a == d) break;
  }
  return acc;
}

inline Chart region_chart(const GravityRegion& r, const std::string& name) {
  return Chart(name, r.lo, r.hi);
}

}  // namespace detail

// ---- Einstein residuals ----

// componentwise G^{mu nu} mu(g) - 2 chi dl/dg_{mu nu}; vanishes exactly when
// the candidate metric solves the Einstein equation sourced by the state.
// A region without matter sources nothing, so the residual degenerates to
// the vacuum equation.
inline ResidualField einstein_interior_residual(const MatchedSpacetime& m,
                                                const std::vector<std::vector<double>>& pts,
                                                double tol, std::string mode = "exact") {
  const auto& r = m.interior;
  std::optional<TensorField> dl_dg;
  if (r.matter && r.state) dl_dg = metric_derivative_field(*r.matter, r.g, *r.state);
  double chi = m.constants.chi();
  int d = r.g.dim();
  ResidualField rf{"einstein-interior", std::move(mode), tol};
  for (const auto& pt : pts) {
    auto cur = curvature_at<double>(r.g, pt);
    std::vector<double> dv(d * d, 0.0);
    if (dl_dg) dv = dl_dg->at(pt);
    double mx = 0.0;
    for (int i = 0; i < d * d; ++i)
      mx = std::max(mx, std::abs(cur.einstein_up[i] * cur.metric.vol - 2.0 * chi * dv[i]));
    rf.add(pt, mx);
  }
  rf.finish();
  return rf;
}

// componentwise Einstein tensor; zero exactly on a vacuum solution
inline ResidualField einstein_vacuum_residual(const MetricField& g,
                                              const std::vector<std::vector<double>>& pts,
                                              double tol, std::string mode = "exact",
                                              std::string name = "einstein-vacuum") {
  int d = g.dim();
  ResidualField rf{std::move(name), std::move(mode), tol};
  for (const auto& pt : pts) {
    auto cur = curvature_at<double>(g, pt);
    double mx = 0.0;
    for (int i = 0; i < d * d; ++i) mx = std::max(mx, std::abs(cur.einstein_low[i]));
    rf.add(pt, mx);
  }
  rf.finish();
  return rf;
}

inline ResidualField einstein_exterior_residual(const MatchedSpacetime& m,
                                                const std::vector<std::vector<double>>& pts,
                                                double tol, std::string mode = "exact") {
  if (!m.exterior) throw StateError("einstein exterior residual: no exterior region");
  return einstein_vacuum_residual(m.exterior->g, pts, tol, std::move(mode),
                                  "einstein-exterior");
}

// contracted Bianchi identity, div of G, as a residual over sample points
inline ResidualField bianchi_residual(const MetricField& g,
                                      const std::vector<std::vector<double>>& pts, double tol,
                                      std::string mode = "exact", std::string name = "bianchi") {
  ResidualField rf{std::move(name), std::move(mode), tol};
  for (const auto& pt : pts) {
    auto div = einstein_divergence(g, pt);
    double mx = 0.0;
    for (double v : div) mx = std::max(mx, std::abs(v));
    rf.add(pt, mx);
  }
  rf.finish();
  return rf;
}

// covariant divergence of the stress density next to the Bianchi bound
// mu(g) |div G| / (2 chi): on a configuration where the interior Einstein
// residual vanishes the first never exceeds the second by more than the
// differentiation slack
struct DivergenceComparison {
  ResidualField stress;    // |div T^mu_nu mu(g)| componentwise max
  ResidualField einstein;  // mu(g) |div G| / (2 chi)
};

inline DivergenceComparison stress_divergence_comparison(
    const ContinuumLagrangian& L, const MetricField& g, const EulerianState& st, double chi,
    const std::vector<std::vector<double>>& pts, double tol, std::string mode = "exact") {
  auto T = stress_energy_field(L, g, st, StressVariant::FromMetric);
  auto conn = Connection::levi_civita(g);
  DivergenceComparison out{{"stress-divergence", mode, tol}, {"einstein-divergence", mode, tol}};
  for (const auto& pt : pts) {
    auto divT = divergence_at<double>(T, conn, pt);
    double mt = 0.0;
    for (double v : divT) mt = std::max(mt, std::abs(v));
    out.stress.add(pt, mt);

    auto divG = einstein_divergence(g, pt);
    auto md = metric_at<double>(g, pt);
    double mg = 0.0;
    for (double v : divG) mg = std::max(mg, std::abs(v));
    out.einstein.add(pt, mg * md.vol / (2.0 * chi));
  }
  out.stress.finish();
  out.einstein.finish();
  return out;
}

// ---- total action ----

struct ActionTerms {
  double matter_minus = 0.0, matter_plus = 0.0;
  double eh_minus = 0.0, eh_plus = 0.0;
  double ghy_minus = 0.0, ghy_plus = 0.0;
  double total() const {
    return matter_minus + matter_plus + eh_minus + eh_plus + ghy_minus + ghy_plus;
  }
};

namespace detail {

inline double matter_action(const GravityRegion& r) {
  if (!r.matter || !r.state) return 0.0;
  const auto& L = *r.matter;
  const auto& st = *r.state;
  return integrate_region(r, [&](std::span<const double> x) {
    return lagrangian_state_at<double>(L, r.g, st, x).value;
  });
}

inline double einstein_hilbert_action(const GravityRegion& r, double chi) {
  return integrate_region(r, [&](std::span<const double> x) {
    auto cur = curvature_at<double>(r.g, x);
    return cur.scalar * cur.metric.vol / (2.0 * chi);
  });
}

inline double boundary_action(const GravityRegion& r, double chi) {
  double acc = 0.0;
  for (const auto& b : r.boundary) acc += ghy_integral(b, chi);
  return acc;
}

}  // namespace detail

// continuum term, one Einstein-Hilbert and one GHY term per side; the two
// interface GHY terms enter with opposite orientations, so they cancel
// whenever the two sides agree on the extrinsic curvature
inline ActionTerms total_action_terms(const MatchedSpacetime& m) {
  double chi = m.constants.chi();
  ActionTerms t;
  t.matter_minus = detail::matter_action(m.interior);
  t.eh_minus = detail::einstein_hilbert_action(m.interior, chi);
  t.ghy_minus = detail::boundary_action(m.interior, chi);
  if (m.interface_surface) t.ghy_minus += ghy_integral(*m.interface_surface, chi);
  if (m.exterior) {
    t.matter_plus = detail::matter_action(*m.exterior);
    t.eh_plus = detail::einstein_hilbert_action(*m.exterior, chi);
    t.ghy_plus = detail::boundary_action(*m.exterior, chi);
    if (m.interface_surface) t.ghy_plus -= ghy_integral(m.interface_outer(), chi);
  }
  return t;
}

inline double total_action(const MatchedSpacetime& m) { return total_action_terms(m).total(); }

// ---- bundled report ----

struct MatchedReportConfig {
  std::string scene = "matched";
  std::string mode = "exact";
  int grid = 2;          // volume sample nodes per axis
  int surface_grid = 3;  // interface sample nodes per axis
  double tol_el = 1e-8;
  double tol_einstein_interior = 1e-4;
  double tol_einstein_exterior = 1e-6;
  double tol_junction = 1e-5;
  double tol_traction = 1e-6;
  double tol_bianchi = 1e-6;
  GravityConstants constants;  // echoed into the report environment
  std::uint64_t seed = 0;
};

inline std::vector<BoundarySample> interface_samples(const Hypersurface& surf,
                                                     const std::vector<std::vector<double>>& pts) {
  std::vector<BoundarySample> out;
  out.reserve(pts.size());
  for (const auto& Y : pts) {
    auto fr = surf_frame_at<double>(surf, Y);
    std::vector<double> x(fr.x.begin(), fr.x.end());
    out.push_back({std::move(x), fr.n_low});
  }
  return out;
}

// runs the component checks of the matching theorem and bundles them; a
// failed junction leaves the others untouched so the report isolates faults
inline Report matched_report(const MatchedSpacetime& m, MatchedReportConfig cfg = {}) {
  Report rep;
  rep.scene = cfg.scene;
  rep.environment.seed = cfg.seed;
  rep.environment.grid_sizes = {cfg.grid, cfg.surface_grid};
  rep.environment.constants = {{"G", m.constants.G}, {"c", m.constants.c}};
  rep.environment.timestamp = report_timestamp();

  std::vector<std::vector<double>> pts_in;
  if (!detail::degenerate_box(m.interior)) {
    auto ch = detail::region_chart(m.interior, "interior");
    pts_in = interior_grid(ch, cfg.grid, 0.08);
  }

  if (m.interior.matter && !pts_in.empty()) {
    rep.checks.push_back(residual_check(
        "euler-lagrange-interior", "reduced Euler-Lagrange equations",
        eulerian_el_residual(*m.interior.matter, m.interior.g, *m.interior.state, pts_in,
                             cfg.tol_el, cfg.mode)));
    rep.checks.push_back(residual_check("einstein-interior",
                                        "interior Einstein equation sourced by the stress",
                                        einstein_interior_residual(m, pts_in,
                                                                   cfg.tol_einstein_interior,
                                                                   cfg.mode)));
    rep.checks.push_back(residual_check(
        "bianchi-interior", "contracted Bianchi identity",
        bianchi_residual(m.interior.g, pts_in, cfg.tol_bianchi, cfg.mode, "bianchi-interior")));
  }

  if (m.exterior) {
    auto che = detail::region_chart(*m.exterior, "exterior");
    auto pts_out = interior_grid(che, cfg.grid, 0.08);
    rep.checks.push_back(residual_check(
        "einstein-exterior", "vacuum Einstein equation",
        einstein_exterior_residual(m, pts_out, cfg.tol_einstein_exterior, cfg.mode)));
    rep.checks.push_back(residual_check(
        "bianchi-exterior", "contracted Bianchi identity",
        bianchi_residual(m.exterior->g, pts_out, cfg.tol_bianchi, cfg.mode, "bianchi-exterior")));
  }

  bool junction_passed = false;
  bool have_junction = m.interface_surface && m.exterior;
  ResidualField traction;
  bool have_traction = false;

  if (m.interface_surface) {
    auto spts = interior_grid(m.interface_surface->chart(), cfg.surface_grid, 0.1);
    if (have_junction) {
      auto jr = junction_check(*m.interface_surface, m.interior.g, m.exterior->g, spts,
                               cfg.tol_junction, cfg.mode);
      junction_passed = jr.h_jump.pass() && jr.K_jump.pass();
      rep.checks.push_back(
          residual_check("junction-h", "first junction condition, induced metric", jr.h_jump));
      rep.checks.push_back(residual_check(
          "junction-K", "second junction condition, extrinsic curvature", jr.K_jump));
      rep.checks.push_back(residual_check(
          "junction-G-nn", "O'Brien-Synge jump, normal-normal Einstein", jr.energy_jump));
      rep.checks.push_back(residual_check(
          "junction-G-tangent-n", "O'Brien-Synge jump, tangent-normal Einstein",
          jr.momentum_jump));
    }
    if (m.interior.matter) {
      auto samples = interface_samples(*m.interface_surface, spts);
      traction = boundary_traction_residual(*m.interior.matter, m.interior.g, *m.interior.state,
                                            samples, cfg.tol_traction, cfg.mode);
      have_traction = true;
      rep.checks.push_back(
          residual_check("boundary-traction", "traction of the stress on the interface",
                         traction));
    }
  }

  if (have_junction && have_traction) {
    CheckResult imp;
    imp.name = "junction-implies-free-boundary";
    imp.anchor = "[h] = [K] = 0 forces a traction-free interface";
    imp.max_residual = traction.max_norm;
    imp.l2_residual = traction.l2;
    imp.tolerance = cfg.tol_traction;
    imp.mode = "implication";
    imp.pass = junction_passed ? traction.pass() : true;
    rep.checks.push_back(std::move(imp));
  }

  std::sort(rep.checks.begin(), rep.checks.end(),
            [](const CheckResult& a, const CheckResult& b) { return a.name < b.name; });
  return rep;
}

}  // namespace relcont
