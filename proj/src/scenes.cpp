#include "relcont/scenes.hpp"

#include <algorithm>
#include <cmath>

#include "relcont/oracle.hpp"
#include "relcont/worldtube.hpp"

namespace relcont {

// ---- scene parameter plumbing ----

double Scene::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end())
    throw ConfigError("scene '" + name + "' has no parameter '" + key + "'");
  return it->second;
}

void Scene::set_param(const std::string& key, double value) {
  auto it = params.find(key);
  if (it == params.end())
    throw ConfigError("scene '" + name + "' has no parameter '" + key + "'");
  it->second = value;
}

double Scene::tol(const std::string& check, double fallback) const {
  auto it = tol_override.find(check);
  return it == tol_override.end() ? fallback : it->second;
}

namespace {

// ---- shared field builders ----

Chart box4(const std::string& name, double half) {
  return Chart(name, {-half, -half, -half, -half}, {half, half, half, half});
}

MetricField perturbed_minkowski(const Chart& ch, RandomStream& rng, double amp) {
  auto pert = random_symmetric_field(ch, rng, amp, "dg0");
  auto gt = TensorField::derived(
      ch, Shape{0, 2, 0}, {pert},
      [pert](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        pert.eval(x, out);
        out[0] = out[0] - S(1.0);
        out[5] = out[5] + S(1.0);
        out[10] = out[10] + S(1.0);
        out[15] = out[15] + S(1.0);
      },
      "g");
  return MetricField(gt, MetricSignature::Lorentzian, false);
}

TensorField sum_fields(const TensorField& a, const TensorField& b, double scale,
                       std::string name) {
  return TensorField::derived(
      a.chart(), a.shape(), {a, b},
      [a, b, scale](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> tmp(out.size());
        a.eval(x, out);
        b.eval(x, std::span<S>(tmp));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] + scale * tmp[i];
      },
      std::move(name));
}

EulerianState constant_state(const Chart& ch, std::vector<double> w, double rho_bar,
                             double sigma_bar) {
  EulerianState st;
  st.w = TensorField::constant(ch, Shape{1, 0, 0}, std::move(w), "w");
  st.rho = TensorField::constant(ch, Shape{0, 0, 1}, {rho_bar}, "rho");
  st.sigma = TensorField::constant(ch, Shape{0, 0, 1}, {sigma_bar}, "sigma");
  return st;
}

// random on-shell smooth fields over a given metric; the strain is projected
// so it stays degenerate along the flow
EulerianState smooth_state(const Chart& ch, RandomStream& rng, const TensorField& gt,
                           bool with_strain) {
  EulerianState st;
  auto wpert = random_tensor_field(ch, Shape{1, 0, 0}, rng, 0.15, "dw");
  st.w = TensorField::derived(
      ch, Shape{1, 0, 0}, {wpert},
      [wpert](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        wpert.eval(x, out);
        out[0] = out[0] + S(1.0);
      },
      "w");
  st.rho = random_tensor_field(ch, Shape{0, 0, 1}, rng, 0.3, "rho", 1.5);
  st.sigma = random_tensor_field(ch, Shape{0, 0, 1}, rng, 0.1, "sigma", 0.4);
  if (!with_strain) return st;
  auto B = random_symmetric_field(ch, rng, 0.3, "B");
  st.c = TensorField::derived(
      ch, Shape{0, 2, 0}, {B, st.w, gt},
      [B, w = st.w, gt](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> Bv(16), wv(4), gv(16);
        B.eval(x, std::span<S>(Bv));
        w.eval(x, std::span<S>(wv));
        gt.eval(x, std::span<S>(gv));
        S g_ww = S(0.0);
        std::vector<S> w_low(4, S(0.0));
        for (int i = 0; i < 4; ++i) {
          for (int j = 0; j < 4; ++j) w_low[i] = w_low[i] + gv[i * 4 + j] * wv[j];
          g_ww = g_ww + w_low[i] * wv[i];
        }
        std::vector<S> P(16);
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j)
            P[i * 4 + j] = S(i == j ? 1.0 : 0.0) - wv[i] * w_low[j] / g_ww;
        for (int mn = 0; mn < 16; ++mn) {
          int mu = mn / 4, nu = mn % 4;
          S acc = S(0.0);
          for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
              acc = acc + P[a * 4 + mu] * Bv[a * 4 + b] * P[b * 4 + nu];
          out[mn] = acc;
        }
      },
      "c");
  return st;
}

MetricField fd_metric(const MetricField& g) {
  return MetricField(TensorField::as_finite_diff(g.tensor()), MetricSignature::Lorentzian, false);
}

// builds with side +1, probes the normal at the chart midpoint, and flips
// when the requested component does not point the requested way
template <class F>
Hypersurface oriented_surface(Chart ch, const MetricField& g, F emb, int comp, double want,
                              int nodes, const std::vector<int>& poles,
                              const std::vector<int>& closed) {
  auto make = [&](int side) {
    auto s = Hypersurface::from_embedding(ch, g, emb, side);
    s.set_nodes(nodes);
    for (int a : poles) s.set_pole(a);
    for (int a : closed) s.set_closed(a);
    return s;
  };
  auto s = make(1);
  std::vector<double> mid(ch.dim());
  for (int i = 0; i < ch.dim(); ++i) mid[i] = 0.5 * (ch.lo[i] + ch.hi[i]);
  auto fr = surf_frame_at<double>(s, mid);
  return fr.n[comp] * want < 0 ? make(-1) : s;
}

double max_abs_gap(const TensorField& a, const TensorField& b,
                   const std::vector<std::vector<double>>& pts) {
  double worst = 0;
  for (const auto& x : pts) {
    auto va = a.at(x), vb = b.at(x);
    for (std::size_t i = 0; i < va.size(); ++i)
      worst = std::max(worst, std::abs(va[i] - vb[i]));
  }
  return worst;
}

CheckResult scalar_result(std::string name, std::string anchor, double residual, double tol,
                          std::string mode) {
  CheckResult c;
  c.name = std::move(name);
  c.anchor = std::move(anchor);
  c.max_residual = residual;
  c.l2_residual = residual;
  c.tolerance = tol;
  c.mode = std::move(mode);
  c.pass = residual < tol;
  return c;
}

CheckResult control_result(std::string name, std::string anchor, double residual, double floor) {
  CheckResult c;
  c.name = std::move(name);
  c.anchor = std::move(anchor);
  c.max_residual = residual;
  c.l2_residual = residual;
  c.tolerance = floor;
  c.mode = "negative-control";
  c.pass = residual > floor;
  return c;
}

// ---- minkowski_dust ----

std::vector<SceneCheck> build_minkowski_dust(const Scene& s) {
  auto setup = [s]() {
    Chart M = box4("mink", 1.0);
    auto g = minkowski_metric(M);
    auto L = fluid_lagrangian(eos_dust());
    auto st = constant_state(M, {1, 0, 0, 0}, s.param("rho_bar"), 0.0);
    auto pts = interior_grid(M, s.grid, 0.05);
    return std::make_tuple(g, L, st, pts);
  };
  std::vector<SceneCheck> out;
  out.push_back({"euler-lagrange", "reduced Euler-Lagrange equations",
                 "uniform dust at rest balances exactly (eulerian_el_residual)", [s, setup]() {
                   auto [g, L, st, pts] = setup();
                   return residual_check(
                       "euler-lagrange", "",
                       eulerian_el_residual(L, g, st, pts, s.tol("euler-lagrange", 1e-12),
                                            "exact"));
                 }});
  out.push_back({"continuity", "matter current conservation",
                 "the comoving density is conserved", [s, setup]() {
                   auto [g, L, st, pts] = setup();
                   return residual_check(
                       "continuity", "",
                       continuity_residual(L, g, st, pts, s.tol("continuity", 1e-12), "exact"));
                 }});
  out.push_back({"stress-variants-agree", "infinitesimal covariance of the stress",
                 "state and metric assemblies of the stress match", [s, setup]() {
                   auto [g, L, st, pts] = setup();
                   auto Ta = stress_energy_field(L, g, st, StressVariant::FromState);
                   auto Tb = stress_energy_field(L, g, st, StressVariant::FromMetric);
                   return scalar_result("stress-variants-agree", "", max_abs_gap(Ta, Tb, pts),
                                        s.tol("stress-variants-agree", 1e-12), "exact");
                 }});
  out.push_back({"bianchi", "contracted Bianchi identity",
                 "div of the Einstein tensor vanishes", [s, setup]() {
                   auto [g, L, st, pts] = setup();
                   return residual_check(
                       "bianchi", "", bianchi_residual(g, pts, s.tol("bianchi", 1e-6), "exact"));
                 }});
  out.push_back({"velocity-shear-control", "reduced Euler-Lagrange equations",
                 "a sheared flow is not a dust solution", [s, setup]() {
                   auto [g, L, st, pts] = setup();
                   auto bad = st;
                   bad.w = TensorField::exact(
                       st.w.chart(), Shape{1, 0, 0},
                       [](auto x, auto out) {
                         using S = std::remove_cvref_t<decltype(out[0])>;
                         out[0] = S(1.0);
                         out[1] = 0.3 * sin(M_PI * x[1]);
                         out[2] = S(0.0);
                         out[3] = S(0.0);
                       },
                       "w_bad");
                   auto rf = eulerian_el_residual(L, g, bad, pts, 1.0, "exact");
                   return control_result("velocity-shear-control", "", rf.max_norm,
                                         100.0 * s.tol("euler-lagrange", 1e-12));
                 }});
  return out;
}

// ---- boosted_dust ----

std::vector<SceneCheck> build_boosted_dust(const Scene& s) {
  auto setup = [s]() {
    Chart D = box4("body", 1.0);
    Chart M = box4("mink", 2.3);
    auto g = minkowski_metric(M);
    double v = s.param("velocity");
    auto tube = boost_tube(D, M, v);
    double rb = s.param("rho_bar");
    auto rfm = make_reference_fields(
        D, [rb](auto) { return rb; }, [](auto) { return 0.0; });
    EulerianState st;
    st.w = tube_velocity_w(tube, rfm.W);
    st.rho = pushforward_field(tube, rfm.R);
    st.sigma = pushforward_field(tube, rfm.S);
    auto pts = interior_grid(Chart("probe", {-0.4, -0.4, -0.4, -0.4}, {0.4, 0.4, 0.4, 0.4}),
                             s.grid, 0.05);
    return std::make_tuple(g, fluid_lagrangian(eos_dust()), st, pts, v);
  };
  std::vector<SceneCheck> out;
  out.push_back({"euler-lagrange", "reduced Euler-Lagrange equations",
                 "boosted dust still balances", [s, setup]() {
                   auto [g, L, st, pts, v] = setup();
                   return residual_check(
                       "euler-lagrange", "",
                       eulerian_el_residual(L, g, st, pts, s.tol("euler-lagrange", 1e-8),
                                            "exact"));
                 }});
  out.push_back({"continuity", "matter current conservation",
                 "the pushed-forward density is conserved", [s, setup]() {
                   auto [g, L, st, pts, v] = setup();
                   return residual_check(
                       "continuity", "",
                       continuity_residual(L, g, st, pts, s.tol("continuity", 1e-10), "exact"));
                 }});
  out.push_back({"velocity-pushforward", "worldtube velocity kinematics",
                 "the flow field is the boosted four-velocity", [s, setup]() {
                   auto [g, L, st, pts, v] = setup();
                   double gamma = 1.0 / std::sqrt(1.0 - v * v);
                   double worst = 0;
                   for (const auto& x : pts) {
                     auto wv = st.w.at(x);
                     worst = std::max(worst, std::abs(wv[0] - gamma));
                     worst = std::max(worst, std::abs(wv[1] - gamma * v));
                     worst = std::max(worst, std::abs(wv[2]));
                     worst = std::max(worst, std::abs(wv[3]));
                   }
                   return scalar_result("velocity-pushforward", "", worst,
                                        s.tol("velocity-pushforward", 1e-9), "exact");
                 }});
  out.push_back({"density-drift-control", "matter current conservation",
                 "a time-drifting Eulerian density breaks conservation", [s, setup]() {
                   auto [g, L, st, pts, v] = setup();
                   auto bad = st;
                   bad.rho = sum_fields(
                       st.rho,
                       TensorField::derived(
                           st.rho.chart(), Shape{0, 0, 1}, {st.rho},
                           [r = st.rho](auto x, auto out) {
                             r.eval(x, out);
                             out[0] = out[0] * 0.3 * x[0];
                           },
                           "drift"),
                       1.0, "rho_bad");
                   auto rf = continuity_residual(L, g, bad, pts, 1.0, "exact");
                   return control_result("density-drift-control", "", rf.max_norm,
                                         100.0 * s.tol("continuity", 1e-10));
                 }});
  return out;
}

// ---- frw scenes ----

std::vector<SceneCheck> build_frw_dust(const Scene& s) {
  auto setup = [s]() {
    double t0 = s.param("t0");
    Chart ch("frw", {0.8 * t0, -0.5, -0.5, -0.5}, {1.3 * t0, 0.5, 0.5, 0.5});
    auto g = frw_metric(t0, 2.0 / 3.0, ch, "frw");
    auto L = fluid_lagrangian(eos_dust());
    double rb = 1.0 / (6.0 * M_PI * t0 * t0);
    auto st = constant_state(ch, {1, 0, 0, 0}, rb, 0.0);
    auto pts = interior_grid(ch, s.grid, 0.05);
    return std::make_tuple(ch, g, L, st, pts, rb);
  };
  std::vector<SceneCheck> out;
  out.push_back({"euler-lagrange", "reduced Euler-Lagrange equations",
                 "comoving dust on the matter-dominated background", [s, setup]() {
                   auto [ch, g, L, st, pts, rb] = setup();
                   return residual_check(
                       "euler-lagrange", "",
                       eulerian_el_residual(L, g, st, pts, s.tol("euler-lagrange", 1e-8),
                                            "exact"));
                 }});
  out.push_back({"continuity", "matter current conservation", "comoving density is constant",
                 [s, setup]() {
                   auto [ch, g, L, st, pts, rb] = setup();
                   return residual_check(
                       "continuity", "",
                       continuity_residual(L, g, st, pts, s.tol("continuity", 1e-12), "exact"));
                 }});
  out.push_back({"einstein-interior", "interior Einstein equation sourced by the stress",
                 "Friedmann constraints hold with stencil derivatives", [s, setup]() {
                   auto [ch, g, L, st, pts, rb] = setup();
                   MatchedSpacetime m{GravityRegion{fd_metric(g), ch.lo, ch.hi, 4, L, st, {}},
                                      {}, {}, {}};
                   return residual_check(
                       "einstein-interior", "",
                       einstein_interior_residual(m, pts, s.tol("einstein-interior", 1e-4),
                                                  "fd"));
                 }});
  out.push_back({"convective-el", "convective-picture Euler-Lagrange equations",
                 "the body-frame equations agree through the identity embedding",
                 [s, setup]() {
                   auto [ch, g, L, st, pts, rb] = setup();
                   double rbv = rb;
                   auto rfm = make_reference_fields(
                       ch, [rbv](auto) { return rbv; }, [](auto) { return 0.0; });
                   return residual_check("convective-el", "",
                                         convective_el_residual(L, g.tensor(), rfm, pts,
                                                                s.tol("convective-el", 1e-6),
                                                                "exact"));
                 }});
  out.push_back({"stress-divergence-bound", "stress conservation bounded by Bianchi",
                 "div of the stress stays under the Einstein divergence bound", [s, setup]() {
                   auto [ch, g, L, st, pts, rb] = setup();
                   auto cmp = stress_divergence_comparison(L, g, st, 8.0 * M_PI, pts, 0.0,
                                                           "exact");
                   double slack = s.tol("stress-divergence-bound", 1e-6);
                   double excess = std::max(0.0, cmp.stress.max_norm - cmp.einstein.max_norm);
                   return scalar_result("stress-divergence-bound", "", excess, slack, "exact");
                 }});
  out.push_back({"bianchi", "contracted Bianchi identity", "div of the Einstein tensor",
                 [s, setup]() {
                   auto [ch, g, L, st, pts, rb] = setup();
                   return residual_check(
                       "bianchi", "", bianchi_residual(g, pts, s.tol("bianchi", 1e-6), "exact"));
                 }});
  out.push_back({"density-drift-control", "reduced Euler-Lagrange equations",
                 "a drifting comoving density is not a solution", [s, setup]() {
                   auto [ch, g, L, st, pts, rb] = setup();
                   auto bad = st;
                   double rbv = rb, t0 = s.param("t0");
                   bad.rho = TensorField::exact(
                       ch, Shape{0, 0, 1},
                       [rbv, t0](auto x, auto out) {
                         out[0] = rbv * (1.0 + 0.3 * (x[0] - t0));
                       },
                       "rho_bad");
                   auto rf = eulerian_el_residual(L, g, bad, pts, 1.0, "exact");
                   return control_result("density-drift-control", "", rf.max_norm,
                                         100.0 * s.tol("euler-lagrange", 1e-8));
                 }});
  return out;
}

std::vector<SceneCheck> build_frw_perfect_fluid(const Scene& s) {
  auto setup = [s]() {
    double t0 = s.param("t0");
    Chart ch("frw", {0.8 * t0, -0.5, -0.5, -0.5}, {1.3 * t0, 0.5, 0.5, 0.5});
    auto g = frw_metric(t0, 0.5, ch, "frw");
    double rho0 = 1.0 / (32.0 * M_PI * t0 * t0);
    double A = 3.0 / (32.0 * M_PI * t0 * t0 * std::pow(rho0, 4.0 / 3.0));
    auto L = fluid_lagrangian(eos_gamma_law(A, 1.0 / 3.0, 1.0));
    auto st = constant_state(ch, {1, 0, 0, 0}, rho0, 0.5 * rho0);
    auto pts = interior_grid(ch, s.grid, 0.05);
    return std::make_tuple(ch, g, L, st, pts);
  };
  std::vector<SceneCheck> out;
  out.push_back({"fluid-momentum", "projected momentum balance",
                 "radiation fluid momentum equation", [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   auto eqs =
                       fluid_equations_residual(L, g, st, pts, s.tol("fluid-momentum", 1e-8),
                                                "exact");
                   return residual_check("fluid-momentum", "", eqs.momentum);
                 }});
  out.push_back({"fluid-energy", "entropy advection along the flow",
                 "radiation fluid energy equation", [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   auto eqs = fluid_equations_residual(L, g, st, pts, s.tol("fluid-energy", 1e-8),
                                                       "exact");
                   return residual_check("fluid-energy", "", eqs.energy);
                 }});
  out.push_back({"state-consistency", "equivalence of projected and full equations",
                 "projected system matches the Euler-Lagrange residual", [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   auto eqs = fluid_equations_residual(L, g, st, pts,
                                                       s.tol("state-consistency", 1e-8), "exact");
                   return residual_check("state-consistency", "", eqs.consistency);
                 }});
  out.push_back({"euler-lagrange", "reduced Euler-Lagrange equations", "full residual",
                 [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   return residual_check(
                       "euler-lagrange", "",
                       eulerian_el_residual(L, g, st, pts, s.tol("euler-lagrange", 1e-8),
                                            "exact"));
                 }});
  out.push_back({"continuity", "matter current conservation", "comoving density is constant",
                 [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   return residual_check(
                       "continuity", "",
                       continuity_residual(L, g, st, pts, s.tol("continuity", 1e-12), "exact"));
                 }});
  out.push_back({"pressure-profile", "closed-form radiation pressure",
                 "p = 1/(32 pi t^2) on the radiation background", [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   auto p = pressure_field(L, g, st);
                   double worst = 0;
                   for (const auto& x : pts)
                     worst = std::max(worst,
                                      std::abs(p.at(x)[0] - 1.0 / (32.0 * M_PI * x[0] * x[0])));
                   return scalar_result("pressure-profile", "", worst,
                                        s.tol("pressure-profile", 1e-10), "exact");
                 }});
  out.push_back({"einstein-interior", "interior Einstein equation sourced by the stress",
                 "Friedmann constraints with stencil derivatives", [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   MatchedSpacetime m{GravityRegion{fd_metric(g), ch.lo, ch.hi, 4, L, st, {}},
                                      {}, {}, {}};
                   return residual_check(
                       "einstein-interior", "",
                       einstein_interior_residual(m, pts, s.tol("einstein-interior", 1e-4),
                                                  "fd"));
                 }});
  out.push_back({"stress-divergence-bound", "stress conservation bounded by Bianchi",
                 "div of the stress stays under the Einstein divergence bound", [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   auto cmp = stress_divergence_comparison(L, g, st, 8.0 * M_PI, pts, 0.0,
                                                           "exact");
                   double slack = s.tol("stress-divergence-bound", 1e-6);
                   double excess = std::max(0.0, cmp.stress.max_norm - cmp.einstein.max_norm);
                   return scalar_result("stress-divergence-bound", "", excess, slack, "exact");
                 }});
  out.push_back({"bianchi", "contracted Bianchi identity", "div of the Einstein tensor",
                 [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   return residual_check(
                       "bianchi", "", bianchi_residual(g, pts, s.tol("bianchi", 1e-6), "exact"));
                 }});
  out.push_back({"density-drift-control", "projected momentum balance",
                 "a drifting comoving density breaks the balance", [s, setup]() {
                   auto [ch, g, L, st, pts] = setup();
                   auto bad = st;
                   double t0 = s.param("t0");
                   double rho0 = 1.0 / (32.0 * M_PI * t0 * t0);
                   bad.rho = TensorField::exact(
                       ch, Shape{0, 0, 1},
                       [rho0, t0](auto x, auto out) {
                         out[0] = rho0 * (1.0 + 0.3 * (x[0] - t0));
                       },
                       "rho_bad");
                   auto rf = eulerian_el_residual(L, g, bad, pts, 1.0, "exact");
                   return control_result("density-drift-control", "", rf.max_norm,
                                         100.0 * s.tol("fluid-momentum", 1e-8));
                 }});
  return out;
}

// ---- schwarzschild_exterior ----

std::vector<SceneCheck> build_schwarzschild(const Scene& s) {
  auto setup = [s]() {
    double m = s.param("mass");
    auto g = schwarzschild_metric(m, 1.0, 4.0);
    auto pts = interior_grid(g.tensor().chart(), s.grid, 0.1);
    return std::make_pair(g, pts);
  };
  std::vector<SceneCheck> out;
  out.push_back({"einstein-vacuum", "vacuum Einstein equation",
                 "the exterior solution is Ricci flat", [s, setup]() {
                   auto [g, pts] = setup();
                   return residual_check("einstein-vacuum", "",
                                         einstein_vacuum_residual(
                                             g, pts, s.tol("einstein-vacuum", 1e-6), "exact"));
                 }});
  out.push_back({"bianchi", "contracted Bianchi identity", "div of the Einstein tensor",
                 [s, setup]() {
                   auto [g, pts] = setup();
                   return residual_check(
                       "bianchi", "", bianchi_residual(g, pts, s.tol("bianchi", 1e-6), "exact"));
                 }});
  out.push_back({"gauss-codazzi", "Gauss-Codazzi relations",
                 "constraint identities on a constant-radius tube", [s, setup]() {
                   auto [g, pts] = setup();
                   Chart tc("tube", {0.1, 0.4, 0.0}, {0.9, M_PI - 0.4, 2 * M_PI});
                   auto tube = Hypersurface::from_embedding(
                       tc, g,
                       [](auto Y, auto x) {
                         using S = std::remove_cvref_t<decltype(x[0])>;
                         x[0] = Y[0];
                         x[1] = S(2.2);
                         x[2] = Y[1];
                         x[3] = Y[2];
                       },
                       1);
                   tube.set_closed(2);
                   return residual_check(
                       "gauss-codazzi", "",
                       gauss_codazzi_residual(tube, interior_grid(tc, 2, 0.2),
                                              s.tol("gauss-codazzi", 1e-5), "exact"));
                 }});
  out.push_back({"mass-profile-control", "vacuum Einstein equation",
                 "a radius-dependent mass is not vacuum", [s, setup]() {
                   auto [g, pts] = setup();
                   double m = s.param("mass");
                   Chart ch = g.tensor().chart();
                   auto bad = MetricField(
                       TensorField::exact(
                           ch, Shape{0, 2, 0},
                           [m](auto x, auto out) {
                             using S = std::remove_cvref_t<decltype(out[0])>;
                             for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
                             S mr = m * (1.0 + 0.1 * (x[1] - 2.2));
                             S f = 1.0 - 2.0 * mr / x[1];
                             S st = sin(x[2]);
                             out[0] = -f;
                             out[5] = 1.0 / f;
                             out[10] = x[1] * x[1];
                             out[15] = x[1] * x[1] * st * st;
                           },
                           "schw_bad"),
                       MetricSignature::Lorentzian, false);
                   auto rf = einstein_vacuum_residual(bad, pts, 1.0, "exact");
                   return control_result("mass-profile-control", "", rf.max_norm, 1e-3);
                 }});
  return out;
}

// ---- elastic blocks ----

struct BlockSetup {
  MetricField g;
  ContinuumLagrangian L;
  EulerianState st;
  std::vector<std::vector<double>> pts;
  double stretch;
  double mu;
};

BlockSetup block_setup(const Scene& s, double stretch) {
  Chart D = box4("body", 1.0);
  Chart M = box4("mink", 2.0);
  auto g = minkowski_metric(M);
  double mu = s.param("shear_modulus");
  auto tube = stretch_tube(D, M, stretch);
  auto rfm = make_reference_fields(
      D, [](auto) { return 1.0; }, [](auto) { return 0.0; });
  rfm.G = make_body_metric(D, [](auto, auto out) {
    using S = std::remove_cvref_t<decltype(out[0])>;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
    out[0] = S(1.0);
    out[4] = S(1.0);
    out[8] = S(1.0);
  });
  EulerianState st;
  st.w = tube_velocity_w(tube, rfm.W);
  st.rho = pushforward_field(tube, rfm.R);
  st.sigma = pushforward_field(tube, rfm.S);
  st.c = strain_field(tube, rfm.G);
  auto pts = interior_grid(Chart("probe", {-0.4, -0.4, -0.4, -0.4}, {0.4, 0.4, 0.4, 0.4}),
                           s.grid, 0.05);
  return {g, elastic_lagrangian(stored_stvenant(mu)), st, pts, stretch, mu};
}

std::vector<SceneCheck> build_elastic_static(const Scene& s) {
  std::vector<SceneCheck> out;
  out.push_back({"euler-lagrange", "reduced Euler-Lagrange equations",
                 "the relaxed block is static", [s]() {
                   auto b = block_setup(s, 1.0);
                   return residual_check(
                       "euler-lagrange", "",
                       eulerian_el_residual(b.L, b.g, b.st, b.pts,
                                            s.tol("euler-lagrange", 1e-12), "exact"));
                 }});
  out.push_back({"traction-free", "free-boundary condition",
                 "the relaxed block carries no boundary traction", [s]() {
                   auto b = block_setup(s, 1.0);
                   std::vector<BoundarySample> faces{{{0.0, 1.0, 0.1, -0.2}, {0, 1, 0, 0}},
                                                     {{0.1, -1.0, 0.2, 0.3}, {0, -1, 0, 0}},
                                                     {{-0.1, 0.2, 0.1, 1.0}, {0, 0, 0, 1}}};
                   return residual_check("traction-free", "",
                                         boundary_traction_residual(
                                             b.L, b.g, b.st, faces,
                                             s.tol("traction-free", 1e-12), "exact"));
                 }});
  out.push_back({"isotropy-identity", "material frame indifference",
                 "c- and p-gradients of the stored energy cancel on rotations", [s]() {
                   auto en = stored_stvenant(s.param("shear_modulus"));
                   RandomStream rng(s.seed);
                   int d = 4;
                   double worst = 0;
                   for (int trial = 0; trial < 8; ++trial) {
                     auto gv = detail::random_metric_components(d, rng, 0.15);
                     auto m = metric_data_from_components<double>(d, gv, "isotropy");
                     std::vector<double> w(d, 0.0);
                     w[0] = 1.0;
                     for (int i = 1; i < d; ++i) w[i] = 0.25 * rng.sym();
                     double g_ww = 0;
                     for (int i = 0; i < d; ++i)
                       for (int j = 0; j < d; ++j) g_ww += gv[i * d + j] * w[i] * w[j];
                     double alpha = std::sqrt(-g_ww);
                     std::vector<double> u(d);
                     for (int i = 0; i < d; ++i) u[i] = w[i] / alpha;
                     auto pr = projection_at<double>(m, u, 1.0);
                     auto c_low = detail::on_shell_strain(d, pr, rng, 0.25);
                     auto dc = en.varpi_dc<double>(d, c_low, pr.p_up);
                     auto dp = en.varpi_dp<double>(d, c_low, pr.p_up);
                     for (int mu = 0; mu < d; ++mu)
                       for (int nu = 0; nu < d; ++nu) {
                         double acc = 0;
                         for (int ga = 0; ga < d; ++ga)
                           acc += dc[mu * d + ga] * c_low[ga * d + nu] +
                                  dp[mu * d + ga] * pr.p_low[ga * d + nu];
                         worst = std::max(worst, std::abs(acc));
                       }
                   }
                   return scalar_result("isotropy-identity", "", worst,
                                        s.tol("isotropy-identity", 1e-8), "exact");
                 }});
  out.push_back({"covariance-material", "body relabeling covariance",
                 "isotropic stored energy is relabeling covariant", [s]() {
                   auto rep = material_covariance_check(
                       elastic_lagrangian(stored_stvenant(s.param("shear_modulus"))),
                       RandomStream(s.seed), 16);
                   return scalar_result("covariance-material", "", rep.max_residual,
                                        s.tol("covariance-material", 1e-6), "exact");
                 }});
  out.push_back({"covariance-spacetime", "spacetime diffeomorphism covariance",
                 "the elastic Lagrangian transforms as a density", [s]() {
                   auto rep = spacetime_covariance_check(
                       elastic_lagrangian(stored_stvenant(s.param("shear_modulus"))),
                       RandomStream(s.seed + 1), 16);
                   return scalar_result("covariance-spacetime", "", rep.max_residual,
                                        s.tol("covariance-spacetime", 1e-6), "exact");
                 }});
  out.push_back({"fiber-anisotropy-control", "body relabeling covariance",
                 "a pinned fiber direction breaks relabeling covariance", [s]() {
                   auto rep = material_covariance_check(
                       elastic_lagrangian(
                           stored_stvenant_fiber(s.param("shear_modulus"), 0.8, {0, 1, 0, 0})),
                       RandomStream(s.seed), 16);
                   return control_result("fiber-anisotropy-control", "", rep.max_residual, 1e-2);
                 }});
  return out;
}

std::vector<SceneCheck> build_elastic_stretched(const Scene& s) {
  std::vector<SceneCheck> out;
  out.push_back({"euler-lagrange", "reduced Euler-Lagrange equations",
                 "homogeneous stretch balances", [s]() {
                   auto b = block_setup(s, s.param("stretch"));
                   return residual_check(
                       "euler-lagrange", "",
                       eulerian_el_residual(b.L, b.g, b.st, b.pts,
                                            s.tol("euler-lagrange", 1e-9), "exact"));
                 }});
  out.push_back({"continuity", "matter current conservation", "stretched density conserved",
                 [s]() {
                   auto b = block_setup(s, s.param("stretch"));
                   return residual_check("continuity", "",
                                         continuity_residual(b.L, b.g, b.st, b.pts,
                                                             s.tol("continuity", 1e-10),
                                                             "exact"));
                 }});
  out.push_back({"traction-closed-form", "free-surface traction of the stretched block",
                 "leftover traction matches the closed form", [s]() {
                   auto b = block_setup(s, s.param("stretch"));
                   double sx = b.stretch;
                   std::vector<BoundarySample> faces{{{0.0, sx, 0.1, -0.2}, {0, 1, 0, 0}}};
                   auto tr = boundary_traction_residual(b.L, b.g, b.st, faces, 1.0, "exact");
                   double expect =
                       b.mu * std::pow(sx, -5.0) * (1.0 - 1.0 / (sx * sx));
                   return scalar_result("traction-closed-form", "",
                                        std::abs(tr.max_norm - expect),
                                        s.tol("traction-closed-form", 1e-9), "exact");
                 }});
  out.push_back({"stress-divergence-fd", "coordinate divergence of the stress",
                 "stencil divergence of the assembled stress vanishes", [s]() {
                   auto b = block_setup(s, s.param("stretch"));
                   auto T = stress_energy_field(b.L, b.g, b.st);
                   auto Tfd = TensorField::as_finite_diff(T, 1e-5);
                   double worst = 0;
                   for (const auto& x : b.pts) {
                     for (int nu = 0; nu < 4; ++nu) {
                       double acc = 0;
                       for (int mu = 0; mu < 4; ++mu) acc += Tfd.partial(x, mu)[mu * 4 + nu];
                       worst = std::max(worst, std::abs(acc));
                     }
                   }
                   return scalar_result("stress-divergence-fd", "", worst,
                                        s.tol("stress-divergence-fd", 1e-6), "fd");
                 }});
  out.push_back({"strain-gradient-control", "reduced Euler-Lagrange equations",
                 "an inhomogeneous stretch is out of balance", [s]() {
                   auto b = block_setup(s, s.param("stretch"));
                   double sx = b.stretch;
                   auto bad = b.st;
                   bad.c = TensorField::exact(
                       b.st.c.chart(), Shape{0, 2, 0},
                       [sx](auto x, auto out) {
                         using S = std::remove_cvref_t<decltype(out[0])>;
                         for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
                         S sl = sx * (1.0 + 0.05 * sin(0.5 * x[1]));
                         out[5] = 1.0 / (sl * sl);
                         out[10] = S(1.0);
                         out[15] = S(1.0);
                       },
                       "c_bad");
                   auto rf = eulerian_el_residual(b.L, b.g, bad, b.pts, 1.0, "exact");
                   return control_result("strain-gradient-control", "", rf.max_norm,
                                         100.0 * s.tol("euler-lagrange", 1e-9));
                 }});
  return out;
}

// ---- euclidean_sphere ----

std::vector<SceneCheck> build_euclidean_sphere(const Scene& s) {
  auto setup = [s]() {
    Chart A3("R3", {-1.6, -1.6, -1.6}, {1.6, 1.6, 1.6});
    auto amb = euclidean_metric(A3);
    double r = s.param("radius");
    auto surf = sphere_surface(amb, r);
    surf.set_nodes(32);
    return std::make_pair(amb, surf);
  };
  std::vector<SceneCheck> out;
  out.push_back({"ghy-closed-form", "Gibbons-Hawking-York term on the round sphere",
                 "the boundary integral equals 8 pi r", [s, setup]() {
                   auto [amb, surf] = setup();
                   double r = s.param("radius");
                   double want = 8.0 * M_PI * r;
                   double got = ghy_integral(surf, 1.0);
                   return scalar_result("ghy-closed-form", "", std::abs(got - want) / want,
                                        s.tol("ghy-closed-form", 1e-6), "exact");
                 }});
  out.push_back({"ghy-surface-variation", "first variation under normal displacement",
                 "moving the sphere outward matches d/dr of the closed form", [s, setup]() {
                   auto [amb, surf] = setup();
                   auto f = TensorField::constant(surf.chart(), Shape{0, 0, 0}, {1.0}, "f");
                   auto X = TensorField::constant(surf.chart(), Shape{1, 0, 0}, {0.0, 0.0}, "X");
                   double got = ghy_surface_variation(surf, f, X);
                   double want = 8.0 * M_PI;
                   return scalar_result("ghy-surface-variation", "",
                                        std::abs(got - want) / want,
                                        s.tol("ghy-surface-variation", 1e-6), "exact");
                 }});
  out.push_back({"ghy-metric-variation", "first variation under a metric perturbation",
                 "the variation formula matches a finite-difference probe", [s, setup]() {
                   auto [amb, surf] = setup();
                   surf.set_nodes(20);
                   RandomStream rng(s.seed);
                   auto dg = random_symmetric_field(amb.tensor().chart(), rng, 0.3, "dg");
                   double an = ghy_metric_variation(surf, dg);
                   auto base = amb.tensor();
                   auto F = [&](double eps) {
                     auto ge = MetricField(sum_fields(base, dg, eps, "g_eps"),
                                           MetricSignature::Riemannian, false);
                     return ghy_integral(surf.with_ambient(ge), 1.0);
                   };
                   double fd = fd_variation(F, 1e-4);
                   double denom = std::max(std::abs(fd), 1e-9);
                   return scalar_result("ghy-metric-variation", "", std::abs(an - fd) / denom,
                                        s.tol("ghy-metric-variation", 1e-4), "fd");
                 }});
  out.push_back({"gauss-codazzi", "Gauss-Codazzi relations", "constraints on the round sphere",
                 [s, setup]() {
                   auto [amb, surf] = setup();
                   return residual_check(
                       "gauss-codazzi", "",
                       gauss_codazzi_residual(surf, interior_grid(surf.chart(), 3, 0.15),
                                              s.tol("gauss-codazzi", 1e-5), "exact"));
                 }});
  out.push_back({"quadrature-refinement", "Gauss-Legendre node doubling",
                 "doubling the polar rule improves the integral tenfold", [s, setup]() {
                   auto [amb, surf] = setup();
                   double want = 8.0 * M_PI * s.param("radius");
                   auto err = [&](int n) {
                     auto sn = surf;
                     sn.set_nodes(n);
                     return std::abs(ghy_integral(sn, 1.0) - want);
                   };
                   double e4 = err(4), e8 = err(8);
                   CheckResult c;
                   c.name = "quadrature-refinement";
                   c.max_residual = e8;
                   c.l2_residual = e8;
                   c.tolerance = e4 / 10.0;
                   c.mode = "convergence";
                   c.pass = e8 < c.tolerance;
                   return c;
                 }});
  out.push_back({"radius-offset-control", "Gibbons-Hawking-York term on the round sphere",
                 "an inflated sphere misses the closed form", [s, setup]() {
                   auto [amb, surf] = setup();
                   double r = s.param("radius");
                   auto off = sphere_surface(amb, 1.01 * r);
                   off.set_nodes(32);
                   double want = 8.0 * M_PI * r;
                   double got = ghy_integral(off, 1.0);
                   return control_result("radius-offset-control", "",
                                         std::abs(got - want) / want,
                                         100.0 * s.tol("ghy-closed-form", 1e-6));
                 }});
  return out;
}

// ---- random_smooth ----

std::vector<SceneCheck> build_random_smooth(const Scene& s) {
  std::vector<SceneCheck> out;
  out.push_back({"lie-contraction", "Lie-derivative contraction identity",
                 "both divergence forms of the identity hold", [s]() {
                   Chart ch = box4("M", 1.0);
                   RandomStream rng(s.seed);
                   auto g = perturbed_minkowski(ch, rng, s.param("amplitude"));
                   auto conn = Connection::levi_civita(g);
                   double worst = 0;
                   for (int trial = 0; trial < 6; ++trial) {
                     auto k = random_tensor_field(ch, Shape{1, 1, 0}, rng, 0.9, "k");
                     auto pi = random_tensor_field(ch, Shape{1, 1, 1}, rng, 0.9, "pi");
                     auto zeta = random_vector_field(ch, rng, 0.8, "zeta");
                     for (const auto& x : interior_grid(ch, 2, 0.25)) {
                       auto r = contraction_identity_check(k, pi, zeta, conn, x);
                       worst = std::max({worst, r.residual_partial, r.residual_covariant});
                     }
                   }
                   return scalar_result("lie-contraction", "", worst,
                                        s.tol("lie-contraction", 1e-8), "exact");
                 }});
  out.push_back({"lie-flow-oracle", "Lie derivative against the flow pullback",
                 "algebraic Lie derivative matches the integrated flow", [s]() {
                   Chart ch = box4("M", 1.0);
                   RandomStream rng(s.seed + 7);
                   double worst = 0;
                   for (int trial = 0; trial < 4; ++trial) {
                     auto k = random_tensor_field(ch, Shape{1, 1, 0}, rng, 0.8, "k");
                     auto zeta = random_vector_field(ch, rng, 0.3, "zeta");
                     for (const auto& x : interior_grid(ch, 2, 0.3)) {
                       auto lie = lie_derivative_at<double>(k, zeta, x);
                       auto orc = lie_flow_oracle(k, zeta, x, 5e-4);
                       for (std::size_t i = 0; i < lie.size(); ++i)
                         worst = std::max(worst, std::abs(lie[i] - orc[i]));
                     }
                   }
                   return scalar_result("lie-flow-oracle", "", worst,
                                        s.tol("lie-flow-oracle", 1e-5), "fd");
                 }});
  out.push_back({"covariance-fluid", "spacetime diffeomorphism covariance",
                 "the fluid Lagrangian transforms as a density", [s]() {
                   auto rep = spacetime_covariance_check(
                       fluid_lagrangian(eos_gamma_law(0.8, 1.4, 0.3)), RandomStream(s.seed), 20);
                   return scalar_result("covariance-fluid", "", rep.max_residual,
                                        s.tol("covariance-fluid", 1e-6), "exact");
                 }});
  out.push_back({"covariance-elastic", "spacetime diffeomorphism covariance",
                 "the isotropic elastic Lagrangian transforms as a density", [s]() {
                   auto rep = spacetime_covariance_check(elastic_lagrangian(stored_stvenant(0.9)),
                                                         RandomStream(s.seed + 3), 20);
                   return scalar_result("covariance-elastic", "", rep.max_residual,
                                        s.tol("covariance-elastic", 1e-6), "exact");
                 }});
  out.push_back({"covariance-identity", "infinitesimal covariance identity",
                 "the pointwise gradient identity closes", [s]() {
                   RandomStream rng(s.seed + 11);
                   auto L = elastic_lagrangian(stored_stvenant(0.7));
                   int d = 4;
                   double worst = 0;
                   for (int trial = 0; trial < 10; ++trial) {
                     auto gv = detail::random_metric_components(d, rng, 0.15);
                     auto m = metric_data_from_components<double>(d, gv, "covariance");
                     std::vector<double> w(d, 0.0);
                     w[0] = 1.0;
                     for (int i = 1; i < d; ++i) w[i] = 0.25 * rng.sym();
                     double rb = 0.5 + 1.5 * rng.uniform();
                     double sb = rb * 0.5 * rng.uniform();
                     double g_ww = 0;
                     for (int i = 0; i < d; ++i)
                       for (int j = 0; j < d; ++j) g_ww += gv[i * d + j] * w[i] * w[j];
                     std::vector<double> u(d);
                     for (int i = 0; i < d; ++i) u[i] = w[i] / std::sqrt(-g_ww);
                     auto pr = projection_at<double>(m, u, 1.0);
                     auto c_low = detail::on_shell_strain(d, pr, rng, 0.2);
                     worst = std::max(worst,
                                      covariance_identity_residual(L, m, w, rb, sb, c_low));
                   }
                   return scalar_result("covariance-identity", "", worst,
                                        s.tol("covariance-identity", 1e-8), "exact");
                 }});
  out.push_back({"stress-variants-agree", "infinitesimal covariance of the stress",
                 "state and metric stress assemblies agree on random fields", [s]() {
                   Chart ch = box4("M", 1.0);
                   RandomStream rng(s.seed + 5);
                   auto g = perturbed_minkowski(ch, rng, s.param("amplitude"));
                   auto st = smooth_state(ch, rng, g.tensor(), true);
                   auto L = elastic_lagrangian(stored_stvenant(0.8));
                   auto Ta = stress_energy_field(L, g, st, StressVariant::FromState);
                   auto Tb = stress_energy_field(L, g, st, StressVariant::FromMetric);
                   return scalar_result("stress-variants-agree", "",
                                        max_abs_gap(Ta, Tb, interior_grid(ch, 2, 0.2)),
                                        s.tol("stress-variants-agree", 1e-8), "exact");
                 }});
  out.push_back({"chain-rule", "point dependence of the Lagrangian",
                 "the chain-rule residual of the density closes", [s]() {
                   Chart ch = box4("M", 1.0);
                   RandomStream rng(s.seed + 9);
                   auto g = perturbed_minkowski(ch, rng, s.param("amplitude"));
                   auto st = smooth_state(ch, rng, g.tensor(), false);
                   auto L = fluid_lagrangian(eos_gamma_law(0.7, 1.3, 0.2));
                   auto res = lagrangian_chain_rule_residual(L, g, st);
                   double worst = 0;
                   for (const auto& x : interior_grid(ch, 2, 0.2))
                     for (double v : res.at(x)) worst = std::max(worst, std::abs(v));
                   return scalar_result("chain-rule", "", worst, s.tol("chain-rule", 1e-8),
                                        "exact");
                 }});
  out.push_back({"moving-domain", "moving-domain transport identity",
                 "d/deps of the re-meshed action equals bulk plus flux", [s]() {
                   auto gap = moving_domain_gap(s.seed);
                   return scalar_result("moving-domain", "", gap.gap,
                                        s.tol("moving-domain", 1e-4), "fd");
                 }});
  out.push_back({"bianchi", "contracted Bianchi identity",
                 "div of the Einstein tensor on the perturbed metric", [s]() {
                   Chart ch = box4("M", 1.0);
                   RandomStream rng(s.seed);
                   auto g = perturbed_minkowski(ch, rng, s.param("amplitude"));
                   return residual_check("bianchi", "",
                                         bianchi_residual(g, interior_grid(ch, 2, 0.2),
                                                          s.tol("bianchi", 1e-6), "exact"));
                 }});
  out.push_back({"flow-reverse-control", "Lie derivative against the flow pullback",
                 "flowing along the reversed vector does not match", [s]() {
                   Chart ch = box4("M", 1.0);
                   RandomStream rng(s.seed + 7);
                   auto k = random_tensor_field(ch, Shape{1, 1, 0}, rng, 0.8, "k");
                   auto zeta = random_vector_field(ch, rng, 0.3, "zeta");
                   auto mzeta = sum_fields(zeta, zeta, -2.0, "minus_zeta");
                   double worst = 0;
                   for (const auto& x : interior_grid(ch, 2, 0.3)) {
                     auto lie = lie_derivative_at<double>(k, zeta, x);
                     auto orc = lie_flow_oracle(k, mzeta, x, 5e-4);
                     for (std::size_t i = 0; i < lie.size(); ++i)
                       worst = std::max(worst, std::abs(lie[i] - orc[i]));
                   }
                   return control_result("flow-reverse-control", "", worst,
                                         100.0 * s.tol("lie-flow-oracle", 1e-5));
                 }});
  return out;
}

// ---- constant_density_star ----

MatchedSpacetime scene_star(const Scene& s, double mass_scale) {
  auto star = make_star(s.param("radius"), s.param("energy_density"));
  return star_spacetime(star, mass_scale, s.param("outer_radius"), s.param("time_lo"),
                        s.param("time_hi"), int(s.param("nodes")));
}

std::vector<SceneCheck> build_star(const Scene& s) {
  double scale = s.param("exterior_mass_scale");
  std::vector<SceneCheck> out;

  auto junction_piece = [s, scale](std::string which) {
    return [s, scale, which]() {
      auto m = scene_star(s, scale);
      auto spts = interior_grid(m.interface_surface->chart(), 3, 0.1);
      auto jr = junction_check(*m.interface_surface, m.interior.g, m.exterior->g, spts,
                               s.tol(which, 1e-5), "exact");
      const ResidualField* rf = &jr.h_jump;
      if (which == "junction-K") rf = &jr.K_jump;
      if (which == "junction-G-nn") rf = &jr.energy_jump;
      if (which == "junction-G-tangent-n") rf = &jr.momentum_jump;
      return residual_check(which, "", *rf);
    };
  };
  out.push_back({"junction-h", "first junction condition, induced metric",
                 "both sides induce the same interface metric", junction_piece("junction-h")});
  out.push_back({"junction-K", "second junction condition, extrinsic curvature",
                 "extrinsic curvatures agree across the interface",
                 junction_piece("junction-K")});
  out.push_back({"junction-G-nn", "O'Brien-Synge jump conditions",
                 "normal-normal Einstein component is continuous",
                 junction_piece("junction-G-nn")});
  out.push_back({"junction-G-tangent-n", "O'Brien-Synge jump conditions",
                 "tangent-normal Einstein components are continuous",
                 junction_piece("junction-G-tangent-n")});

  out.push_back({"euler-lagrange-interior", "reduced Euler-Lagrange equations",
                 "hydrostatic balance of the interior fluid", [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto ch = Chart("in", m.interior.lo, m.interior.hi);
                   auto pts = interior_grid(ch, s.grid, 0.08);
                   return residual_check(
                       "euler-lagrange-interior", "",
                       eulerian_el_residual(*m.interior.matter, m.interior.g, *m.interior.state,
                                            pts, s.tol("euler-lagrange-interior", 1e-8),
                                            "exact"));
                 }});
  out.push_back({"einstein-interior", "interior Einstein equation sourced by the stress",
                 "the interior solution sources its own curvature", [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto ch = Chart("in", m.interior.lo, m.interior.hi);
                   auto pts = interior_grid(ch, s.grid, 0.08);
                   return residual_check(
                       "einstein-interior", "",
                       einstein_interior_residual(m, pts, s.tol("einstein-interior", 1e-4),
                                                  "exact"));
                 }});
  out.push_back({"einstein-exterior", "vacuum Einstein equation",
                 "the exterior is Schwarzschild vacuum", [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto ch = Chart("out", m.exterior->lo, m.exterior->hi);
                   auto pts = interior_grid(ch, s.grid, 0.08);
                   return residual_check(
                       "einstein-exterior", "",
                       einstein_exterior_residual(m, pts, s.tol("einstein-exterior", 1e-6),
                                                  "exact"));
                 }});
  out.push_back({"boundary-traction", "traction of the stress on the interface",
                 "the surface pressure vanishes", [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto spts = interior_grid(m.interface_surface->chart(), 3, 0.1);
                   auto samples = interface_samples(*m.interface_surface, spts);
                   return residual_check(
                       "boundary-traction", "",
                       boundary_traction_residual(*m.interior.matter, m.interior.g,
                                                  *m.interior.state, samples,
                                                  s.tol("boundary-traction", 1e-6), "exact"));
                 }});
  out.push_back({"junction-implies-free-boundary",
                 "matched junction forces a traction-free interface",
                 "the implication chain closes on the matched star", [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto cfg = MatchedReportConfig{};
                   cfg.scene = s.name;
                   cfg.grid = s.grid;
                   cfg.tol_junction = s.tol("junction-h", 1e-5);
                   cfg.tol_traction = s.tol("boundary-traction", 1e-6);
                   auto rep = matched_report(m, cfg);
                   for (const auto& c : rep.checks)
                     if (c.name == "junction-implies-free-boundary") return c;
                   throw StateError("matched report lost the implication check");
                 }});
  out.push_back({"bianchi-interior", "contracted Bianchi identity", "interior metric",
                 [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto ch = Chart("in", m.interior.lo, m.interior.hi);
                   auto pts = interior_grid(ch, s.grid, 0.08);
                   return residual_check("bianchi-interior", "",
                                         bianchi_residual(m.interior.g, pts,
                                                          s.tol("bianchi-interior", 1e-6),
                                                          "exact", "bianchi-interior"));
                 }});
  out.push_back({"bianchi-exterior", "contracted Bianchi identity", "exterior metric",
                 [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto ch = Chart("out", m.exterior->lo, m.exterior->hi);
                   auto pts = interior_grid(ch, s.grid, 0.08);
                   return residual_check("bianchi-exterior", "",
                                         bianchi_residual(m.exterior->g, pts,
                                                          s.tol("bianchi-exterior", 1e-6),
                                                          "exact", "bianchi-exterior"));
                 }});
  out.push_back({"stress-divergence-bound", "stress conservation bounded by Bianchi",
                 "div of the stress stays under the Einstein divergence bound", [s, scale]() {
                   auto m = scene_star(s, scale);
                   auto ch = Chart("in", m.interior.lo, m.interior.hi);
                   auto pts = interior_grid(ch, s.grid, 0.12);
                   auto cmp = stress_divergence_comparison(*m.interior.matter, m.interior.g,
                                                           *m.interior.state,
                                                           m.constants.chi(), pts, 0.0, "exact");
                   double slack = s.tol("stress-divergence-bound", 1e-6);
                   double excess = std::max(0.0, cmp.stress.max_norm - cmp.einstein.max_norm);
                   return scalar_result("stress-divergence-bound", "", excess, slack, "exact");
                 }});
  out.push_back({"action-convergence", "total action with boundary terms",
                 "the assembled action is stable under node doubling", [s, scale]() {
                   auto m1 = scene_star(s, scale);
                   auto s2 = s;
                   s2.set_param("nodes", 2.0 * s.param("nodes"));
                   auto m2 = scene_star(s2, scale);
                   double a1 = total_action(m1);
                   double a2 = total_action(m2);
                   double rel = std::abs(a1 - a2) / std::max(std::abs(a2), 1e-12);
                   return scalar_result("action-convergence", "", rel,
                                        s.tol("action-convergence", 1e-5), "convergence");
                 }});
  out.push_back({"mass-mismatch-control", "first junction condition, induced metric",
                 "a rescaled exterior mass breaks the junction", [s]() {
                   auto m = scene_star(s, 1.1 * s.param("exterior_mass_scale"));
                   auto spts = interior_grid(m.interface_surface->chart(), 2, 0.15);
                   auto jr = junction_check(*m.interface_surface, m.interior.g, m.exterior->g,
                                            spts, 1e-5, "exact");
                   double worst = std::max(jr.h_jump.max_norm, jr.K_jump.max_norm);
                   return control_result("mass-mismatch-control", "", worst, 1e-2);
                 }});
  return out;
}

// ---- registry ----

struct SceneDef {
  std::string description;
  int grid;
  GravityConstants constants;
  std::map<std::string, double> params;
  std::vector<SceneCheck> (*build)(const Scene&);
};

const std::map<std::string, SceneDef>& registry() {
  static const std::map<std::string, SceneDef> defs = {
      {"boosted_dust",
       {"uniform dust seen from a boosted frame, state assembled through the worldtube", 3,
        {}, {{"velocity", 0.6}, {"rho_bar", 1.0}}, build_boosted_dust}},
      {"constant_density_star",
       {"uniform-density fluid ball matched to a Schwarzschild exterior", 3, {},
        {{"radius", 1.0},
         {"energy_density", 0.05},
         {"exterior_mass_scale", 1.0},
         {"outer_radius", 3.0},
         {"time_lo", 0.1},
         {"time_hi", 0.9},
         {"nodes", 6.0}},
        build_star}},
      {"elastic_block_static",
       {"relaxed isotropic elastic block in flat spacetime", 3, {},
        {{"shear_modulus", 1.0}}, build_elastic_static}},
      {"elastic_block_stretched",
       {"homogeneously stretched elastic block with free-surface traction", 3, {},
        {{"stretch", 1.1}, {"shear_modulus", 1.0}}, build_elastic_stretched}},
      {"euclidean_sphere",
       {"round sphere in Euclidean 3-space, Riemannian boundary-term suite", 3,
        {1.0 / (8.0 * M_PI), 1.0}, {{"radius", 1.0}}, build_euclidean_sphere}},
      {"frw_dust",
       {"matter-dominated FRW cosmology with comoving dust", 3, {},
        {{"t0", 1.0}}, build_frw_dust}},
      {"frw_perfect_fluid",
       {"radiation-dominated FRW cosmology with a gamma-law fluid", 3, {},
        {{"t0", 1.0}}, build_frw_perfect_fluid}},
      {"minkowski_dust",
       {"uniform dust at rest in flat spacetime", 3, {},
        {{"rho_bar", 1.0}}, build_minkowski_dust}},
      {"random_smooth",
       {"seeded smooth random fields for the kinematic and covariance identities", 3, {},
        {{"amplitude", 0.05}}, build_random_smooth}},
      {"schwarzschild_exterior",
       {"Schwarzschild vacuum exterior with a curvature oracle", 3, {},
        {{"mass", 0.2}}, build_schwarzschild}},
  };
  return defs;
}

}  // namespace

std::vector<std::string> scene_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : registry()) names.push_back(k);
  return names;
}

bool has_scene(const std::string& name) { return registry().count(name) > 0; }

Scene make_scene(const std::string& name) {
  auto it = registry().find(name);
  if (it == registry().end()) throw ConfigError("unknown scene '" + name + "'");
  Scene s;
  s.name = name;
  s.description = it->second.description;
  s.grid = it->second.grid;
  s.constants = it->second.constants;
  s.params = it->second.params;
  return s;
}

std::vector<SceneCheck> scene_checks(const Scene& s) {
  auto it = registry().find(s.name);
  if (it == registry().end()) throw ConfigError("unknown scene '" + s.name + "'");
  return it->second.build(s);
}

// ---- star oracle ----

double StarModel::mass_inside(double r) const {
  double rc = std::min(r, R);
  return 4.0 * M_PI / 3.0 * eps0 * rc * rc * rc;
}

double StarModel::root(double r) const {
  return std::sqrt(1.0 - 2.0 * mass() * r * r / (R * R * R));
}

double StarModel::pressure(double r) const {
  double f1 = root(R);
  double f = root(r);
  return eps0 * (f - f1) / (3.0 * f1 - f);
}

double StarModel::lapse(double r) const { return 1.5 * root(R) - 0.5 * root(r); }

double StarModel::radial(double r) const {
  double f = root(r);
  return 1.0 / (f * f);
}

StarModel make_star(double R, double eps0) {
  StarModel star{R, eps0};
  double M = star.mass();
  if (2.0 * M / R >= 8.0 / 9.0)
    throw ConfigError("star oracle: compactness beyond the static bound");

  // substitute the profile into the TOV balance with a stencil derivative
  double h = 1e-6 * R;
  for (int i = 1; i < 40; ++i) {
    double r = R * i / 40.0;
    double dp = (star.pressure(r + h) - star.pressure(r - h)) / (2.0 * h);
    double p = star.pressure(r);
    double m = star.mass_inside(r);
    double rhs = -(eps0 + p) * (m + 4.0 * M_PI * r * r * r * p) / (r * (r - 2.0 * m));
    if (std::abs(dp - rhs) > 1e-8 * std::max(1.0, std::abs(rhs)))
      throw StateError("star oracle: profile violates the TOV balance at r = " +
                       std::to_string(r));
  }
  if (std::abs(star.pressure(R)) > 1e-12)
    throw StateError("star oracle: nonzero surface pressure");
  double f1sq = 1.0 - 2.0 * M / R;
  if (std::abs(star.lapse(R) * star.lapse(R) - f1sq) > 1e-12 ||
      std::abs(star.radial(R) * f1sq - 1.0) > 1e-12)
    throw StateError("star oracle: metric does not continue the exterior at the surface");
  return star;
}

MatchedSpacetime star_spacetime(const StarModel& star, double mass_scale, double r_out,
                                double t0, double t1, int nodes) {
  double R = star.R;
  double M = star.mass();
  double eps0 = star.eps0;
  double kf = 2.0 * M / (R * R * R);
  double f1 = star.root(R);

  Chart chin("star-interior", {0.0, 1e-3, 1e-3, 0.0},
             {t1 + 0.1, 1.06 * R, M_PI - 1e-3, 2 * M_PI});
  chin.periodic = {false, false, false, true};
  auto gin_t = TensorField::exact(
      chin, Shape{0, 2, 0},
      [kf, f1](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
        S f = sqrt(1.0 - kf * x[1] * x[1]);
        S A = 1.5 * f1 - 0.5 * f;
        S sth = sin(x[2]);
        out[0] = -A * A;
        out[5] = 1.0 / (f * f);
        out[10] = x[1] * x[1];
        out[15] = x[1] * x[1] * sth * sth;
      },
      "star-interior");
  MetricField gin(gin_t, MetricSignature::Lorentzian, false);

  // static fluid: rho = eps0 - p realizes constant total energy density under
  // the e = eta rho equation of state, and w points along coordinate time
  EulerianState st;
  st.w = TensorField::constant(chin, Shape{1, 0, 0}, {1, 0, 0, 0}, "w");
  st.rho = TensorField::exact(
      chin, Shape{0, 0, 1},
      [kf, f1, eps0](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        S f = sqrt(1.0 - kf * x[1] * x[1]);
        S p = eps0 * (f - f1) / (3.0 * f1 - f);
        out[0] = (eps0 - p) * x[1] * x[1] * sin(x[2]) / f;
      },
      "rho");
  st.sigma = TensorField::exact(
      chin, Shape{0, 0, 1},
      [kf, f1, eps0](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        S f = sqrt(1.0 - kf * x[1] * x[1]);
        S p = eps0 * (f - f1) / (3.0 * f1 - f);
        S rho = eps0 - p;
        out[0] = (p / (rho * rho)) * rho * x[1] * x[1] * sin(x[2]) / f;
      },
      "sigma");
  auto L = fluid_lagrangian(eos_poly_eta(1.0, 1.0));

  auto gout = schwarzschild_metric(mass_scale * M, 0.7 * R, r_out + 0.4, t1 + 0.1, 0.002);

  // shared interface, outward means increasing r
  Chart tubec("tube", {t0, 1e-3, 0.0}, {t1, M_PI - 1e-3, 2 * M_PI});
  auto tube_embed = [R](auto Y, auto x) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    x[0] = Y[0];
    x[1] = S(R);
    x[2] = Y[1];
    x[3] = Y[2];
  };
  auto interface_srf = oriented_surface(tubec, gin, tube_embed, 1, +1.0, nodes, {1}, {2});

  auto cap = [&](const MetricField& g, double tc, double rlo, double rhi, double want) {
    Chart cc("cap", {rlo, 1e-3, 0.0}, {rhi, M_PI - 1e-3, 2 * M_PI});
    auto emb = [tc](auto Y, auto x) {
      using S = std::remove_cvref_t<decltype(x[0])>;
      x[0] = S(tc);
      x[1] = Y[0];
      x[2] = Y[1];
      x[3] = Y[2];
    };
    return oriented_surface(cc, g, emb, 0, want, nodes, {0, 1}, {2});
  };

  GravityRegion interior{gin, {t0, 0.0, 0.0, 0.0}, {t1, R, M_PI, 2 * M_PI}, nodes, L, st, {}};
  interior.boundary.push_back(cap(gin, t0, 1e-3, R, -1.0));
  interior.boundary.push_back(cap(gin, t1, 1e-3, R, +1.0));

  GravityRegion exterior{gout, {t0, R, 0.0, 0.0}, {t1, r_out, M_PI, 2 * M_PI}, nodes, {}, {}, {}};
  exterior.boundary.push_back(cap(gout, t0, R, r_out, -1.0));
  exterior.boundary.push_back(cap(gout, t1, R, r_out, +1.0));
  Chart outc("outer", {t0, 1e-3, 0.0}, {t1, M_PI - 1e-3, 2 * M_PI});
  auto outer_embed = [r_out](auto Y, auto x) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    x[0] = Y[0];
    x[1] = S(r_out);
    x[2] = Y[1];
    x[3] = Y[2];
  };
  exterior.boundary.push_back(oriented_surface(outc, gout, outer_embed, 1, +1.0, nodes, {1}, {2}));

  MatchedSpacetime m{std::move(interior), std::move(exterior), std::move(interface_srf), {}};
  return m;
}

MatchedSpacetime flat_matched_dust(double rho_bar, int nodes) {
  Chart ch("mink", {-0.6, -1.1, -1.1, -1.1}, {0.6, 1.1, 1.1, 1.1});
  auto g = minkowski_metric(ch);

  // axis-aligned flat wall with the requested outward direction
  auto wall = [&](int axis, double at, double want) {
    std::vector<double> lo{-0.5, -1.0, -1.0, -1.0}, hi{0.5, 1.0, 1.0, 1.0};
    if (axis != 1) {  // interior/exterior split only along x^1
      lo[1] = -1.0;
      hi[1] = 1.0;
    }
    std::vector<double> slo, shi;
    for (int i = 0; i < 4; ++i) {
      if (i == axis) continue;
      slo.push_back(lo[i]);
      shi.push_back(hi[i]);
    }
    Chart wc("wall", slo, shi);
    auto emb = [axis, at](auto Y, auto x) {
      using S = std::remove_cvref_t<decltype(x[0])>;
      int k = 0;
      for (int i = 0; i < 4; ++i) x[i] = (i == axis) ? S(at) : Y[k++];
    };
    return oriented_surface(wc, g, emb, axis, want, nodes, {}, {});
  };

  auto side_walls = [&](double xlo, double xhi) {
    std::vector<Hypersurface> b;
    auto boxed = [&](int axis, double at, double want) {
      std::vector<double> lo{-0.5, xlo, -1.0, -1.0}, hi{0.5, xhi, 1.0, 1.0};
      std::vector<double> slo, shi;
      for (int i = 0; i < 4; ++i) {
        if (i == axis) continue;
        slo.push_back(lo[i]);
        shi.push_back(hi[i]);
      }
      Chart wc("wall", slo, shi);
      auto emb = [axis, at](auto Y, auto x) {
        using S = std::remove_cvref_t<decltype(x[0])>;
        int k = 0;
        for (int i = 0; i < 4; ++i) x[i] = (i == axis) ? S(at) : Y[k++];
      };
      return oriented_surface(wc, g, emb, axis, want, nodes, {}, {});
    };
    b.push_back(boxed(0, -0.5, -1.0));
    b.push_back(boxed(0, 0.5, +1.0));
    b.push_back(boxed(2, -1.0, -1.0));
    b.push_back(boxed(2, 1.0, +1.0));
    b.push_back(boxed(3, -1.0, -1.0));
    b.push_back(boxed(3, 1.0, +1.0));
    return b;
  };

  GravityRegion interior{g, {-0.5, -1.0, -1.0, -1.0}, {0.5, 0.0, 1.0, 1.0}, nodes, {}, {}, {}};
  interior.boundary = side_walls(-1.0, 0.0);
  interior.boundary.push_back(wall(1, -1.0, -1.0));

  GravityRegion exterior{g, {-0.5, 0.0, -1.0, -1.0}, {0.5, 1.0, 1.0, 1.0}, nodes, {}, {}, {}};
  exterior.boundary = side_walls(0.0, 1.0);
  exterior.boundary.push_back(wall(1, 1.0, +1.0));

  if (rho_bar > 0) {
    interior.matter = fluid_lagrangian(eos_dust());
    interior.state = constant_state(ch, {1, 0, 0, 0}, rho_bar, 0.0);
  }

  auto interface_srf = wall(1, 0.0, +1.0);
  MatchedSpacetime m{std::move(interior), std::move(exterior), std::move(interface_srf), {}};
  return m;
}

// ---- moving-domain transport identity ----

MovingDomainGap moving_domain_gap(std::uint64_t seed, int nodes) {
  int d = 4;
  Chart D("D", {0.0, -0.4, -0.4, -0.4}, {0.8, 0.4, 0.4, 0.4});
  Chart M("M", {-1.0, -1.0, -1.0, -1.0}, {1.0, 1.0, 1.0, 1.0});
  RandomStream rng(seed);

  auto gpert = random_symmetric_field(M, rng, 0.05, "g_pert");
  auto gt = TensorField::derived(
      M, Shape{0, 2, 0}, {gpert},
      [gpert](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        gpert.eval(x, out);
        out[0] = out[0] - S(1.0);
        out[5] = out[5] + S(1.0);
        out[10] = out[10] + S(1.0);
        out[15] = out[15] + S(1.0);
      },
      "g");
  auto dg = random_symmetric_field(M, rng, 0.3, "dg");
  auto st = smooth_state(M, rng, gt, false);
  auto L = fluid_lagrangian(eos_gamma_law(0.6, 0.8, 0.2));

  // tube map: near-identity trig perturbation, plus a trig variation field
  std::vector<TrigPoly> T, U;
  for (int c = 0; c < d; ++c) T.push_back(make_trig_poly(D, rng, 0.02, 2, 1));
  for (int c = 0; c < d; ++c) U.push_back(make_trig_poly(D, rng, 0.05, 2, 1));

  auto map_at = [&](std::span<const double> X, double eps, std::vector<double>& x,
                    std::vector<double>& J) {
    x.assign(d, 0.0);
    J.assign(d * d, 0.0);
    std::vector<Dual<double>> Xd(d), val(d);
    for (int a = 0; a < d; ++a) {
      for (int i = 0; i < d; ++i) Xd[i] = Dual<double>{X[i], i == a ? 1.0 : 0.0};
      for (int c = 0; c < d; ++c) {
        Dual<double> v = Xd[c] + T[c](std::span<const Dual<double>>(Xd)) +
                         eps * U[c](std::span<const Dual<double>>(Xd));
        J[c * d + a] = v.b;
        if (a == 0) x[c] = v.a;
      }
    }
  };

  std::vector<double> gx, gw;
  gauss_legendre(nodes, gx, gw);
  auto node = [&](int i, int axis) {
    double half = 0.5 * (D.hi[axis] - D.lo[axis]);
    return std::pair<double, double>{D.lo[axis] + half * (gx[i] + 1.0), half * gw[i]};
  };

  auto volume_sum = [&](auto f) {
    double acc = 0.0;
    std::vector<int> idx(d, 0);
    std::vector<double> X(d);
    while (true) {
      double wt = 1.0;
      for (int a = 0; a < d; ++a) {
        auto [xa, wa] = node(idx[a], a);
        X[a] = xa;
        wt *= wa;
      }
      acc += wt * f(std::span<const double>(X));
      int a = 0;
      for (; a < d; ++a) {
        if (++idx[a] < nodes) break;
        idx[a] = 0;
      }
      if (a == d) break;
    }
    return acc;
  };

  auto action_of = [&](double eps) {
    auto ge = MetricField(sum_fields(gt, dg, eps, "g_eps"), MetricSignature::Lorentzian, false);
    std::vector<double> x, J;
    return volume_sum([&](std::span<const double> X) {
      map_at(X, eps, x, J);
      double detJ = determinant<double>(d, J.data(), "tube jacobian");
      return detail::lagrangian_state_at<double>(L, ge, st, std::span<const double>(x)).value *
             detJ;
    });
  };

  double lhs = fd_variation(action_of, 1e-3);

  MetricField g0(gt, MetricSignature::Lorentzian, false);
  std::vector<double> x, J;
  double bulk = volume_sum([&](std::span<const double> X) {
    map_at(X, 0.0, x, J);
    double detJ = determinant<double>(d, J.data(), "tube jacobian");
    auto r = detail::lagrangian_state_at<double>(L, g0, st, std::span<const double>(x));
    auto dgv = dg.at(x);
    double dl = 0.0;
    for (int i = 0; i < d * d; ++i) dl += r.d_g[i] * dgv[i];
    return dl * detJ;
  });

  double flux = 0.0;
  for (int axis = 0; axis < d; ++axis) {
    for (int dir : {-1, +1}) {
      std::vector<int> rest;
      for (int a = 0; a < d; ++a)
        if (a != axis) rest.push_back(a);
      std::vector<int> idx(3, 0);
      std::vector<double> X(d);
      X[axis] = dir < 0 ? D.lo[axis] : D.hi[axis];
      while (true) {
        double wt = 1.0;
        for (int k = 0; k < 3; ++k) {
          auto [xa, wa] = node(idx[k], rest[k]);
          X[rest[k]] = xa;
          wt *= wa;
        }
        map_at(X, 0.0, x, J);
        double detJ = determinant<double>(d, J.data(), "tube jacobian");
        double lval =
            detail::lagrangian_state_at<double>(L, g0, st, std::span<const double>(x)).value *
            detJ;
        std::vector<double> dphi(d), Z(d);
        for (int c = 0; c < d; ++c) dphi[c] = U[c](std::span<const double>(X));
        solve_linear<double>(d, J.data(), dphi.data(), Z.data(), "tube jacobian");
        flux += dir * wt * lval * Z[axis];
        int k = 0;
        for (; k < 3; ++k) {
          if (++idx[k] < nodes) break;
          idx[k] = 0;
        }
        if (k == 3) break;
      }
    }
  }

  MovingDomainGap out;
  out.lhs = lhs;
  out.rhs = bulk + flux;
  out.gap = std::abs(out.lhs - out.rhs) / std::max({std::abs(out.lhs), std::abs(out.rhs), 1e-10});
  return out;
}

}  // namespace relcont
