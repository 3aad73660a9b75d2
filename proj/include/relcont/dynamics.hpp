#pragma once
// Stress-energy assembly and the reduced Euler-Lagrange residuals. Stresses
// are mixed weight-1 densities 𝔗^μ_ν with the contravariant slot first.

#include <algorithm>
#include <cmath>

#include "relcont/lagrangians.hpp"
#include "relcont/lie.hpp"
#include "relcont/worldtube.hpp"

namespace relcont {

// ---- residual bookkeeping ----

struct ResidualField {
  std::string name;
  std::string mode;  // "exact" or "fd", after the derivative backing of the inputs
  double tolerance = 0.0;
  double max_norm = 0.0;
  double l2 = 0.0;  // rms of the per-point norms
  std::vector<std::vector<double>> points;
  std::vector<double> values;  // max-abs over components, per point

  bool pass() const { return max_norm < tolerance; }

  void add(std::vector<double> pt, double v) {
    points.push_back(std::move(pt));
    values.push_back(v);
    max_norm = std::max(max_norm, v);
  }
  void finish() {
    double acc = 0;
    for (double v : values) acc += v * v;
    l2 = values.empty() ? 0.0 : std::sqrt(acc / double(values.size()));
  }
};

inline ResidualField evaluate_residual(std::string name, const TensorField& R,
                                       const std::vector<std::vector<double>>& pts, double tol,
                                       std::string mode) {
  ResidualField rf;
  rf.name = std::move(name);
  rf.mode = std::move(mode);
  rf.tolerance = tol;
  for (const auto& pt : pts) {
    auto v = R.at(pt);
    double m = 0;
    for (double c : v) m = std::max(m, std::abs(c));
    rf.add(pt, m);
  }
  rf.finish();
  return rf;
}

// ---- stress-energy ----

enum class StressVariant {
  FromState,   // (ℓ̄ - ϱ̄ℓ_ϱ̄ - ς̄ℓ_ς̄) δ^μ_ν + w^μ ℓ_{w^ν} - 2 (ℓ_𝖼 𝖼)^μ_ν
  FromMetric,  // 2 ℓ_𝗀^{μγ} 𝗀_{γν}; agrees by the infinitesimal covariance identity
};

inline TensorField stress_energy_field(const ContinuumLagrangian& L, const MetricField& g,
                                       const EulerianState& st,
                                       StressVariant variant = StressVariant::FromState,
                                       std::string name = "T") {
  int d = g.tensor().dim();
  return TensorField::derived(
      st.w.chart(), Shape{1, 1, 1}, lagrangian_state_deps(g, st),
      [L, g, st, variant, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto r = detail::lagrangian_state_at<S>(L, g, st, x);
        if (variant == StressVariant::FromMetric) {
          auto m = metric_at<S>(g, x);
          for (int mu = 0; mu < d; ++mu)
            for (int nu = 0; nu < d; ++nu) {
              S acc = S(0.0);
              for (int ga = 0; ga < d; ++ga)
                acc = acc + 2.0 * r.d_g[mu * d + ga] * m.g[ga * d + nu];
              out[mu * d + nu] = acc;
            }
          return;
        }
        std::vector<S> wv(d), cv;
        st.w.eval(x, std::span<S>(wv));
        if (st.c.valid()) {
          cv.resize(d * d);
          st.c.eval(x, std::span<S>(cv));
        }
        S rb, sb;
        {
          std::vector<S> tmp(1);
          st.rho.eval(x, std::span<S>(tmp));
          rb = tmp[0];
          st.sigma.eval(x, std::span<S>(tmp));
          sb = tmp[0];
        }
        S diag = r.value - rb * r.d_rho - sb * r.d_sigma;
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu) {
            S acc = wv[mu] * r.d_w[nu];
            if (mu == nu) acc = acc + diag;
            if (!r.d_c.empty())
              for (int ga = 0; ga < d; ++ga)
                acc = acc - 2.0 * r.d_c[mu * d + ga] * cv[ga * d + nu];
            out[mu * d + nu] = acc;
          }
      },
      std::move(name), 0);
}

// ∂ℓ̄/∂𝗀_{μν} as a (2,0) weight-1 field; the gravity side couples through this
inline TensorField metric_derivative_field(const ContinuumLagrangian& L, const MetricField& g,
                                           const EulerianState& st, std::string name = "dl_dg") {
  int d = g.tensor().dim();
  return TensorField::derived(
      st.w.chart(), Shape{2, 0, 1}, lagrangian_state_deps(g, st),
      [L, g, st, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto r = detail::lagrangian_state_at<S>(L, g, st, x);
        for (int i = 0; i < d * d; ++i) out[i] = r.d_g[i];
      },
      std::move(name), 0);
}

struct StressSplit {
  TensorField pressure_part;  // p 𝖯^μ_ν μ̄
  TensorField flow_part;      // c⁻² ε_tot u^μ u_ν μ̄
  TensorField elastic_part;   // -𝔱_el^μ_ν μ̄ with 𝔱_el = -2ρ 𝖯·ϖ_𝖼·𝖼
};

inline StressSplit stress_energy_split(const ContinuumLagrangian& L, const MetricField& g,
                                       const EulerianState& st) {
  int d = g.tensor().dim();
  double c = L.light_speed();
  auto deps = lagrangian_state_deps(g, st);
  auto part = [&](int which, std::string name) {
    return TensorField::derived(
        st.w.chart(), Shape{1, 1, 1}, deps,
        [L, g, st, d, c, which](auto x, auto out) {
          using S = std::remove_cvref_t<decltype(out[0])>;
          auto r = detail::lagrangian_state_at<S>(L, g, st, x);
          auto m = metric_at<S>(g, x);
          double c2 = c * c;
          for (int mu = 0; mu < d; ++mu)
            for (int nu = 0; nu < d; ++nu) {
              S P = ((mu == nu) ? S(1.0) : S(0.0)) + r.u[mu] * r.u_low[nu] / c2;
              S v;
              if (which == 0) {
                v = r.pressure * P * m.vol;
              } else if (which == 1) {
                S eps = r.rho * (c2 + r.energy);
                v = eps / c2 * r.u[mu] * r.u_low[nu] * m.vol;
              } else {
                v = S(0.0);
                if (!r.d_c.empty()) {
                  std::vector<S> cv(d * d);
                  st.c.eval(x, std::span<S>(cv));
                  // -2 𝖯·(ℓ_𝖼 𝖼), with ℓ_𝖼 = -ρ μ̄ ϖ_𝖼
                  for (int al = 0; al < d; ++al) {
                    S Pma = ((mu == al) ? S(1.0) : S(0.0)) + r.u[mu] * r.u_low[al] / c2;
                    for (int ga = 0; ga < d; ++ga)
                      v = v - 2.0 * Pma * r.d_c[al * d + ga] * cv[ga * d + nu];
                  }
                }
              }
              out[mu * d + nu] = v;
            }
        },
        std::move(name), 0);
  };
  return {part(0, "T_pressure"), part(1, "T_flow"), part(2, "T_elastic")};
}

// state-derived scalar and vector fields on the image chart
inline TensorField velocity_field(const ContinuumLagrangian& L, const MetricField& g,
                                  const EulerianState& st, std::string name = "u") {
  int d = g.tensor().dim();
  return TensorField::derived(
      st.w.chart(), Shape{1, 0, 0}, lagrangian_state_deps(g, st),
      [L, g, st, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto r = detail::lagrangian_state_at<S>(L, g, st, x);
        for (int i = 0; i < d; ++i) out[i] = r.u[i];
      },
      std::move(name), 0);
}

inline TensorField pressure_field(const ContinuumLagrangian& L, const MetricField& g,
                                  const EulerianState& st, std::string name = "p") {
  return TensorField::derived(
      st.w.chart(), Shape{0, 0, 0}, lagrangian_state_deps(g, st),
      [L, g, st](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        out[0] = detail::lagrangian_state_at<S>(L, g, st, x).pressure;
      },
      std::move(name), 0);
}

// ε_tot = ρ (c² + e + ϖ), the rest-frame energy density
inline TensorField energy_density_field(const ContinuumLagrangian& L, const MetricField& g,
                                        const EulerianState& st, std::string name = "eps") {
  double c2 = L.light_speed() * L.light_speed();
  return TensorField::derived(
      st.w.chart(), Shape{0, 0, 0}, lagrangian_state_deps(g, st),
      [L, g, st, c2](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto r = detail::lagrangian_state_at<S>(L, g, st, x);
        out[0] = r.rho * (c2 + r.energy);
      },
      std::move(name), 0);
}

// 𝔱_el^μ_ν = -2ρ (𝖯·ϖ_𝖼·𝖼)^μ_ν = 2 (𝖯·ℓ_𝖼·𝖼)^μ_ν / μ̄, zero-weight mixed stress
inline TensorField elastic_stress_field(const ContinuumLagrangian& L, const MetricField& g,
                                        const EulerianState& st, std::string name = "t_el") {
  int d = g.tensor().dim();
  double c2 = L.light_speed() * L.light_speed();
  return TensorField::derived(
      st.w.chart(), Shape{1, 1, 0}, lagrangian_state_deps(g, st),
      [L, g, st, d, c2](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto r = detail::lagrangian_state_at<S>(L, g, st, x);
        for (int i = 0; i < d * d; ++i) out[i] = S(0.0);
        if (r.d_c.empty()) return;
        auto m = metric_at<S>(g, x);
        std::vector<S> cv(d * d);
        st.c.eval(x, std::span<S>(cv));
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu) {
            S acc = S(0.0);
            for (int al = 0; al < d; ++al) {
              S Pma = ((mu == al) ? S(1.0) : S(0.0)) + r.u[mu] * r.u_low[al] / c2;
              for (int ga = 0; ga < d; ++ga)
                acc = acc + 2.0 * Pma * r.d_c[al * d + ga] * cv[ga * d + nu];
            }
            out[mu * d + nu] = acc / m.vol;
          }
      },
      std::move(name), 0);
}

// ---- Euler-Lagrange residuals ----

// ∇_μ 𝔗^μ_ν, the reduced field equations in divergence form
inline ResidualField eulerian_el_residual(const ContinuumLagrangian& L, const MetricField& g,
                                          const EulerianState& st,
                                          const std::vector<std::vector<double>>& pts, double tol,
                                          std::string mode,
                                          StressVariant variant = StressVariant::FromState) {
  auto T = stress_energy_field(L, g, st, variant);
  auto conn = Connection::levi_civita(g);
  ResidualField rf;
  rf.name = "eulerian-el";
  rf.mode = std::move(mode);
  rf.tolerance = tol;
  for (const auto& pt : pts) {
    auto div = divergence_at<double>(T, conn, pt);
    double m = 0;
    for (double v : div) m = std::max(m, std::abs(v));
    rf.add(pt, m);
  }
  rf.finish();
  return rf;
}

struct FluidEquationsResidual {
  ResidualField momentum;     // c⁻²(ε+p)(∇_u u)♭ + 𝖯·dp
  ResidualField energy;       // ∇_μ(ε u^μ) + p ∇_μ u^μ
  ResidualField consistency;  // u-contraction of ∇·𝔗 against the energy form
};

inline FluidEquationsResidual fluid_equations_residual(const ContinuumLagrangian& L,
                                                       const MetricField& g,
                                                       const EulerianState& st,
                                                       const std::vector<std::vector<double>>& pts,
                                                       double tol, std::string mode) {
  int d = g.tensor().dim();
  double c2 = L.light_speed() * L.light_speed();
  auto u = velocity_field(L, g, st);
  auto p = pressure_field(L, g, st);
  auto eps = energy_density_field(L, g, st);
  auto T = stress_energy_field(L, g, st);
  auto conn = Connection::levi_civita(g);

  FluidEquationsResidual out;
  out.momentum = {"fluid-momentum", mode, tol};
  out.energy = {"fluid-energy", mode, tol};
  // the contraction identity is exact in the continuum; only rounding enters
  out.consistency = {"fluid-consistency", mode, 1e-8};
  for (const auto& pt : pts) {
    auto m = metric_at<double>(g, std::span<const double>(pt));
    auto gamma = conn.christoffel<double>(std::span<const double>(pt));
    std::vector<double> uv, du, pv, dp, ev, de;
    detail::eval_with_partials<double>(u, pt, uv, du);
    detail::eval_with_partials<double>(p, pt, pv, dp);
    detail::eval_with_partials<double>(eps, pt, ev, de);
    auto grad_u = covariant_derivative_components<double>(d, Shape{1, 0, 0}, uv, du, gamma);

    std::vector<double> u_low(d, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) u_low[i] += m.g[i * d + j] * uv[j];
    double div_u = 0, u_grad_eps = 0, u_grad_p = 0;
    for (int a = 0; a < d; ++a) {
      div_u += grad_u[a * d + a];
      u_grad_eps += uv[a] * de[a];
      u_grad_p += uv[a] * dp[a];
    }
    std::vector<double> adv_low(d, 0.0);
    for (int nu = 0; nu < d; ++nu)
      for (int a = 0; a < d; ++a)
        for (int mu = 0; mu < d; ++mu)
          adv_low[nu] += m.g[nu * d + mu] * uv[a] * grad_u[a * d + mu];

    double mom = 0;
    for (int nu = 0; nu < d; ++nu) {
      double proj_dp = dp[nu] + u_low[nu] * u_grad_p / c2;
      mom = std::max(mom, std::abs((ev[0] + pv[0]) / c2 * adv_low[nu] + proj_dp));
    }
    double erg = ev[0] * div_u + u_grad_eps + pv[0] * div_u;

    auto divT = divergence_at<double>(T, conn, std::span<const double>(pt));
    double contr = 0;
    for (int nu = 0; nu < d; ++nu) contr += uv[nu] * divT[nu];
    double cns = std::abs(contr / m.vol + erg);

    out.momentum.add(pt, mom);
    out.energy.add(pt, std::abs(erg));
    out.consistency.add(pt, cns);
  }
  out.momentum.finish();
  out.energy.finish();
  out.consistency.finish();
  return out;
}

struct ElasticEquationsResidual {
  ResidualField momentum;  // c⁻²(ε ∇_u u + u 𝔱:∇u)♭ - ∇·𝔱_el
  ResidualField energy;    // ∇_μ(ε u^μ) - 𝔱:∇u
};

inline ElasticEquationsResidual elastic_equations_residual(
    const ContinuumLagrangian& L, const MetricField& g, const EulerianState& st,
    const std::vector<std::vector<double>>& pts, double tol, std::string mode) {
  int d = g.tensor().dim();
  double c2 = L.light_speed() * L.light_speed();
  auto u = velocity_field(L, g, st);
  auto eps = energy_density_field(L, g, st);
  auto t_el = elastic_stress_field(L, g, st);
  auto conn = Connection::levi_civita(g);

  ElasticEquationsResidual out;
  out.momentum = {"elastic-momentum", mode, tol};
  out.energy = {"elastic-energy", mode, tol};
  for (const auto& pt : pts) {
    auto m = metric_at<double>(g, std::span<const double>(pt));
    auto gamma = conn.christoffel<double>(std::span<const double>(pt));
    std::vector<double> uv, du, ev, de, tv, dt;
    detail::eval_with_partials<double>(u, pt, uv, du);
    detail::eval_with_partials<double>(eps, pt, ev, de);
    detail::eval_with_partials<double>(t_el, pt, tv, dt);
    auto grad_u = covariant_derivative_components<double>(d, Shape{1, 0, 0}, uv, du, gamma);
    auto div_t = divergence_at<double>(t_el, conn, std::span<const double>(pt));

    double div_u = 0, u_grad_eps = 0, t_grad_u = 0;
    for (int a = 0; a < d; ++a) {
      div_u += grad_u[a * d + a];
      u_grad_eps += uv[a] * de[a];
      for (int b = 0; b < d; ++b) t_grad_u += tv[a * d + b] * grad_u[a * d + b];
    }
    std::vector<double> adv_low(d, 0.0), u_low(d, 0.0);
    for (int nu = 0; nu < d; ++nu)
      for (int mu = 0; mu < d; ++mu) {
        u_low[nu] += m.g[nu * d + mu] * uv[mu];
        for (int a = 0; a < d; ++a)
          adv_low[nu] += m.g[nu * d + mu] * uv[a] * grad_u[a * d + mu];
      }

    double mom = 0;
    for (int nu = 0; nu < d; ++nu)
      mom = std::max(mom,
                     std::abs((ev[0] * adv_low[nu] + u_low[nu] * t_grad_u) / c2 - div_t[nu]));
    double erg = ev[0] * div_u + u_grad_eps - t_grad_u;
    out.momentum.add(pt, mom);
    out.energy.add(pt, std::abs(erg));
  }
  out.momentum.finish();
  out.energy.finish();
  return out;
}

// matter transport: £_w ϱ̄, £_w ς̄, and the independent form ∂_γ(ρ μ̄ u^γ)
inline ResidualField continuity_residual(const ContinuumLagrangian& L, const MetricField& g,
                                         const EulerianState& st,
                                         const std::vector<std::vector<double>>& pts, double tol,
                                         std::string mode) {
  int d = g.tensor().dim();
  auto mass_current = TensorField::derived(
      st.w.chart(), Shape{1, 0, 1}, lagrangian_state_deps(g, st),
      [L, g, st, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto r = detail::lagrangian_state_at<S>(L, g, st, x);
        auto m = metric_at<S>(g, x);
        for (int i = 0; i < d; ++i) out[i] = r.rho * m.vol * r.u[i];
      },
      "rho_mu_u", 0);

  ResidualField rf;
  rf.name = "continuity";
  rf.mode = std::move(mode);
  rf.tolerance = tol;
  for (const auto& pt : pts) {
    std::span<const double> x(pt);
    double lie_rho = lie_derivative_at<double>(st.rho, st.w, x)[0];
    double lie_sigma = lie_derivative_at<double>(st.sigma, st.w, x)[0];
    double mass = coordinate_divergence(mass_current, x);
    rf.add(pt, std::max({std::abs(lie_rho), std::abs(lie_sigma), std::abs(mass)}));
  }
  rf.finish();
  return rf;
}

struct BoundarySample {
  std::vector<double> x;
  std::vector<double> n_low;  // outward unit conormal
};

// free-boundary condition n_μ 𝔱_el^μ_ν - p n_ν; for fluids this is |p| |n|
inline ResidualField boundary_traction_residual(const ContinuumLagrangian& L,
                                                const MetricField& g, const EulerianState& st,
                                                const std::vector<BoundarySample>& samples,
                                                double tol, std::string mode) {
  int d = g.tensor().dim();
  auto t_el = elastic_stress_field(L, g, st);
  auto p = pressure_field(L, g, st);
  ResidualField rf;
  rf.name = "boundary-traction";
  rf.mode = std::move(mode);
  rf.tolerance = tol;
  for (const auto& s : samples) {
    auto tv = t_el.at(s.x);
    double pv = p.at(s.x)[0];
    double m = 0;
    for (int nu = 0; nu < d; ++nu) {
      double acc = -pv * s.n_low[nu];
      for (int mu = 0; mu < d; ++mu) acc += s.n_low[mu] * tv[mu * d + nu];
      m = std::max(m, std::abs(acc));
    }
    rf.add(s.x, m);
  }
  rf.finish();
  return rf;
}

// ---- convective-picture field equations ----

// residual_B = ∇_A 𝔖^A_B - ℒ_W·∇_B W - ℒ_R̄ ∇_B R̄ - ℒ_S̄ ∇_B S̄ - ℒ_G:∇_B G₀
// with 𝔖^A_B = ℒ δ^A_B - 2 Γ_{BC} ℒ_Γ^{CA} and ∇ the Levi-Civita connection
// of Γ. The ℒ-partials are taken by seeding dual numbers on each argument.
inline TensorField convective_el_residual_field(const ContinuumLagrangian& L,
                                                const TensorField& Gamma,
                                                const ReferenceFields& rf,
                                                std::string name = "convective-el") {
  int d = Gamma.dim();
  MetricField Gm(Gamma, MetricSignature::Lorentzian);
  bool with_G = rf.G.valid();
  std::vector<TensorField> deps{Gamma, rf.W, rf.R, rf.S};
  if (with_G) deps.push_back(rf.G);

  return TensorField::derived(
      Gamma.chart(), Shape{0, 1, 1}, deps,
      [L, Gamma, Gm, rf, d, with_G](auto X, auto out) {
        using S = std::remove_cvref_t<decltype(X[0])>;
        using DS = Dual<S>;
        auto gamma = christoffel_at<S>(Gm, X).gamma;

        // ℒ and its argument partials at the base point
        std::vector<S> Gv(d * d), Wv(d), G0v;
        Gamma.eval(X, std::span<S>(Gv));
        rf.W.eval(X, std::span<S>(Wv));
        if (with_G) {
          G0v.resize(d * d);
          rf.G.eval(X, std::span<S>(G0v));
        }
        S Rv, Sv;
        {
          std::vector<S> tmp(1);
          rf.R.eval(X, std::span<S>(tmp));
          Rv = tmp[0];
          rf.S.eval(X, std::span<S>(tmp));
          Sv = tmp[0];
        }
        auto lag_seeded = [&](std::span<const DS> G, std::span<const DS> W, const DS& R,
                              const DS& Sg, std::span<const DS> G0) {
          return convective_lagrangian_value<DS>(L, d, G, W, R, Sg, G0);
        };
        std::vector<DS> Gd(d * d), Wd(d), G0d(G0v.size());
        for (int i = 0; i < d * d; ++i) Gd[i] = DS{Gv[i], S(0.0)};
        for (int i = 0; i < d; ++i) Wd[i] = DS{Wv[i], S(0.0)};
        for (std::size_t i = 0; i < G0v.size(); ++i) G0d[i] = DS{G0v[i], S(0.0)};
        DS Rd{Rv, S(0.0)}, Sd{Sv, S(0.0)};

        std::vector<S> d_W(d), d_G0(G0v.size());
        S d_R, d_S;
        for (int i = 0; i < d; ++i) {
          Wd[i].b = S(1.0);
          d_W[i] = lag_seeded(Gd, Wd, Rd, Sd, G0d).b;
          Wd[i].b = S(0.0);
        }
        Rd.b = S(1.0);
        d_R = lag_seeded(Gd, Wd, Rd, Sd, G0d).b;
        Rd.b = S(0.0);
        Sd.b = S(1.0);
        d_S = lag_seeded(Gd, Wd, Rd, Sd, G0d).b;
        Sd.b = S(0.0);
        for (int A = 0; A < d && with_G; ++A)
          for (int B = A; B < d; ++B) {
            G0d[A * d + B].b = S(1.0);
            G0d[B * d + A].b = S(1.0);
            S der = lag_seeded(Gd, Wd, Rd, Sd, G0d).b;
            d_G0[A * d + B] = (A == B) ? der : der * 0.5;
            d_G0[B * d + A] = d_G0[A * d + B];
            G0d[A * d + B].b = S(0.0);
            G0d[B * d + A].b = S(0.0);
          }

        // 𝔖 as a function of the point, differentiated along each axis
        auto stress_at = [&](std::span<const DS> Xd, std::vector<DS>& Sout) {
          std::vector<DS> G(d * d), W(d), G0;
          Gamma.eval(Xd, std::span<DS>(G));
          rf.W.eval(Xd, std::span<DS>(W));
          if (with_G) {
            G0.resize(d * d);
            rf.G.eval(Xd, std::span<DS>(G0));
          }
          DS R, Sg;
          {
            std::vector<DS> tmp(1);
            rf.R.eval(Xd, std::span<DS>(tmp));
            R = tmp[0];
            rf.S.eval(Xd, std::span<DS>(tmp));
            Sg = tmp[0];
          }
          using DDS = Dual<DS>;
          std::vector<DDS> G2(d * d), W2(d), G02(G0.size());
          for (int i = 0; i < d * d; ++i) G2[i] = DDS{G[i], DS{}};
          for (int i = 0; i < d; ++i) W2[i] = DDS{W[i], DS{}};
          for (std::size_t i = 0; i < G0.size(); ++i) G02[i] = DDS{G0[i], DS{}};
          DDS R2{R, DS{}}, S2{Sg, DS{}};
          DS lval;
          std::vector<DS> d_Gamma(d * d);
          for (int A = 0; A < d; ++A)
            for (int B = A; B < d; ++B) {
              G2[A * d + B].b = DS{S(1.0), S(0.0)};
              G2[B * d + A].b = DS{S(1.0), S(0.0)};
              auto r = convective_lagrangian_value<DDS>(L, d, G2, W2, R2, S2, G02);
              lval = r.a;
              d_Gamma[A * d + B] = (A == B) ? r.b : r.b * 0.5;
              d_Gamma[B * d + A] = d_Gamma[A * d + B];
              G2[A * d + B].b = DS{};
              G2[B * d + A].b = DS{};
            }
          for (int A = 0; A < d; ++A)
            for (int B = 0; B < d; ++B) {
              DS acc = (A == B) ? lval : DS{};
              for (int C = 0; C < d; ++C)
                acc = acc - 2.0 * G[B * d + C] * d_Gamma[C * d + A];
              Sout[A * d + B] = acc;
            }
        };
        std::vector<S> Stress(d * d), dStress(d * d * d);
        {
          std::vector<DS> Xd(d), Sout(d * d);
          for (int i = 0; i < d; ++i) Xd[i] = DS{X[i], S(0.0)};
          for (int a = 0; a < d; ++a) {
            Xd[a].b = S(1.0);
            stress_at(Xd, Sout);
            for (int i = 0; i < d * d; ++i) {
              dStress[a * d * d + i] = Sout[i].b;
              Stress[i] = Sout[i].a;
            }
            Xd[a].b = S(0.0);
          }
        }
        auto gradS =
            covariant_derivative_components<S>(d, Shape{1, 1, 1}, Stress, dStress, gamma);

        std::vector<S> Wp, dWp, Rp, dRp, Sp, dSp, Gp, dGp;
        detail::eval_with_partials<S>(rf.W, X, Wp, dWp);
        detail::eval_with_partials<S>(rf.R, X, Rp, dRp);
        detail::eval_with_partials<S>(rf.S, X, Sp, dSp);
        auto gradW = covariant_derivative_components<S>(d, Shape{1, 0, 0}, Wp, dWp, gamma);
        auto gradR = covariant_derivative_components<S>(d, Shape{0, 0, 1}, Rp, dRp, gamma);
        auto gradSg = covariant_derivative_components<S>(d, Shape{0, 0, 1}, Sp, dSp, gamma);
        std::vector<S> gradG;
        if (with_G) {
          detail::eval_with_partials<S>(rf.G, X, Gp, dGp);
          gradG = covariant_derivative_components<S>(d, Shape{0, 2, 0}, Gp, dGp, gamma);
        }

        for (int B = 0; B < d; ++B) {
          S acc = S(0.0);
          for (int A = 0; A < d; ++A) acc = acc + gradS[A * d * d + A * d + B];
          for (int A = 0; A < d; ++A) acc = acc - d_W[A] * gradW[B * d + A];
          acc = acc - d_R * gradR[B] - d_S * gradSg[B];
          if (with_G)
            for (int C = 0; C < d; ++C)
              for (int E = 0; E < d; ++E)
                acc = acc - d_G0[C * d + E] * gradG[B * d * d + C * d + E];
          out[B] = acc;
        }
      },
      std::move(name), 2);
}

inline ResidualField convective_el_residual(const ContinuumLagrangian& L,
                                            const TensorField& Gamma, const ReferenceFields& rf,
                                            const std::vector<std::vector<double>>& pts,
                                            double tol, std::string mode) {
  return evaluate_residual("convective-el", convective_el_residual_field(L, Gamma, rf), pts, tol,
                           std::move(mode));
}

}  // namespace relcont
