#pragma once

// Continuum Lagrangian densities in Eulerian, material, and convective form.
//
// The Eulerian density is ℓ̄ = -(α ϱ̄/c)(c² + E) with α = √(-g(w,w)),
// ρ = α ϱ̄/(c μ̄), η = ς̄/ϱ̄ and E the specific internal energy: an equation
// of state e(ρ,η) plus a stored elastic energy ϖ. Partial derivatives are
// hand-written closed forms; every evaluator is templated over dual numbers
// so the closed forms can be checked against seeded derivatives.

#include "relcont/metric.hpp"
#include "relcont/random_fields.hpp"
#include "relcont/worldtube.hpp"

namespace relcont {

// two-argument scalar function usable at every dual depth
class ScalarFn2 {
  template <class S>
  using Fn = std::function<S(const S&, const S&)>;
  struct Fns {
    Fn<double> f0;
    Fn<D1> f1;
    Fn<D2> f2;
    Fn<D3> f3;
  };
  std::shared_ptr<const Fns> fns_;

 public:
  ScalarFn2() = default;

  template <class F>
  static ScalarFn2 wrap(F f) {
    auto fns = std::make_shared<Fns>();
    fns->f0 = [f](const double& a, const double& b) { return f(a, b); };
    fns->f1 = [f](const D1& a, const D1& b) { return f(a, b); };
    fns->f2 = [f](const D2& a, const D2& b) { return f(a, b); };
    fns->f3 = [f](const D3& a, const D3& b) { return f(a, b); };
    ScalarFn2 r;
    r.fns_ = std::move(fns);
    return r;
  }

  template <class S>
  S operator()(const S& a, const S& b) const {
    constexpr int depth = dual_depth<S>();
    if constexpr (depth == 0) return fns_->f0(a, b);
    else if constexpr (depth == 1) return fns_->f1(a, b);
    else if constexpr (depth == 2) return fns_->f2(a, b);
    else if constexpr (depth == 3) return fns_->f3(a, b);
    else throw Error("scalar function: derivative depth beyond the supported nesting");
  }
};

struct EquationOfState {
  std::string family;
  ScalarFn2 e, de_drho, de_deta;

  template <class S>
  S pressure(const S& rho, const S& eta) const {
    return rho * rho * de_drho(rho, eta);
  }
};

inline EquationOfState eos_dust() {
  auto zero = ScalarFn2::wrap([](const auto& r, const auto&) { return 0.0 * r; });
  return {"dust", zero, zero, zero};
}

inline EquationOfState eos_linear(double K) {
  return {"linear", ScalarFn2::wrap([K](const auto& r, const auto&) { return K * r; }),
          ScalarFn2::wrap([K](const auto& r, const auto&) { return K + 0.0 * r; }),
          ScalarFn2::wrap([](const auto& r, const auto&) { return 0.0 * r; })};
}

// e = A ρ^w - B; with w = 1/3, B = c² this is a radiation-dominated gas
inline EquationOfState eos_gamma_law(double A, double w, double B) {
  return {"gamma_law",
          ScalarFn2::wrap([A, w, B](const auto& r, const auto&) { return A * pow(r, w) - B; }),
          ScalarFn2::wrap([A, w](const auto& r, const auto&) { return A * w * pow(r, w - 1); }),
          ScalarFn2::wrap([](const auto& r, const auto&) { return 0.0 * r; })};
}

inline EquationOfState eos_poly_eta(double K, double expo) {
  return {"poly_eta",
          ScalarFn2::wrap([K, expo](const auto& r, const auto& h) { return K * h * pow(r, expo); }),
          ScalarFn2::wrap(
              [K, expo](const auto& r, const auto& h) { return K * expo * h * pow(r, expo - 1); }),
          ScalarFn2::wrap([K, expo](const auto& r, const auto&) { return K * pow(r, expo); })};
}

// ---- stored elastic energy ----
//
// Isotropic families are functions of the quotient invariants
// I_k = tr((𝗉⁺𝖼)^k); on the material side the same numbers arise as
// tr((C⁺G₀)^k), so one trace routine serves both representations.

namespace detail {

// invariants I_1, I_2 of A = X·H for X a (2,0) quotient inverse, H a (0,2)
template <class S>
void quotient_invariants(int d, std::span<const S> X, std::span<const S> H, S& I1, S& I2) {
  std::vector<S> A(d * d, S(0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      S acc = S(0.0);
      for (int k = 0; k < d; ++k) acc = acc + X[i * d + k] * H[k * d + j];
      A[i * d + j] = acc;
    }
  I1 = mat_trace<S>(d, A.data());
  I2 = S(0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) I2 = I2 + A[i * d + j] * A[j * d + i];
}

}  // namespace detail

class StoredEnergy {
 public:
  std::string family = "zero";
  double mu_e = 0.0;
  double beta = 0.0;
  std::vector<double> fiber;  // body direction V for the anisotropic term

  bool trivial() const { return family == "zero"; }
  bool isotropic() const { return beta == 0.0; }

  // Eulerian ϖ(𝖼,𝗉) through I_k = tr((𝗉⁺𝖼)^k); St-Venant:
  // ϖ = ¼ μ_e tr((𝗉⁺𝖼 - 𝖯)²) = ¼ μ_e (I₂ - 2I₁ + n)
  template <class S>
  S varpi(int d, std::span<const S> c_low, std::span<const S> p_up) const {
    if (trivial()) return S(0.0);
    if (!isotropic())
      throw StateError("stored energy '" + family +
                       "' is anisotropic and has no Eulerian invariant form");
    S I1, I2;
    detail::quotient_invariants<S>(d, p_up, c_low, I1, I2);
    return 0.25 * mu_e * (I2 - 2.0 * I1 + double(d - 1));
  }

  // ∂ϖ/∂𝖼 as a symmetric (2,0) tensor: ½ μ_e (S𝖼S - S)
  template <class S>
  std::vector<S> varpi_dc(int d, std::span<const S> c_low, std::span<const S> p_up) const {
    std::vector<S> out(d * d, S(0.0));
    if (trivial()) return out;
    std::vector<S> cS(d * d), ScS(d * d);
    mat_mul<S>(d, c_low.data(), p_up.data(), cS.data());
    mat_mul<S>(d, p_up.data(), cS.data(), ScS.data());
    for (int i = 0; i < d * d; ++i) out[i] = 0.5 * mu_e * (ScS[i] - p_up[i]);
    return out;
  }

  // ∂ϖ/∂𝗉 as a symmetric (2,0) tensor: -½ μ_e (M² - M) S with M = 𝗉⁺𝖼
  template <class S>
  std::vector<S> varpi_dp(int d, std::span<const S> c_low, std::span<const S> p_up) const {
    std::vector<S> out(d * d, S(0.0));
    if (trivial()) return out;
    std::vector<S> M(d * d), M2(d * d), T(d * d);
    mat_mul<S>(d, p_up.data(), c_low.data(), M.data());
    mat_mul<S>(d, M.data(), M.data(), M2.data());
    for (int i = 0; i < d * d; ++i) M2[i] = M2[i] - M[i];
    mat_mul<S>(d, M2.data(), p_up.data(), T.data());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out[i * d + j] = -0.25 * mu_e * (T[i * d + j] + T[j * d + i]);
    return out;
  }

  // material 𝒲(G₀,C) from the same invariants, plus the fiber term
  // β (C(V,V) - 1)²; Cq is a quotient inverse of C matching C's degeneracy
  template <class S>
  S material(int d, std::span<const S> C, std::span<const S> Cq, std::span<const S> G0) const {
    if (trivial()) return S(0.0);
    S I1, I2;
    detail::quotient_invariants<S>(d, Cq, G0, I1, I2);
    S W = 0.25 * mu_e * (I2 - 2.0 * I1 + double(d - 1));
    if (beta != 0.0) {
      S cvv = S(0.0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) cvv = cvv + C[i * d + j] * fiber[i] * fiber[j];
      S dev = cvv - 1.0;
      W = W + beta * dev * dev;
    }
    return W;
  }
};

inline StoredEnergy stored_zero() { return {}; }

inline StoredEnergy stored_stvenant(double mu_e) {
  StoredEnergy s;
  s.family = "stvenant";
  s.mu_e = mu_e;
  return s;
}

inline StoredEnergy stored_stvenant_fiber(double mu_e, double beta, std::vector<double> V) {
  StoredEnergy s;
  s.family = "stvenant_fiber";
  s.mu_e = mu_e;
  s.beta = beta;
  s.fiber = std::move(V);
  return s;
}

// double-only reference route: 𝗉⁺ by eigendecomposition of 𝗉
inline double varpi_invariants_eigen(const StoredEnergy& en, int d,
                                     const std::vector<double>& c_low,
                                     const std::vector<double>& p_low) {
  if (en.trivial()) return 0.0;
  auto X = sym_pseudo_inverse(d, p_low, 1e-10);
  double I1, I2;
  detail::quotient_invariants<double>(d, std::span<const double>(X),
                                      std::span<const double>(c_low), I1, I2);
  return 0.25 * en.mu_e * (I2 - 2.0 * I1 + double(d - 1));
}

// ---- the continuum Lagrangian ----

template <class S>
struct LagrangianValue {
  S value{0.0};            // ℓ̄, weight-1 scalar
  S d_rho{0.0};            // ∂ℓ̄/∂ϱ̄
  S d_sigma{0.0};          // ∂ℓ̄/∂ς̄
  std::vector<S> d_w;      // ∂ℓ̄/∂w^λ (covector)
  std::vector<S> d_c;      // ∂ℓ̄/∂𝖼_{μν} (2,0), empty without a strain slot
  std::vector<S> d_g;      // ∂ℓ̄/∂𝗀_{μν} (2,0)
  S alpha{0.0}, rho{0.0}, eta{0.0};
  S energy{0.0};           // E = e + ϖ
  S pressure{0.0};         // ρ² ∂e/∂ρ
  std::vector<S> u;        // normalized velocity
  std::vector<S> u_low;
};

class ContinuumLagrangian {
  EquationOfState eos_;
  StoredEnergy energy_;
  double c_ = 1.0;

 public:
  ContinuumLagrangian() = default;
  ContinuumLagrangian(EquationOfState eos, StoredEnergy en, double c)
      : eos_(std::move(eos)), energy_(std::move(en)), c_(c) {}

  double light_speed() const { return c_; }
  const EquationOfState& eos() const { return eos_; }
  const StoredEnergy& stored() const { return energy_; }

  // c_low empty means no strain argument (pure fluid signature)
  template <class S>
  LagrangianValue<S> at(const MetricData<S>& m, std::span<const S> w, const S& rho_bar,
                        const S& sigma_bar, std::span<const S> c_low) const {
    int d = m.dim;
    double c = c_;
    if (!(primal(rho_bar) > 0))
      throw StateError("matter density must be positive, got " +
                       std::to_string(primal(rho_bar)));
    LagrangianValue<S> r;
    S g_ww = S(0.0);
    std::vector<S> w_low(d, S(0.0));
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) w_low[i] = w_low[i] + m.g[i * d + j] * w[j];
      g_ww = g_ww + w_low[i] * w[i];
    }
    if (!(primal(g_ww) < 0))
      throw StateError("flow direction not timelike: g(w,w) = " +
                       std::to_string(primal(g_ww)));
    r.alpha = sqrt(-g_ww);
    r.rho = r.alpha * rho_bar / (c * m.vol);
    r.eta = sigma_bar / rho_bar;
    r.u.resize(d);
    r.u_low.resize(d);
    for (int i = 0; i < d; ++i) {
      r.u[i] = c * w[i] / r.alpha;
      r.u_low[i] = c * w_low[i] / r.alpha;
    }

    S E = eos_.e(r.rho, r.eta);
    S Er = eos_.de_drho(r.rho, r.eta);
    S Ee = eos_.de_deta(r.rho, r.eta);
    r.pressure = r.rho * r.rho * Er;

    std::vector<S> p_up;
    if (!c_low.empty()) {
      double cnorm = 0, unorm = 0;
      for (int i = 0; i < d * d; ++i) cnorm = std::max(cnorm, std::abs(primal(c_low[i])));
      for (int i = 0; i < d; ++i) unorm = std::max(unorm, std::abs(primal(r.u[i])));
      for (int nu = 0; nu < d; ++nu) {
        double iuc = 0;
        for (int mu = 0; mu < d; ++mu) iuc += primal(r.u[mu]) * primal(c_low[mu * d + nu]);
        if (std::abs(iuc) > 1e-6 * (1 + cnorm) * (1 + unorm))
          throw StateError("strain tensor not degenerate along the flow: |i_u c| = " +
                           std::to_string(std::abs(iuc)));
      }
      p_up.resize(d * d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) p_up[i * d + j] = m.ginv[i * d + j] - w[i] * w[j] / g_ww;
      E = E + energy_.varpi<S>(d, c_low, p_up);
    }

    r.energy = E;
    S c2E = c * c + E;
    S pref = rho_bar / c;
    r.value = -pref * r.alpha * c2E;
    r.d_rho = -(r.alpha / c) * (c2E + r.rho * Er - r.eta * Ee);
    r.d_sigma = -(r.alpha / c) * Ee;

    r.d_w.resize(d);
    S wcoef = (pref / r.alpha) * (c2E + r.rho * Er);
    for (int i = 0; i < d; ++i) r.d_w[i] = wcoef * w_low[i];

    r.d_g.assign(d * d, S(0.0));
    S gcoef1 = pref / (2.0 * r.alpha) * (c2E + r.rho * Er);
    S gcoef2 = pref * r.alpha * r.rho * Er / 2.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        r.d_g[i * d + j] = gcoef1 * w[i] * w[j] + gcoef2 * m.ginv[i * d + j];

    if (!c_low.empty()) {
      auto dc = energy_.varpi_dc<S>(d, c_low, std::span<const S>(p_up));
      r.d_c.resize(d * d);
      S el = pref * r.alpha;
      for (int i = 0; i < d * d; ++i) r.d_c[i] = -el * dc[i];
      if (!energy_.trivial()) {
        // elastic part of ∂ℓ/∂g: +½ μ_e ρμ̄ (g⁻¹(𝖼S𝖼 - 𝖼)g⁻¹)
        std::vector<S> cS(d * d), cSc(d * d), T(d * d), giT(d * d);
        mat_mul<S>(d, c_low.data(), p_up.data(), cS.data());
        mat_mul<S>(d, cS.data(), c_low.data(), cSc.data());
        for (int i = 0; i < d * d; ++i) cSc[i] = cSc[i] - c_low[i];
        mat_mul<S>(d, m.ginv.data(), cSc.data(), T.data());
        mat_mul<S>(d, T.data(), m.ginv.data(), giT.data());
        for (int i = 0; i < d * d; ++i)
          r.d_g[i] = r.d_g[i] + 0.5 * energy_.mu_e * el * giT[i];
      }
    }
    return r;
  }
};

inline ContinuumLagrangian fluid_lagrangian(EquationOfState eos, double c = 1.0) {
  return ContinuumLagrangian(std::move(eos), stored_zero(), c);
}

inline ContinuumLagrangian elastic_lagrangian(StoredEnergy en, double c = 1.0) {
  return ContinuumLagrangian(eos_dust(), std::move(en), c);
}

inline ContinuumLagrangian general_continuum_lagrangian(EquationOfState eos, StoredEnergy en,
                                                        double c = 1.0) {
  return ContinuumLagrangian(std::move(eos), std::move(en), c);
}

// ---- field assembly (Eulerian) ----

struct EulerianState {
  TensorField w;      // (1,0)
  TensorField rho;    // ϱ̄ (0,0,w1)
  TensorField sigma;  // ς̄ (0,0,w1)
  TensorField c;      // 𝖼 (0,2), optional (default-constructed when absent)
};

namespace detail {

template <class S>
LagrangianValue<S> lagrangian_state_at(const ContinuumLagrangian& L, const MetricField& g,
                                       const EulerianState& st, std::span<const S> x) {
  auto m = metric_at<S>(g, x);
  int d = m.dim;
  std::vector<S> wv(d), cv;
  st.w.eval(x, std::span<S>(wv));
  S rb, sb;
  {
    std::vector<S> tmp(1);
    st.rho.eval(x, std::span<S>(tmp));
    rb = tmp[0];
    st.sigma.eval(x, std::span<S>(tmp));
    sb = tmp[0];
  }
  if (st.c.valid()) {
    cv.resize(d * d);
    st.c.eval(x, std::span<S>(cv));
  }
  return L.at<S>(m, std::span<const S>(wv), rb, sb, std::span<const S>(cv));
}

}  // namespace detail

inline std::vector<TensorField> lagrangian_state_deps(const MetricField& g,
                                                      const EulerianState& st) {
  std::vector<TensorField> deps{g.tensor(), st.w, st.rho, st.sigma};
  if (st.c.valid()) deps.push_back(st.c);
  return deps;
}

inline TensorField eulerian_lagrangian_field(const ContinuumLagrangian& L, const MetricField& g,
                                             const EulerianState& st, std::string name = "lbar") {
  return TensorField::derived(
      st.w.chart(), Shape{0, 0, 1}, lagrangian_state_deps(g, st),
      [L, g, st](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        out[0] = detail::lagrangian_state_at<S>(L, g, st, x).value;
      },
      std::move(name), 0);
}

// ---- material representation ----
//
// Evaluated on the body-time domain without inverting the tube:
// α from w = TΦ·W, ρ = α R̄ /(c |det TΦ| μ̄∘Φ), C = (TΦ)ᵀ 𝗉 (TΦ),
// C⁺ = (TΦ)⁻¹ 𝗉⁺ (TΦ)⁻ᵀ.

template <class S>
S material_lagrangian_value(const ContinuumLagrangian& L, const MetricData<S>& m,
                            std::span<const S> J, const S& R_bar, const S& S_bar,
                            std::span<const S> G0, std::span<const S> Wv) {
  int d = m.dim;
  double c = L.light_speed();
  if (!(primal(R_bar) > 0))
    throw StateError("reference matter density must be positive, got " +
                     std::to_string(primal(R_bar)));
  std::vector<S> w(d, S(0.0));
  for (int mu = 0; mu < d; ++mu)
    for (int a = 0; a < d; ++a) w[mu] = w[mu] + J[mu * d + a] * Wv[a];
  S g_ww = S(0.0);
  std::vector<S> w_low(d, S(0.0));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) w_low[i] = w_low[i] + m.g[i * d + j] * w[j];
    g_ww = g_ww + w_low[i] * w[i];
  }
  if (!(primal(g_ww) < 0))
    throw StateError("tube worldlines not timelike: g(w,w) = " + std::to_string(primal(g_ww)));
  S alpha = sqrt(-g_ww);
  std::vector<S> Jinv(d * d);
  S detJ = det_and_invert<S>(d, J.data(), Jinv.data(), "tube jacobian");
  S rho = alpha * R_bar / (c * dabs(detJ) * m.vol);
  S eta = S_bar / R_bar;
  S E = L.eos().e(rho, eta);
  if (!L.stored().trivial()) {
    // p and 𝗉⁺ in spacetime indices, then both legs pulled to the body
    std::vector<S> p_low(d * d), p_up(d * d), C(d * d, S(0.0)), Cq(d * d, S(0.0));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        p_low[i * d + j] = m.g[i * d + j] - w_low[i] * w_low[j] / g_ww;
        p_up[i * d + j] = m.ginv[i * d + j] - w[i] * w[j] / g_ww;
      }
    for (int A = 0; A < d; ++A)
      for (int B = 0; B < d; ++B) {
        S acc = S(0.0), accq = S(0.0);
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu) {
            acc = acc + J[mu * d + A] * p_low[mu * d + nu] * J[nu * d + B];
            accq = accq + Jinv[A * d + mu] * p_up[mu * d + nu] * Jinv[B * d + nu];
          }
        C[A * d + B] = acc;
        Cq[A * d + B] = accq;
      }
    E = E + L.stored().material<S>(d, std::span<const S>(C), std::span<const S>(Cq),
                                   G0);
  }
  return -(alpha * R_bar / c) * (c * c + E);
}

inline TensorField material_lagrangian_field(const ContinuumLagrangian& L, const WorldTube& tube,
                                             const ReferenceFields& rf, const MetricField& g,
                                             std::string name = "Lbar") {
  int d = tube.dim();
  std::vector<TensorField> deps{g.tensor(), rf.W, rf.R, rf.S};
  if (rf.G.valid()) deps.push_back(rf.G);
  return TensorField::derived(
      tube.domain(), Shape{0, 0, 1}, deps,
      [L, tube, rf, g, d](auto X, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> x(d);
        tube.map<S>(X, x);
        auto m = metric_at<S>(g, std::span<const S>(x));
        auto J = tube.jacobian<S>(X);
        std::vector<S> Wv(d), G0;
        rf.W.eval(X, std::span<S>(Wv));
        S Rb, Sb;
        {
          std::vector<S> tmp(1);
          rf.R.eval(X, std::span<S>(tmp));
          Rb = tmp[0];
          rf.S.eval(X, std::span<S>(tmp));
          Sb = tmp[0];
        }
        if (rf.G.valid()) {
          G0.resize(d * d);
          rf.G.eval(X, std::span<S>(G0));
        }
        out[0] = material_lagrangian_value<S>(L, m, std::span<const S>(J), Rb, Sb,
                                              std::span<const S>(G0), std::span<const S>(Wv));
      },
      std::move(name), 1);
}

// ---- convective representation ----
//
// All spacetime input enters through Γ = Φ*𝗀; the flow projector is
// C(W,Γ) = Γ - Γ(W)⊗Γ(W)/Γ(W,W) and its quotient inverse is
// Γ⁻¹ - W⊗W/Γ(W,W).

template <class S>
S convective_lagrangian_value(const ContinuumLagrangian& L, int d, std::span<const S> Gamma,
                              std::span<const S> Wv, const S& R_bar, const S& S_bar,
                              std::span<const S> G0) {
  double c = L.light_speed();
  if (!(primal(R_bar) > 0))
    throw StateError("reference matter density must be positive, got " +
                     std::to_string(primal(R_bar)));
  auto md = metric_data_from_components<S>(d, std::vector<S>(Gamma.begin(), Gamma.end()),
                                           "pulled-back metric");
  S G_WW = S(0.0);
  std::vector<S> W_low(d, S(0.0));
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) W_low[i] = W_low[i] + Gamma[i * d + j] * Wv[j];
    G_WW = G_WW + W_low[i] * Wv[i];
  }
  if (!(primal(G_WW) < 0))
    throw StateError("convective state: Γ(W,W) = " + std::to_string(primal(G_WW)) +
                     " is not negative");
  S beta = sqrt(-G_WW);
  S rho = beta * R_bar / (c * md.vol);
  S eta = S_bar / R_bar;
  S E = L.eos().e(rho, eta);
  if (!L.stored().trivial()) {
    std::vector<S> C(d * d), Cq(d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        C[i * d + j] = Gamma[i * d + j] - W_low[i] * W_low[j] / G_WW;
        Cq[i * d + j] = md.ginv[i * d + j] - Wv[i] * Wv[j] / G_WW;
      }
    E = E + L.stored().material<S>(d, std::span<const S>(C), std::span<const S>(Cq), G0);
  }
  return -(beta * R_bar / c) * (c * c + E);
}

inline TensorField convective_lagrangian_field(const ContinuumLagrangian& L,
                                               const TensorField& Gamma,
                                               const ReferenceFields& rf,
                                               std::string name = "Lconv") {
  int d = Gamma.dim();
  std::vector<TensorField> deps{Gamma, rf.W, rf.R, rf.S};
  if (rf.G.valid()) deps.push_back(rf.G);
  return TensorField::derived(
      Gamma.chart(), Shape{0, 0, 1}, deps,
      [L, Gamma, rf, d](auto X, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> Gv(d * d), Wv(d), G0;
        Gamma.eval(X, std::span<S>(Gv));
        rf.W.eval(X, std::span<S>(Wv));
        S Rb, Sb;
        {
          std::vector<S> tmp(1);
          rf.R.eval(X, std::span<S>(tmp));
          Rb = tmp[0];
          rf.S.eval(X, std::span<S>(tmp));
          Sb = tmp[0];
        }
        if (rf.G.valid()) {
          G0.resize(d * d);
          rf.G.eval(X, std::span<S>(G0));
        }
        out[0] = convective_lagrangian_value<S>(L, d, std::span<const S>(Gv),
                                                std::span<const S>(Wv), Rb, Sb,
                                                std::span<const S>(G0));
      },
      std::move(name), 0);
}

// ---- covariance checks ----

struct CovarianceReport {
  double max_residual = 0.0;
  int trials = 0;
};

namespace detail {

// random Lorentzian metric components near Minkowski
inline std::vector<double> random_metric_components(int d, RandomStream& rng, double amp) {
  std::vector<double> g(d * d, 0.0);
  for (int i = 0; i < d; ++i) g[i * d + i] = (i == 0 ? -1.0 : 1.0);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double e = amp * rng.sym();
      g[i * d + j] += e;
      if (i != j) g[j * d + i] += e;
    }
  return g;
}

// on-shell strain: 𝖼 = 𝖯ᵀ B 𝖯 for a random symmetric B
inline std::vector<double> on_shell_strain(int d, const ProjectionData<double>& pr,
                                           RandomStream& rng, double amp) {
  std::vector<double> B(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) {
      double v = (i == j ? 1.0 : 0.0) + amp * rng.sym();
      B[i * d + j] = v;
      B[j * d + i] = v;
    }
  std::vector<double> c(d * d, 0.0);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n) {
      double acc = 0;
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) acc += pr.P_mix[a * d + m] * B[a * d + b] * pr.P_mix[b * d + n];
      c[m * d + n] = acc;
    }
  return c;
}

}  // namespace detail

// value equivariance under a random linear spacetime diffeomorphism:
// ℓ̄(A·state) = ℓ̄(state)/|det A|
inline CovarianceReport spacetime_covariance_check(const ContinuumLagrangian& L, RandomStream rng,
                                                   int trials = 20, int dim = 4) {
  int d = dim;
  CovarianceReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    auto gv = detail::random_metric_components(d, rng, 0.15);
    auto m = metric_data_from_components<double>(d, gv, "covariance check");
    std::vector<double> w(d, 0.0);
    w[0] = 1.0;
    for (int i = 1; i < d; ++i) w[i] = 0.25 * rng.sym();
    double rho_bar = 0.5 + 1.5 * rng.uniform();
    double sigma_bar = rho_bar * 0.5 * rng.uniform();
    std::vector<double> c_low;
    if (!L.stored().trivial()) {
      std::vector<double> u(d);
      double g_ww = 0;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g_ww += gv[i * d + j] * w[i] * w[j];
      double alpha = std::sqrt(-g_ww);
      for (int i = 0; i < d; ++i) u[i] = w[i] / alpha;
      auto pr = projection_at<double>(m, u, L.light_speed());
      c_low = detail::on_shell_strain(d, pr, rng, 0.2);
    }
    double base = L.at<double>(m, w, rho_bar, sigma_bar, c_low).value;

    std::vector<double> A(d * d), Ainv(d * d);
    double detA = 0;
    do {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) A[i * d + j] = (i == j ? 1.0 : 0.0) + 0.25 * rng.sym();
      std::vector<double> Acopy = A;
      try {
        detA = det_and_invert<double>(d, Acopy.data(), Ainv.data(), "diffeo");
      } catch (const SingularError&) {
        detA = 0;
      }
    } while (std::abs(detA) < 0.2);

    std::vector<double> w2(d, 0.0), g2(d * d, 0.0), c2;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) w2[i] += A[i * d + j] * w[j];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        double acc = 0;
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) acc += Ainv[a * d + i] * gv[a * d + b] * Ainv[b * d + j];
        g2[i * d + j] = acc;
      }
    if (!c_low.empty()) {
      c2.assign(d * d, 0.0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double acc = 0;
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) acc += Ainv[a * d + i] * c_low[a * d + b] * Ainv[b * d + j];
          c2[i * d + j] = acc;
        }
    }
    auto m2 = metric_data_from_components<double>(d, g2, "covariance check");
    double mapped = L.at<double>(m2, w2, rho_bar / std::abs(detA), sigma_bar / std::abs(detA), c2)
                        .value;
    double want = base / std::abs(detA);
    rep.max_residual = std::max(rep.max_residual, std::abs(mapped - want) / std::abs(want));
  }
  return rep;
}

// value equivariance under a body relabeling ψ acting on (J, R̄, ς̄, G₀):
// fails for stored energies with a pinned material direction
inline CovarianceReport material_covariance_check(const ContinuumLagrangian& L, RandomStream rng,
                                                  int trials = 20, int dim = 4) {
  int d = dim;
  CovarianceReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    auto gv = detail::random_metric_components(d, rng, 0.1);
    auto m = metric_data_from_components<double>(d, gv, "covariance check");
    std::vector<double> J(d * d);
    double detJ = 0;
    std::vector<double> scratch(d * d), scratch2(d * d);
    do {
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) J[i * d + j] = (i == j ? 1.0 : 0.0) + 0.2 * rng.sym();
      scratch = J;
      try {
        detJ = det_and_invert<double>(d, scratch.data(), scratch2.data(), "J");
      } catch (const SingularError&) {
        detJ = 0;
      }
    } while (std::abs(detJ) < 0.2);
    double R_bar = 0.5 + 1.5 * rng.uniform();
    double S_bar = R_bar * 0.5 * rng.uniform();
    std::vector<double> G0(d * d, 0.0);
    for (int A = 1; A < d; ++A)
      for (int B = A; B < d; ++B) {
        double v = (A == B ? 1.0 : 0.0) + 0.2 * rng.sym();
        G0[A * d + B] = v;
        G0[B * d + A] = v;
      }
    std::vector<double> W(d, 0.0);
    W[0] = 1.0;
    double base = material_lagrangian_value<double>(L, m, J, R_bar, S_bar, G0, W);

    // spatial body relabeling D = diag(1, Bsp)
    std::vector<double> D(d * d, 0.0), Dinv(d * d);
    double detD = 0;
    do {
      for (int i = 0; i < d * d; ++i) D[i] = 0;
      D[0] = 1.0;
      for (int A = 1; A < d; ++A)
        for (int B = 1; B < d; ++B) D[A * d + B] = (A == B ? 1.0 : 0.0) + 0.3 * rng.sym();
      scratch = D;
      try {
        detD = det_and_invert<double>(d, scratch.data(), Dinv.data(), "relabeling");
      } catch (const SingularError&) {
        detD = 0;
      }
    } while (std::abs(detD) < 0.2);

    std::vector<double> J2(d * d, 0.0), G2(d * d, 0.0);
    for (int mu = 0; mu < d; ++mu)
      for (int A = 0; A < d; ++A) {
        double acc = 0;
        for (int B = 0; B < d; ++B) acc += J[mu * d + B] * Dinv[B * d + A];
        J2[mu * d + A] = acc;
      }
    for (int A = 0; A < d; ++A)
      for (int B = 0; B < d; ++B) {
        double acc = 0;
        for (int P = 0; P < d; ++P)
          for (int Q = 0; Q < d; ++Q) acc += Dinv[P * d + A] * G0[P * d + Q] * Dinv[Q * d + B];
        G2[A * d + B] = acc;
      }
    double mapped = material_lagrangian_value<double>(L, m, J2, R_bar / std::abs(detD),
                                                      S_bar / std::abs(detD), G2, W);
    double want = base / std::abs(detD);
    rep.max_residual = std::max(rep.max_residual, std::abs(mapped - want) / std::abs(want));
  }
  return rep;
}

// pointwise infinitesimal form of spacetime covariance:
// -w^μ ℓ_{w^ν} + (ϱ̄ℓ_ϱ̄ + ς̄ℓ_ς̄)δ^μ_ν + 2(ℓ_𝖼·𝖼)^μ_ν + 2(ℓ_𝗀·𝗀)^μ_ν - ℓ̄δ^μ_ν = 0
inline double covariance_identity_residual(const ContinuumLagrangian& L,
                                           const MetricData<double>& m,
                                           std::span<const double> w, double rho_bar,
                                           double sigma_bar, std::span<const double> c_low) {
  int d = m.dim;
  auto r = L.at<double>(m, w, rho_bar, sigma_bar, c_low);
  double worst = 0;
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) {
      double v = -w[mu] * r.d_w[nu];
      if (mu == nu) v += rho_bar * r.d_rho + sigma_bar * r.d_sigma - r.value;
      if (!r.d_c.empty())
        for (int g = 0; g < d; ++g) v += 2.0 * r.d_c[mu * d + g] * c_low[g * d + nu];
      for (int g = 0; g < d; ++g) v += 2.0 * r.d_g[mu * d + g] * m.g[g * d + nu];
      worst = std::max(worst, std::abs(v));
    }
  return worst;
}

// chain-rule residual of the dependence on the point:
// ∇_μ[ℓ̄] - ℓ_w·∇_μw - ℓ_ϱ̄ ∇_μϱ̄ - ℓ_ς̄ ∇_μς̄ - ℓ_𝖼 : ∇_μ𝖼 (weight-1 covector)
inline TensorField lagrangian_chain_rule_residual(const ContinuumLagrangian& L,
                                                  const MetricField& g, const EulerianState& st) {
  auto lbar = eulerian_lagrangian_field(L, g, st);
  std::vector<TensorField> deps = lagrangian_state_deps(g, st);
  deps.push_back(lbar);
  int d = st.w.dim();
  bool strained = st.c.valid();
  return TensorField::derived(
      st.w.chart(), Shape{0, 1, 1}, deps,
      [L, g, st, lbar, d, strained](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto ch = christoffel_at<S>(g, x);
        auto r = detail::lagrangian_state_at<S>(L, g, st, x);

        std::vector<S> lv, dlv, wv, dwv, rv, drv, sv, dsv, cv, dcv;
        detail::eval_with_partials<S>(lbar, x, lv, dlv);
        detail::eval_with_partials<S>(st.w, x, wv, dwv);
        detail::eval_with_partials<S>(st.rho, x, rv, drv);
        detail::eval_with_partials<S>(st.sigma, x, sv, dsv);
        if (strained) detail::eval_with_partials<S>(st.c, x, cv, dcv);

        auto nabla_l = covariant_derivative_components<S>(d, Shape{0, 0, 1}, lv, dlv, ch.gamma);
        auto nabla_w = covariant_derivative_components<S>(d, Shape{1, 0, 0}, wv, dwv, ch.gamma);
        auto nabla_r = covariant_derivative_components<S>(d, Shape{0, 0, 1}, rv, drv, ch.gamma);
        auto nabla_s = covariant_derivative_components<S>(d, Shape{0, 0, 1}, sv, dsv, ch.gamma);
        std::vector<S> nabla_c;
        if (strained)
          nabla_c = covariant_derivative_components<S>(d, Shape{0, 2, 0}, cv, dcv, ch.gamma);

        for (int mu = 0; mu < d; ++mu) {
          S acc = nabla_l[mu] - r.d_rho * nabla_r[mu] - r.d_sigma * nabla_s[mu];
          for (int nu = 0; nu < d; ++nu) acc = acc - r.d_w[nu] * nabla_w[mu * d + nu];
          if (strained)
            for (int a = 0; a < d; ++a)
              for (int b = 0; b < d; ++b)
                acc = acc - r.d_c[a * d + b] * nabla_c[mu * d * d + a * d + b];
          out[mu] = acc;
        }
      },
      "chain-rule-residual(" + st.w.name() + ")", 1);
}

}  // namespace relcont
