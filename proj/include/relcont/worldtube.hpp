#pragma once

// World tubes: embeddings Φ of a body-time domain 𝓓 = [λ] x 𝓑 into spacetime.
// The map is closed form; the inverse is a damped Newton solve seeded from a
// coarse preimage grid, cached by exact query point, and polished in dual
// arithmetic so pushforwards stay differentiable to second order.

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>

#include "relcont/lie.hpp"
#include "relcont/metric.hpp"
#include "relcont/random_fields.hpp"

namespace relcont {

class WorldTube {
 public:
  template <class S>
  using MapFn = std::function<void(std::span<const S>, std::span<S>)>;

 private:
  struct Impl {
    Chart dom, tgt;
    std::string family;
    MapFn<double> m0;
    MapFn<D1> m1;
    MapFn<D2> m2;
    MapFn<D3> m3;
    std::vector<std::pair<std::vector<double>, std::vector<double>>> seeds;
    mutable std::shared_mutex mtx;
    mutable std::map<std::vector<double>, std::vector<double>> cache;
  };
  std::shared_ptr<Impl> im_;

  explicit WorldTube(std::shared_ptr<Impl> im) : im_(std::move(im)) {}

 public:
  WorldTube() = default;

  template <class F>
  static WorldTube from_map(Chart dom, Chart tgt, F f, std::string family) {
    if (dom.dim() != tgt.dim())
      throw ConfigError("tube '" + family + "': domain and target dimension differ");
    auto im = std::make_shared<Impl>();
    im->dom = std::move(dom);
    im->tgt = std::move(tgt);
    im->family = std::move(family);
    im->m0 = [f](std::span<const double> X, std::span<double> out) { f(X, out); };
    im->m1 = [f](std::span<const D1> X, std::span<D1> out) { f(X, out); };
    im->m2 = [f](std::span<const D2> X, std::span<D2> out) { f(X, out); };
    im->m3 = [f](std::span<const D3> X, std::span<D3> out) { f(X, out); };
    for (const auto& X : interior_grid(im->dom, 4, 0.0)) {
      std::vector<double> y(im->tgt.dim());
      im->m0(X, y);
      im->seeds.emplace_back(X, y);
    }
    return WorldTube(std::move(im));
  }

  bool valid() const { return im_ != nullptr; }
  const Chart& domain() const { return im_->dom; }
  const Chart& target() const { return im_->tgt; }
  int dim() const { return im_->dom.dim(); }
  const std::string& family() const { return im_->family; }

  template <class S>
  void map(std::span<const S> X, std::span<S> out) const {
    constexpr int depth = dual_depth<S>();
    if constexpr (depth == 0) im_->m0(X, out);
    else if constexpr (depth == 1) im_->m1(X, out);
    else if constexpr (depth == 2) im_->m2(X, out);
    else if constexpr (depth == 3) im_->m3(X, out);
    else throw Error("tube map: derivative depth beyond the supported nesting");
  }

  std::vector<double> map_point(std::span<const double> X) const {
    std::vector<double> y(dim());
    map<double>(X, y);
    return y;
  }

  // J^mu_a = ∂Φ^mu/∂X^a, row-major [mu][a]
  template <class S>
  std::vector<S> jacobian(std::span<const S> X) const {
    using SS = Dual<S>;
    int d = dim();
    std::vector<S> J(d * d);
    std::vector<SS> Xs(d), ys(d);
    for (int a = 0; a < d; ++a) {
      for (int i = 0; i < d; ++i) Xs[i] = SS{X[i], S(i == a ? 1.0 : 0.0)};
      map<SS>(Xs, ys);
      for (int m = 0; m < d; ++m) J[m * d + a] = ys[m].b;
    }
    return J;
  }

  std::vector<double> invert(std::span<const double> x) const {
    int d = dim();
    std::vector<double> key(x.begin(), x.end());
    {
      std::shared_lock lk(im_->mtx);
      auto it = im_->cache.find(key);
      if (it != im_->cache.end()) return it->second;
    }
    // nearest seed
    double best = 1e300;
    std::vector<double> z;
    for (const auto& [X, y] : im_->seeds) {
      double dd = 0;
      for (int i = 0; i < d; ++i) dd += (y[i] - x[i]) * (y[i] - x[i]);
      if (dd < best) {
        best = dd;
        z = X;
      }
    }
    const Chart& dom = im_->dom;
    auto clamp = [&](std::vector<double>& p) {
      for (int i = 0; i < d; ++i) p[i] = std::min(std::max(p[i], dom.lo[i]), dom.hi[i]);
    };
    std::vector<double> r(d), y(d), Jv, step(d), znew(d), rnew(d);
    auto residual = [&](const std::vector<double>& p, std::vector<double>& out) {
      map<double>(p, out);
      double nrm = 0;
      for (int i = 0; i < d; ++i) {
        out[i] -= x[i];
        nrm = std::max(nrm, std::abs(out[i]));
      }
      return nrm;
    };
    double tol = 1e-12 * std::max(1.0, im_->tgt.scale());
    double rn = residual(z, r);
    int it = 0;
    for (; it < 50 && rn > tol; ++it) {
      Jv = jacobian<double>(z);
      solve_linear<double>(d, Jv.data(), r.data(), step.data(), "tube jacobian");
      double damp = 1.0;
      bool accepted = false;
      for (int bt = 0; bt < 12; ++bt) {
        for (int i = 0; i < d; ++i) znew[i] = z[i] - damp * step[i];
        clamp(znew);
        double rnn = residual(znew, rnew);
        if (rnn < rn) {
          z = znew;
          r = rnew;
          rn = rnn;
          accepted = true;
          break;
        }
        damp /= 2;
      }
      if (!accepted) break;
    }
    if (rn > 1e-9 * std::max(1.0, im_->tgt.scale()))
      throw InversionError("tube '" + im_->family + "': point " +
                           point_text(std::span<const double>(x)) +
                           " not inverted (last Newton residual " + std::to_string(rn) +
                           " after " + std::to_string(it) + " iterations)");
    {
      std::unique_lock lk(im_->mtx);
      im_->cache.emplace(std::move(key), z);
    }
    return z;
  }

  // dual-seeded inverse: primal via Newton, nilpotent parts via fixed-point
  // polish (each pass resolves one dual level)
  template <class S>
  std::vector<S> invert_dual(std::span<const S> x) const {
    int d = dim();
    constexpr int depth = dual_depth<S>();
    std::vector<double> xp(d);
    for (int i = 0; i < d; ++i) xp[i] = primal(x[i]);
    auto zp = invert(xp);
    std::vector<S> z(d);
    for (int i = 0; i < d; ++i) z[i] = S(zp[i]);
    if constexpr (depth > 0) {
      std::vector<S> r(d), step(d);
      for (int pass = 0; pass <= depth; ++pass) {
        map<S>(z, r);
        for (int i = 0; i < d; ++i) r[i] = r[i] - x[i];
        auto J = jacobian<S>(z);
        solve_linear<S>(d, J.data(), r.data(), step.data(), "tube jacobian");
        for (int i = 0; i < d; ++i) z[i] = z[i] - step[i];
      }
    }
    return z;
  }
};

// ---- transported fields ----

inline TensorField pushforward_field(const WorldTube& tube, const TensorField& K,
                                     std::string name = "") {
  if (name.empty()) name = "push(" + K.name() + ")";
  Shape sh = K.shape();
  int d = tube.dim();
  return TensorField::derived(
      tube.target(), sh, {K},
      [tube, K, sh, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto X = tube.invert_dual<S>(x);
        auto J = tube.jacobian<S>(X);
        std::vector<S> Jinv(d * d);
        S detJ = det_and_invert<S>(d, J.data(), Jinv.data(), "tube jacobian");
        std::vector<S> kv(sh.ncomp(d));
        K.eval(std::span<const S>(X), std::span<S>(kv));
        int p = sh.p, q = sh.q, rank = p + q;
        S wfac = S(1.0);
        if (sh.weight != 0) wfac = 1.0 / dabs(detJ);
        std::array<int, 8> src{};
        for_each_index(d, rank, [&](const int* idx) {
          S acc = S(0.0);
          for_each_index(d, rank, [&](const int* jdx) {
            S f = wfac;
            for (int r = 0; r < p; ++r) f = f * J[idx[r] * d + jdx[r]];
            for (int s = 0; s < q; ++s) f = f * Jinv[jdx[p + s] * d + idx[p + s]];
            for (int t = 0; t < rank; ++t) src[t] = jdx[t];
            acc = acc + f * kv[flat_index(src.data(), rank, d)];
          });
          out[flat_index(idx, rank, d)] = acc;
        });
      },
      std::move(name), 1);
}

inline TensorField pullback_field(const WorldTube& tube, const TensorField& gamma,
                                  std::string name = "") {
  if (name.empty()) name = "pull(" + gamma.name() + ")";
  Shape sh = gamma.shape();
  int d = tube.dim();
  return TensorField::derived(
      tube.domain(), sh, {gamma},
      [tube, gamma, sh, d](auto X, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> x(d);
        tube.map<S>(X, x);
        auto J = tube.jacobian<S>(X);
        std::vector<S> Jinv(d * d);
        S detJ = det_and_invert<S>(d, J.data(), Jinv.data(), "tube jacobian");
        std::vector<S> gv(sh.ncomp(d));
        gamma.eval(std::span<const S>(x), std::span<S>(gv));
        int p = sh.p, q = sh.q, rank = p + q;
        S wfac = S(1.0);
        if (sh.weight != 0) wfac = dabs(detJ);
        std::array<int, 8> src{};
        for_each_index(d, rank, [&](const int* idx) {
          S acc = S(0.0);
          for_each_index(d, rank, [&](const int* jdx) {
            S f = wfac;
            for (int r = 0; r < p; ++r) f = f * Jinv[idx[r] * d + jdx[r]];
            for (int s = 0; s < q; ++s) f = f * J[jdx[p + s] * d + idx[p + s]];
            for (int t = 0; t < rank; ++t) src[t] = jdx[t];
            acc = acc + f * gv[flat_index(src.data(), rank, d)];
          });
          out[flat_index(idx, rank, d)] = acc;
        });
      },
      std::move(name), 1);
}

// ---- reference (body) fields on 𝓓 ----

struct ReferenceFields {
  TensorField W;  // evolution direction, default ∂_λ
  TensorField R;  // matter density (top form on 𝓑, λ-independent)
  TensorField S;  // entropy density
  TensorField G;  // body metric, degenerate along ∂_λ; invalid for pure fluids
};

template <class FR, class FS>
ReferenceFields make_reference_fields(const Chart& dom, FR r0, FS s0) {
  ReferenceFields rf;
  int d = dom.dim();
  std::vector<double> w(d, 0.0);
  w[0] = 1.0;
  rf.W = TensorField::constant(dom, Shape{1, 0, 0}, w, "W");
  rf.R = TensorField::exact(
      dom, Shape{0, 0, 1},
      [r0](auto X, auto out) { out[0] = r0(X.subspan(1)); }, "R");
  rf.S = TensorField::exact(
      dom, Shape{0, 0, 1},
      [s0](auto X, auto out) { out[0] = s0(X.subspan(1)); }, "S");
  return rf;
}

// body metric with zero λ row/column; g0 acts on the spatial sub-point
template <class FG>
TensorField make_body_metric(const Chart& dom, FG g0, std::string name = "G") {
  int d = dom.dim();
  return TensorField::exact(
      dom, Shape{0, 2, 0},
      [g0, d](auto X, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        for (int i = 0; i < d * d; ++i) out[i] = S(0.0);
        std::vector<S> blk((d - 1) * (d - 1));
        g0(X.subspan(1), std::span<S>(blk));
        for (int A = 1; A < d; ++A)
          for (int B = 1; B < d; ++B) out[A * d + B] = blk[(A - 1) * (d - 1) + (B - 1)];
      },
      std::move(name));
}

// verifies |det TΦ| and timelike worldlines on a sample grid
inline void validate_tube(const WorldTube& tube, const MetricField& g, const TensorField& W) {
  for (const auto& X : interior_grid(tube.domain(), 3, 0.02)) {
    auto J = tube.jacobian<double>(X);
    int d = tube.dim();
    double detJ = determinant<double>(d, J.data(), "tube jacobian");
    if (std::abs(detJ) <= 1e-10)
      throw StateError("tube '" + tube.family() + "': |det TΦ| = " + std::to_string(detJ) +
                       " below 1e-10 at sample point");
    auto x = tube.map_point(X);
    auto m = metric_at<double>(g, std::span<const double>(x));
    auto Wv = W.at(X);
    std::vector<double> w(d, 0.0);
    for (int mu = 0; mu < d; ++mu)
      for (int a = 0; a < d; ++a) w[mu] += J[mu * d + a] * Wv[a];
    double g_ww = 0;
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) g_ww += m.g[mu * d + nu] * w[mu] * w[nu];
    if (!(g_ww < 0))
      throw StateError("tube '" + tube.family() + "': worldline direction not timelike (g(w,w) = " +
                       std::to_string(g_ww) + ") at sample point");
  }
}

// ---- velocities ----

// w = Φ_* W as a field on the image
inline TensorField tube_velocity_w(const WorldTube& tube, const TensorField& W) {
  int d = tube.dim();
  return TensorField::derived(
      tube.target(), Shape{1, 0, 0}, {W},
      [tube, W, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto X = tube.invert_dual<S>(x);
        auto J = tube.jacobian<S>(X);
        std::vector<S> Wv(d);
        W.eval(std::span<const S>(X), std::span<S>(Wv));
        for (int mu = 0; mu < d; ++mu) {
          S acc = S(0.0);
          for (int a = 0; a < d; ++a) acc = acc + J[mu * d + a] * Wv[a];
          out[mu] = acc;
        }
      },
      "w(" + tube.family() + ")", 1);
}

// u = c w / sqrt(-g(w,w))
inline TensorField normalized_velocity(const TensorField& w, const MetricField& g, double c) {
  int d = w.dim();
  return TensorField::derived(
      w.chart(), Shape{1, 0, 0}, {w, g.tensor()},
      [w, g, c, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> wv(d), gv(d * d);
        w.eval(x, std::span<S>(wv));
        g.eval(x, std::span<S>(gv));
        S g_ww = S(0.0);
        for (int m = 0; m < d; ++m)
          for (int n = 0; n < d; ++n) g_ww = g_ww + gv[m * d + n] * wv[m] * wv[n];
        if (!(primal(g_ww) < 0))
          throw StateError("flow direction not timelike at " + point_text(x));
        S alpha = sqrt(-g_ww);
        for (int m = 0; m < d; ++m) out[m] = c * wv[m] / alpha;
      },
      "u(" + w.name() + ")", 0);
}

// ---- projections ----

template <class S>
struct ProjectionData {
  std::vector<S> p_low;  // 𝗉_{μν} = g_{μν} + c⁻² u_μ u_ν
  std::vector<S> P_mix;  // 𝖯^μ_ν = δ^μ_ν + c⁻² u^μ u_ν
  std::vector<S> p_up;   // quotient inverse 𝗉⁺ = g⁻¹ + c⁻² u ⊗ u
  std::vector<S> u_low;
};

template <class S>
ProjectionData<S> projection_at(const MetricData<S>& m, std::span<const S> u, double c) {
  int d = m.dim;
  ProjectionData<S> pr;
  pr.u_low.assign(d, S(0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) pr.u_low[i] = pr.u_low[i] + m.g[i * d + j] * u[j];
  double ic2 = 1.0 / (c * c);
  pr.p_low.resize(d * d);
  pr.P_mix.resize(d * d);
  pr.p_up.resize(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      pr.p_low[i * d + j] = m.g[i * d + j] + ic2 * pr.u_low[i] * pr.u_low[j];
      pr.P_mix[i * d + j] = S(i == j ? 1.0 : 0.0) + ic2 * u[i] * pr.u_low[j];
      pr.p_up[i * d + j] = m.ginv[i * d + j] + ic2 * u[i] * u[j];
    }
  return pr;
}

// 𝗉 expressed through an unnormalized flow direction: g - w♭⊗w♭ / g(w,w)
template <class S>
std::vector<S> flow_projection_low(const MetricData<S>& m, std::span<const S> w) {
  int d = m.dim;
  std::vector<S> wl(d, S(0.0));
  S g_ww = S(0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) wl[i] = wl[i] + m.g[i * d + j] * w[j];
    g_ww = g_ww + wl[i] * w[i];
  }
  std::vector<S> p(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) p[i * d + j] = m.g[i * d + j] - wl[i] * wl[j] / g_ww;
  return p;
}

// ---- deformation tensors ----

// C = Φ*(𝗉) computed without inverting the tube: C = Jᵀ 𝗉(Φ(X)) J
inline TensorField cauchy_green_field(const WorldTube& tube, const MetricField& g,
                                      const TensorField& W) {
  int d = tube.dim();
  return TensorField::derived(
      tube.domain(), Shape{0, 2, 0}, {W, g.tensor()},
      [tube, g, W, d](auto X, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> x(d);
        tube.map<S>(X, x);
        auto J = tube.jacobian<S>(X);
        auto m = metric_at<S>(g, std::span<const S>(x));
        std::vector<S> Wv(d), w(d, S(0.0));
        W.eval(X, std::span<S>(Wv));
        for (int mu = 0; mu < d; ++mu)
          for (int a = 0; a < d; ++a) w[mu] = w[mu] + J[mu * d + a] * Wv[a];
        auto p = flow_projection_low<S>(m, std::span<const S>(w));
        for (int A = 0; A < d; ++A)
          for (int B = 0; B < d; ++B) {
            S acc = S(0.0);
            for (int mu = 0; mu < d; ++mu)
              for (int nu = 0; nu < d; ++nu)
                acc = acc + J[mu * d + A] * p[mu * d + nu] * J[nu * d + B];
            out[A * d + B] = acc;
          }
      },
      "C(" + tube.family() + ")", 1);
}

// 𝖼 = Φ_*(G), degenerate along u by construction
inline TensorField strain_field(const WorldTube& tube, const TensorField& G) {
  return pushforward_field(tube, G, "c(" + tube.family() + ")");
}

// ---- stock tube families ----

inline WorldTube identity_tube(Chart dom, Chart tgt, std::string family = "static") {
  return WorldTube::from_map(
      std::move(dom), std::move(tgt),
      [](auto X, auto out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = X[i];
      },
      std::move(family));
}

inline WorldTube boost_tube(Chart dom, Chart tgt, double v) {
  double gamma = 1.0 / std::sqrt(1 - v * v);
  return WorldTube::from_map(
      std::move(dom), std::move(tgt),
      [gamma, v](auto X, auto out) {
        out[0] = gamma * X[0];
        out[1] = X[1] + gamma * v * X[0];
        for (std::size_t i = 2; i < out.size(); ++i) out[i] = X[i];
      },
      "boost");
}

inline WorldTube stretch_tube(Chart dom, Chart tgt, double s) {
  return WorldTube::from_map(
      std::move(dom), std::move(tgt),
      [s](auto X, auto out) {
        out[0] = X[0];
        for (std::size_t i = 1; i < out.size(); ++i) out[i] = s * X[i];
      },
      "stretch");
}

inline WorldTube shear_tube(Chart dom, Chart tgt, double k) {
  return WorldTube::from_map(
      std::move(dom), std::move(tgt),
      [k](auto X, auto out) {
        out[0] = X[0];
        out[1] = X[1] + k * X[2];
        for (std::size_t i = 2; i < out.size(); ++i) out[i] = X[i];
      },
      "shear");
}

// identity plus a low-frequency trig perturbation; amp must stay well below
// 1/(nterms·max|ω|) so the map remains a diffeomorphism onto its image
inline WorldTube perturbed_identity_tube(Chart dom, Chart tgt, RandomStream& rng, double amp) {
  std::vector<TrigPoly> pert;
  for (int mu = 0; mu < dom.dim(); ++mu) pert.push_back(make_trig_poly(dom, rng, amp, 3, 1));
  return WorldTube::from_map(
      std::move(dom), std::move(tgt),
      [pert](auto X, auto out) {
        for (std::size_t m = 0; m < out.size(); ++m) out[m] = X[m] + pert[m](X);
      },
      "perturbed");
}

}  // namespace relcont
