#pragma once
// Embedded hypersurfaces: adapted frames, extrinsic curvature, surface
// quadrature with boundary bookkeeping, Gibbons-Hawking-York integrals and
// their first variations, Gauss-Codazzi contractions, junction mismatches.

#include <functional>

#include "relcont/dynamics.hpp"
#include "relcont/metric.hpp"
#include "relcont/oracle.hpp"

namespace relcont {

class Hypersurface {
  using Map0 = std::function<void(std::span<const double>, std::span<double>)>;
  using Map1 = std::function<void(std::span<const D1>, std::span<D1>)>;
  using Map2 = std::function<void(std::span<const D2>, std::span<D2>)>;
  using Map3 = std::function<void(std::span<const D3>, std::span<D3>)>;

  Chart chart_{"surf", {0.0}, {1.0}};
  MetricField ambient_;
  int side_ = 1;
  std::vector<int> nodes_;
  std::vector<bool> closed_;
  std::vector<bool> pole_;
  Map0 m0_;
  Map1 m1_;
  Map2 m2_;
  Map3 m3_;

 public:
  Hypersurface() = default;

  template <class F>
  static Hypersurface from_embedding(Chart surf, MetricField ambient, F sigma, int side = 1) {
    if (surf.dim() + 1 != ambient.dim())
      throw ConfigError("hypersurface '" + surf.name + "': chart dimension " +
                        std::to_string(surf.dim()) + " does not embed in ambient dimension " +
                        std::to_string(ambient.dim()));
    Hypersurface s;
    s.chart_ = std::move(surf);
    s.ambient_ = std::move(ambient);
    s.side_ = side;
    s.nodes_.assign(s.chart_.dim(), 16);
    s.closed_.assign(s.chart_.dim(), false);
    s.pole_.assign(s.chart_.dim(), false);
    s.m0_ = [sigma](std::span<const double> Y, std::span<double> x) { sigma(Y, x); };
    s.m1_ = [sigma](std::span<const D1> Y, std::span<D1> x) { sigma(Y, x); };
    s.m2_ = [sigma](std::span<const D2> Y, std::span<D2> x) { sigma(Y, x); };
    s.m3_ = [sigma](std::span<const D3> Y, std::span<D3> x) { sigma(Y, x); };
    return s;
  }

  const Chart& chart() const { return chart_; }
  const MetricField& ambient() const { return ambient_; }
  int side() const { return side_; }
  int sdim() const { return chart_.dim(); }
  int adim() const { return ambient_.dim(); }

  Hypersurface& set_nodes(int per_axis) {
    nodes_.assign(chart_.dim(), per_axis);
    return *this;
  }
  Hypersurface& set_axis_nodes(int axis, int n) {
    nodes_.at(axis) = n;
    return *this;
  }
  Hypersurface& set_closed(int axis, bool c = true) {
    closed_.at(axis) = c;
    return *this;
  }
  // axis whose chart edges are coordinate degeneracies, not boundaries; its
  // faces carry zero measure and are skipped
  Hypersurface& set_pole(int axis, bool p = true) {
    pole_.at(axis) = p;
    return *this;
  }
  int axis_nodes(int axis) const { return nodes_.at(axis); }
  bool closed(int axis) const { return closed_.at(axis); }
  bool pole(int axis) const { return pole_.at(axis); }

  // ambient metric swapped, everything else shared; junction tests compare
  // the two sides of a matched spacetime this way
  Hypersurface with_ambient(MetricField g) const {
    Hypersurface s = *this;
    if (g.dim() != ambient_.dim())
      throw ConfigError("hypersurface '" + chart_.name + "': replacement ambient dimension " +
                        std::to_string(g.dim()) + " != " + std::to_string(ambient_.dim()));
    s.ambient_ = std::move(g);
    return s;
  }

  template <class S>
  void embed(std::span<const S> Y, std::span<S> x) const {
    constexpr int depth = dual_depth<S>();
    if constexpr (depth == 0)
      m0_(Y, x);
    else if constexpr (depth == 1)
      m1_(Y, x);
    else if constexpr (depth == 2)
      m2_(Y, x);
    else if constexpr (depth == 3)
      m3_(Y, x);
    else
      throw StateError("embedding of '" + chart_.name + "' has no evaluator this deep");
  }

  std::vector<double> embed_point(std::span<const double> Y) const {
    std::vector<double> x(adim());
    m0_(Y, std::span<double>(x));
    return x;
  }
};

// ---- adapted frame and extrinsic curvature ----

template <class S>
struct SurfFrame {
  int m = 0, d = 0;
  std::vector<S> x;        // ambient point
  std::vector<S> J;        // tangents, J[a*d + mu] = ∂σ^μ/∂Y^a
  std::vector<S> h, hinv;  // induced metric and inverse, m×m
  S mu_h{};                // area density √|det h|
  std::vector<S> n, n_low;
  double eps = 1.0;  // sign of g(n,n)
  MetricData<S> amb;
};

template <class S>
SurfFrame<S> surf_frame_at(const Hypersurface& surf, std::span<const S> Y) {
  using DS = Dual<S>;
  int m = surf.sdim(), d = surf.adim();
  SurfFrame<S> f;
  f.m = m;
  f.d = d;
  f.x.resize(d);
  surf.embed<S>(Y, f.x);
  f.amb = metric_at<S>(surf.ambient(), f.x);

  f.J.assign(m * d, S(0.0));
  {
    std::vector<DS> Yd(m), xd(d);
    for (int i = 0; i < m; ++i) Yd[i] = DS{Y[i], S(0.0)};
    for (int a = 0; a < m; ++a) {
      Yd[a].b = S(1.0);
      surf.embed<DS>(Yd, xd);
      for (int mu = 0; mu < d; ++mu) f.J[a * d + mu] = xd[mu].b;
      Yd[a].b = S(0.0);
    }
  }

  f.h.assign(m * m, S(0.0));
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      S acc = S(0.0);
      for (int mu = 0; mu < d; ++mu)
        for (int nu = 0; nu < d; ++nu)
          acc = acc + f.amb.g[mu * d + nu] * f.J[a * d + mu] * f.J[b * d + nu];
      f.h[a * m + b] = acc;
    }
  f.hinv.resize(m * m);
  S det_h = det_and_invert<S>(m, f.h.data(), f.hinv.data(), "induced metric");
  f.mu_h = sqrt(dabs(det_h));

  // normal covector by the generalized cross product of the tangents; it
  // annihilates every J_a by construction
  std::vector<S> omega(d, S(0.0));
  for_each_permutation(d, [&](const int* p, int sign) {
    S t = S(double(sign));
    for (int a = 0; a < m; ++a) t = t * f.J[a * d + p[a + 1]];
    omega[p[0]] = omega[p[0]] + t;
  });
  std::vector<S> nup(d, S(0.0));
  S q = S(0.0);
  for (int mu = 0; mu < d; ++mu) {
    for (int nu = 0; nu < d; ++nu) nup[mu] = nup[mu] + f.amb.ginv[mu * d + nu] * omega[nu];
    q = q + nup[mu] * omega[mu];
  }
  if (!(dabs(primal(q)) > 1e-20))
    throw StateError("hypersurface '" + surf.chart().name + "': degenerate frame at " +
                     point_text(Y));
  f.eps = primal(q) > 0 ? 1.0 : -1.0;
  S scale = double(surf.side()) / sqrt(dabs(q));
  f.n.resize(d);
  f.n_low.assign(d, S(0.0));
  for (int mu = 0; mu < d; ++mu) f.n[mu] = scale * nup[mu];
  for (int mu = 0; mu < d; ++mu)
    for (int nu = 0; nu < d; ++nu) f.n_low[mu] = f.n_low[mu] + f.amb.g[mu * d + nu] * f.n[nu];
  return f;
}

template <class S>
struct SurfGeom {
  SurfFrame<S> fr;
  std::vector<S> K;      // -g(∇_{J_a} J_b, n), symmetric
  std::vector<S> K_alt;  // g(J_a, ∇_{J_b} n); equality is a standing invariant
  std::vector<S> dh;     // ∂_c h_ab, [c*m*m + a*m + b]
  std::vector<S> dn;     // ∂_b n^μ, [b*d + mu]
  S k{}, trK2{};
};

template <class S>
SurfGeom<S> surf_geom_at(const Hypersurface& surf, std::span<const S> Y) {
  using DS = Dual<S>;
  int m = surf.sdim(), d = surf.adim();
  SurfGeom<S> g;
  g.fr = surf_frame_at<S>(surf, Y);
  const auto& f = g.fr;

  g.dh.resize(m * m * m);
  g.dn.resize(m * d);
  {
    std::vector<DS> Yd(m);
    for (int i = 0; i < m; ++i) Yd[i] = DS{Y[i], S(0.0)};
    for (int c = 0; c < m; ++c) {
      Yd[c].b = S(1.0);
      auto fd = surf_frame_at<DS>(surf, Yd);
      for (int i = 0; i < m * m; ++i) g.dh[c * m * m + i] = fd.h[i].b;
      for (int mu = 0; mu < d; ++mu) g.dn[c * d + mu] = fd.n[mu].b;
      Yd[c].b = S(0.0);
    }
  }

  auto gamma = christoffel_at<S>(surf.ambient(), std::span<const S>(f.x)).gamma;
  auto chr = [&](int l, int a, int b) -> const S& { return gamma[(l * d + a) * d + b]; };

  // second embedding derivatives for the symmetric definition
  std::vector<S> d2s(m * m * d);
  {
    using DDS = Dual<DS>;
    std::vector<DDS> Yd(m), xd(d);
    for (int i = 0; i < m; ++i) Yd[i] = DDS{DS{Y[i], S(0.0)}, DS{}};
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        Yd[a].a.b = S(1.0);
        Yd[b].b.a = S(1.0);
        surf.embed<DDS>(Yd, xd);
        for (int mu = 0; mu < d; ++mu) {
          d2s[(a * m + b) * d + mu] = xd[mu].b.b;
          d2s[(b * m + a) * d + mu] = xd[mu].b.b;
        }
        Yd[a].a.b = S(0.0);
        Yd[b].b.a = S(0.0);
      }
  }

  g.K.resize(m * m);
  g.K_alt.resize(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      S acc = S(0.0);
      for (int mu = 0; mu < d; ++mu) {
        S cov = d2s[(a * m + b) * d + mu];
        for (int r = 0; r < d; ++r)
          for (int s = 0; s < d; ++s)
            cov = cov + chr(mu, r, s) * f.J[a * d + r] * f.J[b * d + s];
        acc = acc - cov * f.n_low[mu];
      }
      g.K[a * m + b] = acc;

      S alt = S(0.0);
      for (int mu = 0; mu < d; ++mu) {
        S dn = g.dn[b * d + mu];
        for (int r = 0; r < d; ++r)
          for (int s = 0; s < d; ++s)
            dn = dn + chr(mu, r, s) * f.J[b * d + r] * f.n[s];
        for (int nu = 0; nu < d; ++nu)
          alt = alt + f.amb.g[nu * d + mu] * f.J[a * d + nu] * dn;
      }
      g.K_alt[a * m + b] = alt;
    }

  g.k = S(0.0);
  g.trK2 = S(0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      g.k = g.k + f.hinv[a * m + b] * g.K[a * m + b];
      for (int c = 0; c < m; ++c)
        for (int e = 0; e < m; ++e)
          g.trK2 = g.trK2 + f.hinv[a * m + c] * f.hinv[b * m + e] * g.K[a * m + b] * g.K[c * m + e];
    }
  return g;
}

// surface Christoffel symbols of the induced metric, [c][a][b]
template <class S>
std::vector<S> surface_christoffel(const SurfGeom<S>& g) {
  int m = g.fr.m;
  std::vector<S> out(m * m * m, S(0.0));
  for (int c = 0; c < m; ++c)
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        S acc = S(0.0);
        for (int e = 0; e < m; ++e)
          acc = acc + 0.5 * g.fr.hinv[c * m + e] *
                          (g.dh[a * m * m + e * m + b] + g.dh[b * m * m + e * m + a] -
                           g.dh[e * m * m + a * m + b]);
        out[(c * m + a) * m + b] = acc;
      }
  return out;
}

// ---- quadrature ----

struct SurfaceQuadrature {
  std::vector<std::vector<double>> Y;
  std::vector<double> w;
};

namespace detail {

inline void axis_rule(const Hypersurface& surf, int axis, std::vector<double>& pts,
                      std::vector<double>& wts) {
  double lo = surf.chart().lo[axis], hi = surf.chart().hi[axis];
  int n = surf.axis_nodes(axis);
  pts.clear();
  wts.clear();
  if (surf.closed(axis)) {
    // periodic direction: the uniform rule converges spectrally
    double step = (hi - lo) / n;
    for (int i = 0; i < n; ++i) {
      pts.push_back(lo + (i + 0.5) * step);
      wts.push_back(step);
    }
    return;
  }
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);
  for (int i = 0; i < n; ++i) {
    pts.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[i]);
    wts.push_back(0.5 * (hi - lo) * gw[i]);
  }
}

}  // namespace detail

inline SurfaceQuadrature surface_quadrature(const Hypersurface& surf) {
  int m = surf.sdim();
  std::vector<std::vector<double>> pts(m), wts(m);
  for (int a = 0; a < m; ++a) detail::axis_rule(surf, a, pts[a], wts[a]);
  SurfaceQuadrature q;
  std::vector<int> idx(m, 0);
  while (true) {
    std::vector<double> Y(m);
    double w = 1.0;
    for (int a = 0; a < m; ++a) {
      Y[a] = pts[a][idx[a]];
      w *= wts[a][idx[a]];
    }
    q.Y.push_back(std::move(Y));
    q.w.push_back(w);
    int a = m - 1;
    while (a >= 0 && ++idx[a] == int(pts[a].size())) idx[a--] = 0;
    if (a < 0) break;
  }
  return q;
}

template <class F>
double integrate_surface(const Hypersurface& surf, F f) {
  auto q = surface_quadrature(surf);
  double acc = 0;
  for (std::size_t i = 0; i < q.Y.size(); ++i) acc += q.w[i] * f(std::span<const double>(q.Y[i]));
  return acc;
}

// ---- boundary faces of the surface chart ----

struct SurfaceFace {
  int axis;
  int dir;  // -1 lower bound, +1 upper bound
};

inline std::vector<SurfaceFace> surface_faces(const Hypersurface& surf) {
  std::vector<SurfaceFace> out;
  for (int a = 0; a < surf.sdim(); ++a)
    if (!surf.closed(a) && !surf.pole(a)) {
      out.push_back({a, -1});
      out.push_back({a, +1});
    }
  return out;
}

// quadrature over one face, with the fixed coordinate filled in
inline SurfaceQuadrature face_quadrature(const Hypersurface& surf, SurfaceFace face) {
  int m = surf.sdim();
  double bound = face.dir > 0 ? surf.chart().hi[face.axis] : surf.chart().lo[face.axis];
  SurfaceQuadrature q;
  if (m == 1) {
    q.Y.push_back({bound});
    q.w.push_back(1.0);
    return q;
  }
  std::vector<std::vector<double>> pts(m), wts(m);
  for (int a = 0; a < m; ++a)
    if (a != face.axis) detail::axis_rule(surf, a, pts[a], wts[a]);
  std::vector<int> axes;
  for (int a = 0; a < m; ++a)
    if (a != face.axis) axes.push_back(a);
  std::vector<int> idx(axes.size(), 0);
  while (true) {
    std::vector<double> Y(m);
    Y[face.axis] = bound;
    double w = 1.0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
      Y[axes[i]] = pts[axes[i]][idx[i]];
      w *= wts[axes[i]][idx[i]];
    }
    q.Y.push_back(std::move(Y));
    q.w.push_back(w);
    int a = int(axes.size()) - 1;
    while (a >= 0 && ++idx[a] == int(pts[axes[a]].size())) idx[a--] = 0;
    if (a < 0) break;
  }
  return q;
}

struct FaceFrame {
  std::vector<double> nu_low, nu_up;  // outward unit conormal within (Σ, h)
  double sigma = 1.0;                 // h(ν,ν)
  double mu_gamma = 0.0;              // area density of the face
};

inline FaceFrame face_frame(const SurfFrame<double>& f, SurfaceFace face) {
  int m = f.m;
  FaceFrame out;
  double haa = f.hinv[face.axis * m + face.axis];
  out.sigma = haa > 0 ? 1.0 : -1.0;
  double scale = double(face.dir) / std::sqrt(std::abs(haa));
  out.nu_low.assign(m, 0.0);
  out.nu_low[face.axis] = scale;
  out.nu_up.assign(m, 0.0);
  for (int a = 0; a < m; ++a) out.nu_up[a] = f.hinv[a * m + face.axis] * scale;
  if (m == 1) {
    out.mu_gamma = 1.0;
    return out;
  }
  std::vector<double> gm((m - 1) * (m - 1));
  int i = 0;
  for (int a = 0; a < m; ++a) {
    if (a == face.axis) continue;
    int j = 0;
    for (int b = 0; b < m; ++b) {
      if (b == face.axis) continue;
      gm[i * (m - 1) + j] = f.h[a * m + b];
      ++j;
    }
    ++i;
  }
  out.mu_gamma = std::sqrt(std::abs(determinant<double>(m - 1, gm.data(), "face metric")));
  return out;
}

// ---- Gibbons-Hawking-York ----

// (1/χ) ∫ ε k μ(h)
inline double ghy_integral(const Hypersurface& surf, double chi = 1.0) {
  return integrate_surface(surf, [&](std::span<const double> Y) {
           auto g = surf_geom_at<double>(surf, Y);
           return g.fr.eps * g.k * primal(g.fr.mu_h);
         }) /
         chi;
}

// first variation of ∫ k μ(h) under a fixed-surface metric perturbation:
//   ½[∫((K - k h):δh⁻¹ - 𝗀(đV, n)) μ(h) - ∮ σ h(đW, ν) μ(γ)]
// with đV^μ = 𝗀^{αβ} δΓ^μ_{αβ} - 𝗀^{μβ} δΓ^α_{αβ} and đW = (i*_Σ(i_n δ𝗀))^♯h
inline double ghy_metric_variation(const Hypersurface& surf, const TensorField& dg) {
  int d = surf.adim(), m = surf.sdim();
  auto conn = Connection::levi_civita(surf.ambient());

  double interior = integrate_surface(surf, [&](std::span<const double> Y) {
    auto ge = surf_geom_at<double>(surf, Y);
    const auto& f = ge.fr;
    std::vector<double> dgv(d * d);
    dg.eval(std::span<const double>(f.x), std::span<double>(dgv));

    std::vector<double> dh(m * m, 0.0);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int mu = 0; mu < d; ++mu)
          for (int nu = 0; nu < d; ++nu)
            dh[a * m + b] += dgv[mu * d + nu] * f.J[a * d + mu] * f.J[b * d + nu];
    double term1 = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        double dhinv = 0;
        for (int c = 0; c < m; ++c)
          for (int e = 0; e < m; ++e)
            dhinv -= f.hinv[a * m + c] * f.hinv[b * m + e] * dh[c * m + e];
        term1 += (ge.K[a * m + b] - ge.k * f.h[a * m + b]) * dhinv;
      }

    std::vector<double> dgval, ddg;
    detail::eval_with_partials<double>(dg, f.x, dgval, ddg);
    auto gamma = conn.christoffel<double>(std::span<const double>(f.x));
    auto grad_dg =
        covariant_derivative_components<double>(d, Shape{0, 2, 0}, dgval, ddg, gamma);
    auto nabla = [&](int al, int si, int be) { return grad_dg[(al * d + si) * d + be]; };
    std::vector<double> dGamma(d * d * d, 0.0);
    for (int mu = 0; mu < d; ++mu)
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be) {
          double acc = 0;
          for (int si = 0; si < d; ++si)
            acc += 0.5 * f.amb.ginv[mu * d + si] *
                   (nabla(al, si, be) + nabla(be, si, al) - nabla(si, al, be));
          dGamma[(mu * d + al) * d + be] = acc;
        }
    double term2 = 0;
    for (int mu = 0; mu < d; ++mu) {
      double dV = 0;
      for (int al = 0; al < d; ++al)
        for (int be = 0; be < d; ++be) {
          dV += f.amb.ginv[al * d + be] * dGamma[(mu * d + al) * d + be];
          dV -= f.amb.ginv[mu * d + be] * dGamma[(al * d + al) * d + be];
        }
      term2 -= dV * f.n_low[mu];
    }
    return (term1 + term2) * primal(f.mu_h);
  });

  double boundary = 0;
  for (auto face : surface_faces(surf)) {
    auto q = face_quadrature(surf, face);
    for (std::size_t i = 0; i < q.Y.size(); ++i) {
      auto f = surf_frame_at<double>(surf, std::span<const double>(q.Y[i]));
      auto ff = face_frame(f, face);
      std::vector<double> dgv(d * d);
      dg.eval(std::span<const double>(f.x), std::span<double>(dgv));
      // đW^a = h^{ab} J^μ_b n^α δg_{αμ}; only its ν-component enters
      double hWnu = 0;
      for (int b = 0; b < m; ++b) {
        double pull = 0;
        for (int mu = 0; mu < d; ++mu)
          for (int al = 0; al < d; ++al)
            pull += f.J[b * d + mu] * f.n[al] * dgv[al * d + mu];
        hWnu += ff.nu_up[b] * pull;
      }
      boundary += q.w[i] * ff.sigma * hWnu * ff.mu_gamma;
    }
  }
  return 0.5 * (interior - boundary);
}

// first variation of ∫ k μ(h) under the surface displacement δσ = f n + J·X:
//   ∫ f (k² - TrK² - Ric(n,n)) μ(h) + ∮ σ h(k X - ε grad^Σ f, ν) μ(γ)
inline double ghy_surface_variation(const Hypersurface& surf, const TensorField& f,
                                    const TensorField& X) {
  int d = surf.adim(), m = surf.sdim();
  double interior = integrate_surface(surf, [&](std::span<const double> Y) {
    auto ge = surf_geom_at<double>(surf, Y);
    auto cur = curvature_at<double>(surf.ambient(), std::span<const double>(ge.fr.x));
    double ric_nn = 0;
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu)
        ric_nn += cur.ricci[mu * d + nu] * ge.fr.n[mu] * ge.fr.n[nu];
    double fv = f.at(Y)[0];
    return fv * (ge.k * ge.k - ge.trK2 - ric_nn) * primal(ge.fr.mu_h);
  });

  double boundary = 0;
  for (auto face : surface_faces(surf)) {
    auto q = face_quadrature(surf, face);
    for (std::size_t i = 0; i < q.Y.size(); ++i) {
      std::span<const double> Y(q.Y[i]);
      auto ge = surf_geom_at<double>(surf, Y);
      auto ff = face_frame(ge.fr, face);
      std::vector<double> fval, df;
      detail::eval_with_partials<double>(f, Y, fval, df);
      std::vector<double> Xv(m);
      X.eval(Y, std::span<double>(Xv));
      double flux = 0;
      for (int a = 0; a < m; ++a) {
        double gradf = 0;
        for (int b = 0; b < m; ++b) gradf += ge.fr.hinv[a * m + b] * df[b];
        flux += (ge.k * Xv[a] - ge.fr.eps * gradf) * ff.nu_low[a];
      }
      boundary += q.w[i] * ff.sigma * flux * ff.mu_gamma;
    }
  }
  return interior + boundary;
}

// ---- pointwise first variations under δσ = f n + J·X ----

struct SurfaceVariationData {
  std::vector<double> dJ;  // δ(tangent map), [a*d + mu]
  std::vector<double> dn;  // δn^μ
  std::vector<double> dh;  // δh_ab
  double dmu = 0.0;        // δμ(h)
  std::vector<double> dK;  // δK_ab
  double dk = 0.0;
};

inline SurfaceVariationData surface_variation_at(const Hypersurface& surf, const TensorField& f,
                                                 const TensorField& X,
                                                 std::span<const double> Y) {
  int d = surf.adim(), m = surf.sdim();
  auto ge = surf_geom_at<double>(surf, Y);
  const auto& fr = ge.fr;
  double eps = fr.eps;
  auto gam_s = surface_christoffel(ge);

  // per-axis derivatives of K and k
  std::vector<double> dKc(m * m * m);
  std::vector<double> dkc(m);
  {
    std::vector<D1> Yd(m);
    for (int i = 0; i < m; ++i) Yd[i] = D1{Y[i], 0.0};
    for (int c = 0; c < m; ++c) {
      Yd[c].b = 1.0;
      auto gd = surf_geom_at<D1>(surf, Yd);
      for (int i = 0; i < m * m; ++i) dKc[c * m * m + i] = gd.K[i].b;
      dkc[c] = gd.k.b;
      Yd[c].b = 0.0;
    }
  }

  std::vector<double> fval, df, Xv, dX;
  detail::eval_with_partials<double>(f, Y, fval, df);
  detail::eval_with_partials<double>(X, Y, Xv, dX);
  double f0 = fval[0];
  // surface Hessian of f
  std::vector<double> hess(m * m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double acc = f.partial2(Y, a, b)[0];
      for (int c = 0; c < m; ++c) acc -= gam_s[(c * m + a) * m + b] * df[c];
      hess[a * m + b] = acc;
    }

  auto gamma = christoffel_at<double>(surf.ambient(), std::span<const double>(fr.x)).gamma;
  auto cur = curvature_at<double>(surf.ambient(), std::span<const double>(fr.x));
  auto chr = [&](int l, int a, int b) { return gamma[(l * d + a) * d + b]; };

  // ambient covariant derivative of n along each tangent direction
  std::vector<double> covn(m * d);
  for (int a = 0; a < m; ++a)
    for (int mu = 0; mu < d; ++mu) {
      double acc = ge.dn[a * d + mu];
      for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) acc += chr(mu, r, s) * fr.J[a * d + r] * fr.n[s];
      covn[a * d + mu] = acc;
    }

  SurfaceVariationData out;

  // δTσ(v) = (df·v) n + f ∇_v n + J·∇^Σ_v X - ε K(v,X) n
  out.dJ.assign(m * d, 0.0);
  for (int a = 0; a < m; ++a) {
    double KX = 0;
    for (int c = 0; c < m; ++c) KX += ge.K[a * m + c] * Xv[c];
    for (int mu = 0; mu < d; ++mu) {
      double acc = df[a] * fr.n[mu] + f0 * covn[a * d + mu] - eps * KX * fr.n[mu];
      for (int b = 0; b < m; ++b) {
        double covX = dX[a * m + b];
        for (int c = 0; c < m; ++c) covX += gam_s[(b * m + a) * m + c] * Xv[c];
        acc += fr.J[b * d + mu] * covX;
      }
      out.dJ[a * d + mu] = acc;
    }
  }

  // δn = J·(-ε grad^Σ f + (i_X K)^♯h)
  out.dn.assign(d, 0.0);
  for (int a = 0; a < m; ++a) {
    double comp = 0;
    for (int b = 0; b < m; ++b) {
      double KX = 0;
      for (int c = 0; c < m; ++c) KX += ge.K[b * m + c] * Xv[c];
      comp += fr.hinv[a * m + b] * (-eps * df[b] + KX);
    }
    for (int mu = 0; mu < d; ++mu) out.dn[mu] += fr.J[a * d + mu] * comp;
  }

  // δh = 2 f K + £_X h
  out.dh.assign(m * m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double lie = 0;
      for (int c = 0; c < m; ++c)
        lie += Xv[c] * ge.dh[c * m * m + a * m + b] + fr.h[c * m + b] * dX[a * m + c] +
               fr.h[a * m + c] * dX[b * m + c];
      out.dh[a * m + b] = 2.0 * f0 * ge.K[a * m + b] + lie;
    }

  // δμ(h) = (f k + div^Σ X) μ(h)
  {
    double divX = 0;
    for (int a = 0; a < m; ++a) {
      divX += dX[a * m + a];
      for (int c = 0; c < m; ++c) divX += gam_s[(a * m + a) * m + c] * Xv[c];
    }
    out.dmu = (f0 * ge.k + divX) * primal(fr.mu_h);
  }

  // δK = f K·K - f R(n,·,n,·) - ε ∇^Σ df + £_X K
  out.dK.assign(m * m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double K2 = 0;
      for (int c = 0; c < m; ++c)
        for (int e = 0; e < m; ++e)
          K2 += ge.K[a * m + c] * fr.hinv[c * m + e] * ge.K[e * m + b];
      double Rnn = 0;  // R_{μρνσ} n^μ J^ρ_a n^ν J^σ_b
      for (int mu = 0; mu < d; ++mu)
        for (int rho = 0; rho < d; ++rho)
          for (int nu = 0; nu < d; ++nu)
            for (int si = 0; si < d; ++si)
              Rnn += fr.n_low[mu] * cur.riemann[((mu * d + rho) * d + nu) * d + si] * fr.n[nu] *
                     fr.J[a * d + rho] * fr.J[b * d + si];
      double lie = 0;
      for (int c = 0; c < m; ++c)
        lie += Xv[c] * dKc[c * m * m + a * m + b] + ge.K[c * m + b] * dX[a * m + c] +
               ge.K[a * m + c] * dX[b * m + c];
      out.dK[a * m + b] = f0 * K2 - f0 * Rnn - eps * hess[a * m + b] + lie;
    }

  // δk = -f TrK² - f Ric(n,n) - ε Δ^Σ f + dk·X
  {
    double ric_nn = 0;
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu)
        ric_nn += cur.ricci[mu * d + nu] * fr.n[mu] * fr.n[nu];
    double lap = 0;
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) lap += fr.hinv[a * m + b] * hess[a * m + b];
    double kdrift = 0;
    for (int c = 0; c < m; ++c) kdrift += dkc[c] * Xv[c];
    out.dk = -f0 * ge.trK2 - f0 * ric_nn - eps * lap + kdrift;
  }
  return out;
}

// σ_ε = σ + ε (f n + J·X) with the frame taken from the base surface
inline Hypersurface displaced_surface(const Hypersurface& base, const TensorField& f,
                                      const TensorField& X, double eps) {
  int d = base.adim(), m = base.sdim();
  auto emb = [base, f, X, eps, d, m](auto Y, auto x) {
    using S = std::remove_cvref_t<decltype(x[0])>;
    auto fr = surf_frame_at<S>(base, Y);
    std::vector<S> fv(1), Xv(m);
    f.eval(Y, std::span<S>(fv));
    X.eval(Y, std::span<S>(Xv));
    for (int mu = 0; mu < d; ++mu) {
      S disp = fv[0] * fr.n[mu];
      for (int a = 0; a < m; ++a) disp = disp + fr.J[a * d + mu] * Xv[a];
      x[mu] = fr.x[mu] + eps * disp;
    }
  };
  auto out = Hypersurface::from_embedding(base.chart(), base.ambient(), emb, base.side());
  for (int a = 0; a < m; ++a) {
    out.set_axis_nodes(a, base.axis_nodes(a));
    out.set_closed(a, base.closed(a));
    out.set_pole(a, base.pole(a));
  }
  return out;
}

// ---- Gauss-Codazzi and junction conditions ----

// per point: |G(n,n) + ½(ε R^Σ + TrK² - k²)| and |G(J_c,n) - ∇^Σ_a K^a_c + ∂_c k|
inline ResidualField gauss_codazzi_residual(const Hypersurface& surf,
                                            const std::vector<std::vector<double>>& pts,
                                            double tol, std::string mode) {
  int d = surf.adim(), m = surf.sdim();
  // induced metric as a field so the intrinsic curvature reuses the stock path
  auto h_field = TensorField::exact(
      surf.chart(), Shape{0, 2, 0},
      [surf](auto Y, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto fr = surf_frame_at<S>(surf, Y);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = fr.h[i];
      },
      "induced-h");
  // signature tag of h is never consulted below (curvature works on raw
  // components), so a fixed tag with validation off is safe for either case
  MetricField hm(h_field, MetricSignature::Riemannian, false);

  ResidualField rf;
  rf.name = "gauss-codazzi";
  rf.mode = std::move(mode);
  rf.tolerance = tol;
  for (const auto& pt : pts) {
    std::span<const double> Y(pt);
    auto ge = surf_geom_at<double>(surf, Y);
    const auto& fr = ge.fr;
    auto cur = curvature_at<double>(surf.ambient(), std::span<const double>(fr.x));
    double Rs = curvature_at<double>(hm, Y).scalar;

    double Gnn = 0;
    std::vector<double> GJn(m, 0.0);
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        Gnn += cur.einstein_low[mu * d + nu] * fr.n[mu] * fr.n[nu];
        for (int c = 0; c < m; ++c)
          GJn[c] += cur.einstein_low[mu * d + nu] * fr.J[c * d + mu] * fr.n[nu];
      }
    double gauss = Gnn + 0.5 * (fr.eps * Rs + ge.trK2 - ge.k * ge.k);

    auto gam_s = surface_christoffel(ge);
    std::vector<double> dKc(m * m * m);
    std::vector<double> dkc(m);
    {
      std::vector<D1> Yd(m);
      for (int i = 0; i < m; ++i) Yd[i] = D1{pt[i], 0.0};
      for (int c = 0; c < m; ++c) {
        Yd[c].b = 1.0;
        auto gd = surf_geom_at<D1>(surf, Yd);
        for (int i = 0; i < m * m; ++i) dKc[c * m * m + i] = gd.K[i].b;
        dkc[c] = gd.k.b;
        Yd[c].b = 0.0;
      }
    }
    double worst = std::abs(gauss);
    for (int c = 0; c < m; ++c) {
      double divK = 0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          double covK = dKc[a * m * m + c * m + b];
          for (int e = 0; e < m; ++e)
            covK -= gam_s[(e * m + a) * m + c] * ge.K[e * m + b] +
                    gam_s[(e * m + a) * m + b] * ge.K[c * m + e];
          divK += fr.hinv[a * m + b] * covK;
        }
      worst = std::max(worst, std::abs(GJn[c] - divK + dkc[c]));
    }
    rf.add(pt, worst);
  }
  rf.finish();
  return rf;
}

struct JunctionReport {
  ResidualField h_jump, K_jump, energy_jump, momentum_jump;
  bool pass() const {
    return h_jump.pass() && K_jump.pass() && energy_jump.pass() && momentum_jump.pass();
  }
};

// Israel-Darmois matching across a shared interface: the two surfaces carry
// the same embedding and chart but different ambient metrics
inline JunctionReport junction_check(const Hypersurface& inner, const Hypersurface& outer,
                                     const std::vector<std::vector<double>>& pts, double tol,
                                     std::string mode, double constraint_tol = 0.0) {
  if (inner.sdim() != outer.sdim() || inner.adim() != outer.adim())
    throw ConfigError("junction sides disagree in dimension");
  int d = inner.adim(), m = inner.sdim();
  if (constraint_tol <= 0) constraint_tol = tol;
  JunctionReport rep;
  rep.h_jump = {"junction-h", mode, tol};
  rep.K_jump = {"junction-K", mode, tol};
  rep.energy_jump = {"junction-G-nn", mode, constraint_tol};
  rep.momentum_jump = {"junction-G-tangent-n", mode, constraint_tol};
  for (const auto& pt : pts) {
    std::span<const double> Y(pt);
    auto gi = surf_geom_at<double>(inner, Y);
    auto go = surf_geom_at<double>(outer, Y);
    double dh = 0, dK = 0;
    for (int i = 0; i < m * m; ++i) {
      dh = std::max(dh, std::abs(go.fr.h[i] - gi.fr.h[i]));
      dK = std::max(dK, std::abs(go.K[i] - gi.K[i]));
    }
    auto ci = curvature_at<double>(inner.ambient(), std::span<const double>(gi.fr.x));
    auto co = curvature_at<double>(outer.ambient(), std::span<const double>(go.fr.x));
    double dGnn = 0;
    std::vector<double> dGJn(m, 0.0);
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        double gi_nn = ci.einstein_low[mu * d + nu] * gi.fr.n[mu] * gi.fr.n[nu];
        double go_nn = co.einstein_low[mu * d + nu] * go.fr.n[mu] * go.fr.n[nu];
        dGnn += go_nn - gi_nn;
        for (int c = 0; c < m; ++c)
          dGJn[c] += co.einstein_low[mu * d + nu] * go.fr.J[c * d + mu] * go.fr.n[nu] -
                     ci.einstein_low[mu * d + nu] * gi.fr.J[c * d + mu] * gi.fr.n[nu];
      }
    double dGJ = 0;
    for (int c = 0; c < m; ++c) dGJ = std::max(dGJ, std::abs(dGJn[c]));
    rep.h_jump.add(pt, dh);
    rep.K_jump.add(pt, dK);
    rep.energy_jump.add(pt, std::abs(dGnn));
    rep.momentum_jump.add(pt, dGJ);
  }
  rep.h_jump.finish();
  rep.K_jump.finish();
  rep.energy_jump.finish();
  rep.momentum_jump.finish();
  return rep;
}

inline JunctionReport junction_check(const Hypersurface& surf, const MetricField& g_minus,
                                     const MetricField& g_plus,
                                     const std::vector<std::vector<double>>& pts, double tol,
                                     std::string mode, double constraint_tol = 0.0) {
  return junction_check(surf.with_ambient(g_minus), surf.with_ambient(g_plus), pts, tol,
                        std::move(mode), constraint_tol);
}

// ---- stock embeddings ----

// round sphere of radius r about the origin of a 3d ambient chart
inline Hypersurface sphere_surface(MetricField ambient, double r, int side = 1) {
  Chart sc("sphere", {0.0, 0.0}, {M_PI, 2.0 * M_PI});
  auto surf = Hypersurface::from_embedding(
      sc, std::move(ambient),
      [r](auto Y, auto x) {
        x[0] = r * sin(Y[0]) * cos(Y[1]);
        x[1] = r * sin(Y[0]) * sin(Y[1]);
        x[2] = r * cos(Y[0]);
      },
      side);
  surf.set_closed(1);
  surf.set_pole(0);
  return surf;
}

// constant-time slice of a 4d spacetime over a spatial box
inline Hypersurface time_slice(MetricField ambient, double t0, std::array<double, 3> lo,
                               std::array<double, 3> hi, int side = 1) {
  Chart sc("slice", {lo[0], lo[1], lo[2]}, {hi[0], hi[1], hi[2]});
  return Hypersurface::from_embedding(
      sc, std::move(ambient),
      [t0](auto Y, auto x) {
        using S = std::remove_cvref_t<decltype(x[0])>;
        x[0] = S(t0);
        x[1] = Y[0];
        x[2] = Y[1];
        x[3] = Y[2];
      },
      side);
}

}  // namespace relcont
