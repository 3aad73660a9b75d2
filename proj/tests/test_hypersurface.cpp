#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "relcont/hypersurface.hpp"
#include "relcont/random_fields.hpp"

using namespace relcont;

namespace {

Chart amb3() { return Chart("amb3", {-1.6, -1.6, -1.6}, {1.6, 1.6, 1.6}); }

TensorField sum_fields(const TensorField& a, const TensorField& b, double scale,
                       std::string name) {
  return TensorField::exact(
      a.chart(), a.shape(),
      [a, b, scale](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> u(out.size()), v(out.size());
        a.eval(x, std::span<S>(u));
        b.eval(x, std::span<S>(v));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = u[i] + scale * v[i];
      },
      std::move(name));
}

MetricField perturbed_euclidean(const Chart& ch, std::uint64_t seed, double amp) {
  RandomStream rng(seed);
  auto pert = random_symmetric_field(ch, rng, amp, "epert");
  return MetricField(sum_fields(euclidean_metric(ch).tensor(), pert, 1.0, "e+pert"),
                     MetricSignature::Riemannian);
}

MetricField perturbed_minkowski(const Chart& ch, std::uint64_t seed, double amp) {
  RandomStream rng(seed);
  auto pert = random_symmetric_field(ch, rng, amp, "mpert");
  return MetricField(sum_fields(minkowski_metric(ch).tensor(), pert, 1.0, "eta+pert"),
                     MetricSignature::Lorentzian);
}

// 3-surface given as a graph t = offset + trig(Y) over the spatial box
Hypersurface graph_slice(MetricField ambient, std::uint64_t seed, double amp, double offset,
                         int side = -1) {
  Chart sch("gslice", {-0.45, -0.45, -0.45}, {0.45, 0.45, 0.45});
  RandomStream rng(seed);
  auto tp = make_trig_poly(sch, rng, amp);
  return Hypersurface::from_embedding(
      sch, std::move(ambient),
      [tp, offset](auto Y, auto x) {
        x[0] = offset + tp(Y);
        x[1] = Y[0];
        x[2] = Y[1];
        x[3] = Y[2];
      },
      side);
}

// 2-surface given as a graph z = trig(Y) in a 3d ambient
Hypersurface graph_sheet(MetricField ambient, std::uint64_t seed, double amp) {
  Chart sch("gsheet", {-0.45, -0.45}, {0.45, 0.45});
  RandomStream rng(seed);
  auto tp = make_trig_poly(sch, rng, amp);
  return Hypersurface::from_embedding(sch, std::move(ambient), [tp](auto Y, auto x) {
    x[0] = Y[0];
    x[1] = Y[1];
    x[2] = tp(Y);
  });
}

double ghy_like_integral(const Hypersurface& s) {
  return integrate_surface(s, [&](std::span<const double> Y) {
    auto g = surf_geom_at<double>(s, Y);
    return g.k * primal(g.fr.mu_h);
  });
}

// difference quotient of ∫ k μ(h) under 𝗀 → 𝗀 + ε δ𝗀, frozen surface
double fd_metric_variation(const Hypersurface& surf, const TensorField& dg, double step = 1e-5) {
  auto gt = surf.ambient().tensor();
  auto sig = surf.ambient().signature();
  auto F = [&](double e) {
    MetricField gm(sum_fields(gt, dg, e, "gpert"), sig, false);
    return ghy_like_integral(surf.with_ambient(gm));
  };
  return fd_variation(F, step);
}

// difference quotient of ∫ k μ(h) under σ → σ + ε(f n + J·X)
double fd_surface_variation(const Hypersurface& surf, const TensorField& f, const TensorField& X,
                            double step = 1e-4) {
  auto F = [&](double e) { return ghy_like_integral(displaced_surface(surf, f, X, e)); };
  return fd_variation(F, step);
}

struct GeomSnap {
  std::vector<double> J, n, h, K;
  double mu = 0, k = 0;
};

GeomSnap snap(const Hypersurface& s, std::span<const double> Y) {
  auto g = surf_geom_at<double>(s, Y);
  return {g.fr.J, g.fr.n, g.fr.h, g.K, primal(g.fr.mu_h), g.k};
}

// Richardson-extrapolated difference quotients of the frame data under the
// displacement family; J and n come back as plain coordinate derivatives
GeomSnap fd_snap(const Hypersurface& s, const TensorField& f, const TensorField& X,
                 std::span<const double> Y, double step = 1e-4) {
  auto at = [&](double e) { return snap(displaced_surface(s, f, X, e), Y); };
  auto sp = at(step), sm = at(-step), sp2 = at(step / 2), sm2 = at(-step / 2);
  auto rich = [&](double a, double b, double a2, double b2) {
    double d1 = (a - b) / (2 * step), d2 = (a2 - b2) / step;
    return (4 * d2 - d1) / 3;
  };
  GeomSnap o;
  auto vec = [&](auto get) {
    std::vector<double> r(get(sp).size());
    for (std::size_t i = 0; i < r.size(); ++i)
      r[i] = rich(get(sp)[i], get(sm)[i], get(sp2)[i], get(sm2)[i]);
    return r;
  };
  o.J = vec([](const GeomSnap& g) -> const std::vector<double>& { return g.J; });
  o.n = vec([](const GeomSnap& g) -> const std::vector<double>& { return g.n; });
  o.h = vec([](const GeomSnap& g) -> const std::vector<double>& { return g.h; });
  o.K = vec([](const GeomSnap& g) -> const std::vector<double>& { return g.K; });
  o.mu = rich(sp.mu, sm.mu, sp2.mu, sm2.mu);
  o.k = rich(sp.k, sm.k, sp2.k, sm2.k);
  return o;
}

double rel_gap(const std::vector<double>& got, const std::vector<double>& want) {
  double e = 0, s = 0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    e = std::max(e, std::abs(got[i] - want[i]));
    s = std::max(s, std::abs(want[i]));
  }
  return e / (s + 1e-9);
}

double rel_gap(double got, double want) {
  return std::abs(got - want) / (std::abs(want) + 1e-9);
}

// ambient-restricted scalar on the surface chart, smooth across poles
TensorField ambient_scalar(const Hypersurface& s, std::string name) {
  return TensorField::exact(
      s.chart(), Shape{0, 0, 0},
      [s](auto Y, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> x(s.adim());
        s.embed<S>(Y, x);
        out[0] = 0.2 * sin(x[0] + 0.4) * cos(x[1]) + 0.15 * x[2];
      },
      std::move(name));
}

// tangential projection of a fixed ambient vector field, smooth across poles
TensorField projected_tangent(const Hypersurface& s, std::string name) {
  return TensorField::exact(
      s.chart(), Shape{1, 0, 0},
      [s](auto Y, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto fr = surf_frame_at<S>(s, Y);
        int d = fr.d, m = fr.m;
        std::vector<S> V(d);
        V[0] = 0.3 + 0.2 * sin(fr.x[1]);
        V[1] = 0.25 * cos(fr.x[0] + 0.7);
        V[2] = 0.2 + 0.15 * fr.x[0];
        std::vector<S> pull(m, S(0.0));
        for (int a = 0; a < m; ++a)
          for (int mu = 0; mu < d; ++mu)
            for (int nu = 0; nu < d; ++nu)
              pull[a] = pull[a] + fr.J[a * d + mu] * fr.amb.g[mu * d + nu] * V[nu];
        for (int a = 0; a < m; ++a) {
          out[a] = S(0.0);
          for (int b = 0; b < m; ++b) out[a] = out[a] + fr.hinv[a * m + b] * pull[b];
        }
      },
      std::move(name));
}

}  // namespace

TEST_CASE("round sphere frame matches closed forms") {
  double r = 0.9;
  auto sp = sphere_surface(euclidean_metric(amb3()), r);
  for (auto [th, ph] : std::vector<std::pair<double, double>>{{0.7, 1.3}, {1.9, 4.2}, {2.4, 0.4}}) {
    std::vector<double> Y = {th, ph};
    auto fr = surf_frame_at<double>(sp, Y);
    CHECK(fr.h[0] == doctest::Approx(r * r).epsilon(1e-12));
    CHECK(std::abs(fr.h[1]) < 1e-12);
    CHECK(fr.h[3] == doctest::Approx(r * r * std::sin(th) * std::sin(th)).epsilon(1e-12));
    CHECK(primal(fr.mu_h) == doctest::Approx(r * r * std::sin(th)).epsilon(1e-12));
    CHECK(fr.eps == 1.0);
    for (int mu = 0; mu < 3; ++mu)
      CHECK(fr.n[mu] == doctest::Approx(fr.x[mu] / r).epsilon(1e-10));
    double nn = 0;
    for (int mu = 0; mu < 3; ++mu) nn += fr.n_low[mu] * fr.n[mu];
    CHECK(nn == doctest::Approx(1.0).epsilon(1e-12));
    for (int a = 0; a < 2; ++a) {
      double nJ = 0;
      for (int mu = 0; mu < 3; ++mu) nJ += fr.n_low[mu] * fr.J[a * 3 + mu];
      CHECK(std::abs(nJ) < 1e-12);
    }

    auto ge = surf_geom_at<double>(sp, Y);
    for (int i = 0; i < 4; ++i) {
      CHECK(std::abs(ge.K[i] - ge.K_alt[i]) < 1e-10);
      CHECK(ge.K[i] == doctest::Approx(fr.h[i] / r).epsilon(1e-10));
    }
    CHECK(ge.k == doctest::Approx(2.0 / r).epsilon(1e-10));
    CHECK(ge.trK2 == doctest::Approx(2.0 / (r * r)).epsilon(1e-10));
  }
}

TEST_CASE("flat and FRW time slices") {
  Chart mch("mink", {-1.0, -1.0, -1.0, -1.0}, {1.3, 1.0, 1.0, 1.0});
  auto plane = time_slice(minkowski_metric(mch), 0.5, {-0.6, -0.6, -0.6}, {0.6, 0.6, 0.6}, -1);
  std::vector<double> Y0 = {0.1, -0.2, 0.3};
  auto g0 = surf_geom_at<double>(plane, Y0);
  CHECK(g0.fr.eps == -1.0);
  CHECK(g0.fr.n[0] == doctest::Approx(1.0).epsilon(1e-13));
  for (int i = 0; i < 9; ++i) CHECK(std::abs(g0.K[i]) < 1e-13);
  CHECK(std::abs(g0.k) < 1e-13);

  double t0 = 1.0, nexp = 2.0 / 3.0, t = 1.2;
  Chart fch("frw", {0.8, -0.5, -0.5, -0.5}, {1.3, 0.5, 0.5, 0.5});
  auto frw = frw_metric(t0, nexp, fch, "frw-dust");
  auto slice = time_slice(frw, t, {-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4}, -1);
  double a = std::pow(t / t0, nexp);
  double adot = nexp * std::pow(t / t0, nexp - 1.0) / t0;
  for (const auto& Y : interior_grid(slice.chart(), 2, 0.2)) {
    auto ge = surf_geom_at<double>(slice, Y);
    CHECK(ge.fr.eps == -1.0);
    CHECK(ge.fr.n[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double want = i == j ? a * adot : 0.0;
        CHECK(std::abs(ge.K[i * 3 + j] - want) < 1e-9);
        CHECK(std::abs(ge.K[i * 3 + j] - ge.K_alt[i * 3 + j]) < 1e-10);
      }
    CHECK(ge.k == doctest::Approx(3.0 * adot / a).epsilon(1e-10));
    CHECK(ge.trK2 == doctest::Approx(3.0 * adot * adot / (a * a)).epsilon(1e-10));
  }
}

TEST_CASE("both extrinsic curvature definitions agree on generic surfaces") {
  Chart mch("mink4", {-1.0, -0.8, -0.8, -0.8}, {1.0, 0.8, 0.8, 0.8});
  auto slice = graph_slice(perturbed_minkowski(mch, 901, 0.04), 902, 0.12, 0.1);
  auto sheet = graph_sheet(perturbed_euclidean(amb3(), 903, 0.04), 904, 0.2);

  auto check_surface = [](const Hypersurface& s) {
    int m = s.sdim(), d = s.adim();
    for (const auto& Y : interior_grid(s.chart(), 2, 0.1)) {
      auto ge = surf_geom_at<double>(s, Y);
      double nn = 0;
      for (int mu = 0; mu < d; ++mu) nn += ge.fr.n_low[mu] * ge.fr.n[mu];
      CHECK(std::abs(nn - ge.fr.eps) < 1e-10);
      for (int a = 0; a < m; ++a) {
        double nJ = 0;
        for (int mu = 0; mu < d; ++mu) nJ += ge.fr.n_low[mu] * ge.fr.J[a * d + mu];
        CHECK(std::abs(nJ) < 1e-10);
      }
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          CHECK(std::abs(ge.K[a * m + b] - ge.K_alt[a * m + b]) < 1e-8);
          CHECK(std::abs(ge.K_alt[a * m + b] - ge.K_alt[b * m + a]) < 1e-8);
        }
    }
  };
  check_surface(slice);
  check_surface(sheet);
}

TEST_CASE("ghy integral on the sphere: closed form, coupling, node doubling") {
  double r = 0.9;
  auto sp = sphere_surface(euclidean_metric(amb3()), r);
  double want = 8.0 * M_PI * r;

  sp.set_nodes(32);
  CHECK(std::abs(ghy_integral(sp) - want) / want < 1e-6);
  double chi = 8.0 * M_PI;
  CHECK(ghy_integral(sp, chi) == doctest::Approx(r).epsilon(1e-6));

  auto sp4 = sp;
  sp4.set_nodes(4);
  auto sp8 = sp;
  sp8.set_nodes(8);
  double e4 = std::abs(ghy_integral(sp4) - want);
  double e8 = std::abs(ghy_integral(sp8) - want);
  CHECK(e4 > 10.0 * e8);

  Chart mch("mink", {-1.0, -1.0, -1.0, -1.0}, {1.0, 1.0, 1.0, 1.0});
  auto plane = time_slice(minkowski_metric(mch), 0.2, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5});
  CHECK(std::abs(ghy_integral(plane)) < 1e-12);
}

TEST_CASE("metric variation of the GHY integrand matches the difference quotient") {
  Chart ach = amb3();
  double r = 0.9;

  SUBCASE("closed sphere, generic perturbation") {
    auto g = perturbed_euclidean(ach, 911, 0.04);
    auto sp = sphere_surface(g, r);
    sp.set_nodes(20);
    RandomStream rng(912);
    auto dg = random_symmetric_field(ach, rng, 0.3, "dg");
    double an = ghy_metric_variation(sp, dg);
    double fd = fd_metric_variation(sp, dg);
    CHECK(rel_gap(an, fd) < 1e-4);
    CHECK(std::abs(an) > 1e-3);
  }

  SUBCASE("closed sphere, compact conformal perturbation") {
    auto g = MetricField(euclidean_metric(ach).tensor(), MetricSignature::Riemannian);
    auto sp = sphere_surface(g, r);
    sp.set_nodes(24);
    auto gt = g.tensor();
    auto dg = TensorField::exact(
        ach, Shape{0, 2, 0},
        [gt](auto x, auto out) {
          using S = std::remove_cvref_t<decltype(out[0])>;
          std::vector<S> gv(out.size());
          gt.eval(x, std::span<S>(gv));
          S s2 = ((x[0] - 0.5) * (x[0] - 0.5) + (x[1] - 0.2) * (x[1] - 0.2) +
                  (x[2] - 0.6) * (x[2] - 0.6)) /
                 1.21;
          S phi = primal(s2) < 1.0 ? exp(1.0 - 1.0 / (1.0 - s2)) : S(0.0);
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * phi * gv[i];
        },
        "conformal-dg");
    double an = ghy_metric_variation(sp, dg);
    double fd = fd_metric_variation(sp, dg);
    CHECK(rel_gap(an, fd) < 1e-4);
    CHECK(std::abs(an) > 1e-3);
  }

  SUBCASE("sphere patch with boundary-supported perturbation") {
    auto g = perturbed_euclidean(ach, 913, 0.04);
    Chart pch("patch", {0.5, 0.8}, {1.3, 2.2});
    double rr = r;
    auto patch = Hypersurface::from_embedding(pch, g, [rr](auto Y, auto x) {
      x[0] = rr * sin(Y[0]) * cos(Y[1]);
      x[1] = rr * sin(Y[0]) * sin(Y[1]);
      x[2] = rr * cos(Y[0]);
    });
    patch.set_nodes(20);
    CHECK(surface_faces(patch).size() == 4);
    RandomStream rng(914);
    auto dg = random_symmetric_field(ach, rng, 0.3, "dg-bdry");
    double an = ghy_metric_variation(patch, dg);
    double fd = fd_metric_variation(patch, dg);
    CHECK(rel_gap(an, fd) < 1e-4);
    CHECK(std::abs(an) > 1e-3);
  }

  SUBCASE("box slice in a curved spacetime") {
    Chart mch("mink4", {-1.0, -0.9, -0.9, -0.9}, {1.0, 0.9, 0.9, 0.9});
    auto g = perturbed_minkowski(mch, 915, 0.04);
    auto slice = time_slice(g, 0.15, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}, -1);
    slice.set_nodes(12);
    RandomStream rng(916);
    auto dg = random_symmetric_field(mch, rng, 0.25, "dg4");
    double an = ghy_metric_variation(slice, dg);
    double fd = fd_metric_variation(slice, dg);
    CHECK(rel_gap(an, fd) < 1e-4);
    CHECK(std::abs(an) > 1e-3);
  }

  SUBCASE("perturbation supported away from the surface does nothing") {
    Chart mch("mink4", {-1.0, -0.9, -0.9, -0.9}, {1.0, 0.9, 0.9, 0.9});
    auto g = minkowski_metric(mch);
    auto slice = time_slice(g, 0.6, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}, -1);
    auto dg = TensorField::exact(
        mch, Shape{0, 2, 0},
        [](auto x, auto out) {
          using S = std::remove_cvref_t<decltype(out[0])>;
          S s2 = (x[0] - 0.1) * (x[0] - 0.1) / 0.04;
          S bump = primal(s2) < 1.0 ? exp(1.0 - 1.0 / (1.0 - s2)) : S(0.0);
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
          out[0] = bump;
          out[5] = 0.7 * bump;
        },
        "dg-far");
    CHECK(std::abs(ghy_metric_variation(slice, dg)) < 1e-14);
    CHECK(std::abs(fd_metric_variation(slice, dg)) < 1e-12);
  }
}

TEST_CASE("surface variation of the GHY integrand") {
  double r = 0.9;
  auto sp = sphere_surface(euclidean_metric(amb3()), r);
  sp.set_nodes(24);
  auto one = TensorField::constant(sp.chart(), Shape{0, 0, 0}, {1.0}, "one");
  auto zeroX = TensorField::constant(sp.chart(), Shape{1, 0, 0}, {0.0, 0.0}, "zeroX");

  SUBCASE("unit normal displacement reproduces the radius derivative") {
    double an = ghy_surface_variation(sp, one, zeroX);
    CHECK(std::abs(an - 8.0 * M_PI) < 1e-6 * 8.0 * M_PI);
    double fd = fd_surface_variation(sp, one, zeroX);
    CHECK(std::abs(fd - 8.0 * M_PI) < 1e-6 * 8.0 * M_PI);
  }

  SUBCASE("tangential reparametrization of a closed surface is silent") {
    auto zeroF = TensorField::constant(sp.chart(), Shape{0, 0, 0}, {0.0}, "zeroF");
    auto X = projected_tangent(sp, "Xtan");
    CHECK(ghy_surface_variation(sp, zeroF, X) == 0.0);
    CHECK(std::abs(fd_surface_variation(sp, zeroF, X)) < 1e-7);
  }

  SUBCASE("generic variation on a closed sphere in a curved ambient") {
    auto g = perturbed_euclidean(amb3(), 921, 0.04);
    auto sp2 = sphere_surface(g, r);
    sp2.set_nodes(24);
    auto f = ambient_scalar(sp2, "fvar");
    auto X = projected_tangent(sp2, "Xvar");
    double an = ghy_surface_variation(sp2, f, X);
    double fd = fd_surface_variation(sp2, f, X);
    CHECK(rel_gap(an, fd) < 1e-4);
    CHECK(std::abs(an) > 1e-3);
  }

  SUBCASE("patch with boundary flux terms") {
    auto g = perturbed_euclidean(amb3(), 922, 0.04);
    Chart pch("patch", {0.5, 0.8}, {1.3, 2.2});
    double rr = r;
    auto patch = Hypersurface::from_embedding(pch, g, [rr](auto Y, auto x) {
      x[0] = rr * sin(Y[0]) * cos(Y[1]);
      x[1] = rr * sin(Y[0]) * sin(Y[1]);
      x[2] = rr * cos(Y[0]);
    });
    patch.set_nodes(20);
    auto f = ambient_scalar(patch, "fpatch");
    auto X = projected_tangent(patch, "Xpatch");
    double an = ghy_surface_variation(patch, f, X);
    double fd = fd_surface_variation(patch, f, X);
    CHECK(rel_gap(an, fd) < 1e-4);
    CHECK(std::abs(an) > 1e-3);
  }
}

TEST_CASE("supporting variation formulas match displacement oracles") {
  SUBCASE("hyperplane with constant normal push stays flat") {
    Chart mch("mink", {-1.0, -1.0, -1.0, -1.0}, {1.0, 1.0, 1.0, 1.0});
    auto plane = time_slice(minkowski_metric(mch), 0.2, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}, -1);
    auto f = TensorField::constant(plane.chart(), Shape{0, 0, 0}, {0.3}, "f");
    auto X = TensorField::constant(plane.chart(), Shape{1, 0, 0}, {0.0, 0.0, 0.0}, "X");
    std::vector<double> Y = {0.1, -0.2, 0.25};
    auto v = surface_variation_at(plane, f, X, Y);
    for (double c : v.dK) CHECK(std::abs(c) < 1e-12);
    CHECK(std::abs(v.dk) < 1e-12);
    for (double c : v.dn) CHECK(std::abs(c) < 1e-12);
    for (double c : v.dh) CHECK(std::abs(c) < 1e-12);
    CHECK(std::abs(v.dmu) < 1e-12);
  }

  SUBCASE("sphere closed forms under unit normal displacement") {
    double r = 0.9;
    auto sp = sphere_surface(euclidean_metric(amb3()), r);
    auto f = TensorField::constant(sp.chart(), Shape{0, 0, 0}, {1.0}, "one");
    auto X = TensorField::constant(sp.chart(), Shape{1, 0, 0}, {0.0, 0.0}, "zeroX");
    std::vector<double> Y = {1.1, 2.3};
    auto fr = surf_frame_at<double>(sp, Y);
    auto v = surface_variation_at(sp, f, X, Y);
    CHECK(v.dk == doctest::Approx(-2.0 / (r * r)).epsilon(1e-9));
    for (int i = 0; i < 4; ++i) {
      CHECK(v.dK[i] == doctest::Approx(fr.h[i] / (r * r)).epsilon(1e-9));
      CHECK(v.dh[i] == doctest::Approx(2.0 * fr.h[i] / r).epsilon(1e-9));
    }
    CHECK(v.dmu == doctest::Approx(2.0 / r * primal(fr.mu_h)).epsilon(1e-9));
    for (double c : v.dn) CHECK(std::abs(c) < 1e-10);
  }

  SUBCASE("randomized surfaces and variations against difference quotients") {
    struct Pair {
      Hypersurface surf;
      std::uint64_t fseed;
    };
    std::vector<Pair> pairs;
    pairs.push_back({graph_sheet(perturbed_euclidean(amb3(), 931, 0.05), 932, 0.2), 933});
    pairs.push_back({graph_sheet(perturbed_euclidean(amb3(), 934, 0.03), 935, 0.15), 936});
    Chart mch("mink4", {-1.0, -0.9, -0.9, -0.9}, {1.0, 0.9, 0.9, 0.9});
    pairs.push_back({graph_slice(perturbed_minkowski(mch, 937, 0.04), 938, 0.1, 0.1), 939});
    pairs.push_back({graph_slice(perturbed_minkowski(mch, 940, 0.03), 941, 0.12, -0.1), 942});

    for (const auto& pr : pairs) {
      const auto& s = pr.surf;
      int m = s.sdim(), d = s.adim();
      RandomStream rng(pr.fseed);
      auto f = random_tensor_field(s.chart(), Shape{0, 0, 0}, rng, 0.12, "f");
      auto X = random_vector_field(s.chart(), rng, 0.12, "X");
      for (const auto& Y : interior_grid(s.chart(), 2, 0.17)) {
        auto an = surface_variation_at(s, f, X, Y);
        auto fd = fd_snap(s, f, X, Y);
        // the Lemma's δ(Tσ) and δn are covariant variations: add Γ(δσ, ·) to
        // the plain difference quotient before comparing
        auto fr = surf_frame_at<double>(s, std::span<const double>(Y));
        auto gamma = christoffel_at<double>(s.ambient(), std::span<const double>(fr.x)).gamma;
        std::vector<double> fv(1), Xv(m);
        f.eval(std::span<const double>(Y), std::span<double>(fv));
        X.eval(std::span<const double>(Y), std::span<double>(Xv));
        std::vector<double> dsig(d, 0.0);
        for (int mu = 0; mu < d; ++mu) {
          dsig[mu] = fv[0] * fr.n[mu];
          for (int a = 0; a < m; ++a) dsig[mu] += fr.J[a * d + mu] * Xv[a];
        }
        for (int a = 0; a < m; ++a)
          for (int mu = 0; mu < d; ++mu)
            for (int rho = 0; rho < d; ++rho)
              for (int si = 0; si < d; ++si)
                fd.J[a * d + mu] +=
                    gamma[(mu * d + rho) * d + si] * dsig[rho] * fr.J[a * d + si];
        for (int mu = 0; mu < d; ++mu)
          for (int rho = 0; rho < d; ++rho)
            for (int si = 0; si < d; ++si)
              fd.n[mu] += gamma[(mu * d + rho) * d + si] * dsig[rho] * fr.n[si];

        CHECK(rel_gap(an.dJ, fd.J) < 1e-4);
        CHECK(rel_gap(an.dn, fd.n) < 1e-4);
        CHECK(rel_gap(an.dh, fd.h) < 1e-4);
        CHECK(rel_gap(an.dK, fd.K) < 1e-4);
        CHECK(rel_gap(an.dmu, fd.mu) < 1e-4);
        CHECK(rel_gap(an.dk, fd.k) < 1e-4);
      }
    }
  }

  SUBCASE("pointwise variations assemble into the integral variation") {
    auto g = perturbed_euclidean(amb3(), 951, 0.04);
    auto sp = sphere_surface(g, 0.9);
    sp.set_nodes(24);
    auto f = ambient_scalar(sp, "fasm");
    auto X = projected_tangent(sp, "Xasm");
    auto q = surface_quadrature(sp);
    double assembled = 0;
    for (std::size_t i = 0; i < q.Y.size(); ++i) {
      std::span<const double> Y(q.Y[i]);
      auto ge = surf_geom_at<double>(sp, Y);
      auto v = surface_variation_at(sp, f, X, Y);
      assembled += q.w[i] * (v.dk * primal(ge.fr.mu_h) + ge.k * v.dmu);
    }
    double direct = ghy_surface_variation(sp, f, X);
    CHECK(rel_gap(assembled, direct) < 1e-6);
  }
}

TEST_CASE("gauss and codazzi contractions vanish") {
  SUBCASE("hyperplane in flat spacetime") {
    Chart mch("mink", {-1.0, -1.0, -1.0, -1.0}, {1.0, 1.0, 1.0, 1.0});
    auto plane = time_slice(minkowski_metric(mch), 0.2, {-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}, -1);
    auto rf = gauss_codazzi_residual(plane, interior_grid(plane.chart(), 2, 0.2), 1e-10, "exact");
    CHECK(rf.pass());
  }

  SUBCASE("sphere in euclidean space") {
    auto sp = sphere_surface(euclidean_metric(amb3()), 0.9);
    std::vector<std::vector<double>> pts = {{0.8, 1.1}, {1.7, 3.9}, {2.3, 0.6}};
    auto rf = gauss_codazzi_residual(sp, pts, 1e-7, "exact");
    CHECK(rf.pass());
  }

  SUBCASE("FRW slice") {
    Chart fch("frw", {0.8, -0.5, -0.5, -0.5}, {1.3, 0.5, 0.5, 0.5});
    auto frw = frw_metric(1.0, 2.0 / 3.0, fch, "frw-dust");
    auto slice = time_slice(frw, 1.15, {-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4}, -1);
    auto rf = gauss_codazzi_residual(slice, interior_grid(slice.chart(), 2, 0.2), 1e-5, "exact");
    CHECK(rf.pass());
    CHECK(rf.max_norm < 1e-7);
  }

  SUBCASE("generic graph slice in a curved spacetime") {
    Chart mch("mink4", {-1.0, -0.9, -0.9, -0.9}, {1.0, 0.9, 0.9, 0.9});
    auto slice = graph_slice(perturbed_minkowski(mch, 961, 0.04), 962, 0.1, 0.1);
    auto rf = gauss_codazzi_residual(slice, interior_grid(slice.chart(), 2, 0.15), 1e-7, "exact");
    CHECK(rf.pass());
  }
}

TEST_CASE("junction bookkeeping across a shared interface") {
  Chart fch("frw", {0.8, -0.5, -0.5, -0.5}, {1.3, 0.5, 0.5, 0.5});
  auto g_in = frw_metric(1.0, 2.0 / 3.0, fch, "frw-in");
  auto slice = time_slice(g_in, 1.2, {-0.4, -0.4, -0.4}, {0.4, 0.4, 0.4}, -1);
  auto pts = interior_grid(slice.chart(), 2, 0.2);

  auto same = junction_check(slice, slice.with_ambient(g_in), pts, 1e-10, "exact");
  CHECK(same.pass());
  CHECK(same.h_jump.max_norm < 1e-13);
  CHECK(same.K_jump.max_norm < 1e-13);

  auto g_out = frw_metric(1.0, 0.6, fch, "frw-out");
  auto mismatch = junction_check(slice, g_in, g_out, pts, 1e-5, "exact");
  CHECK_FALSE(mismatch.pass());
  CHECK(mismatch.h_jump.max_norm > 1e-2);
  CHECK(mismatch.K_jump.max_norm > 1e-2);
}
