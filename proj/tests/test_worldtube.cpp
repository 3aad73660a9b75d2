#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <thread>

#include "relcont/oracle.hpp"
#include "relcont/worldtube.hpp"

using namespace relcont;

namespace {

Chart body_time_chart() { return Chart("D", {-1, -1, -1, -1}, {1, 1, 1, 1}); }
Chart space_chart(double half = 3.0) {
  return Chart("M", {-half, -half, -half, -half}, {half, half, half, half});
}

TensorField lambda_direction(const Chart& dom) {
  std::vector<double> w(dom.dim(), 0.0);
  w[0] = 1.0;
  return TensorField::constant(dom, Shape{1, 0, 0}, w, "W");
}

}  // namespace

TEST_CASE("boost tube velocities reproduce the special-relativity values") {
  Chart D = body_time_chart(), M = space_chart();
  auto g = minkowski_metric(M);
  auto tube = boost_tube(D, M, 0.6);
  auto W = lambda_direction(D);
  validate_tube(tube, g, W);

  auto w = tube_velocity_w(tube, W);
  auto u = normalized_velocity(w, g, 1.0);
  std::vector<double> x{0.5, 0.2, 0.1, -0.3};
  auto uv = u.at(x);
  CHECK(uv[0] == doctest::Approx(1.25).epsilon(1e-10));
  CHECK(uv[1] == doctest::Approx(0.75).epsilon(1e-10));
  CHECK(std::abs(uv[2]) < 1e-12);
  CHECK(std::abs(uv[3]) < 1e-12);

  auto m = metric_at<double>(g, std::span<const double>(x));
  double g_uu = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g_uu += m.g[i * 4 + j] * uv[i] * uv[j];
  CHECK(g_uu == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("time reparametrization changes w but not u") {
  Chart D = body_time_chart(), M = space_chart();
  auto g = minkowski_metric(M);
  auto tube = WorldTube::from_map(
      D, M,
      [](auto X, auto out) {
        out[0] = 2.0 * X[0];
        for (std::size_t i = 1; i < out.size(); ++i) out[i] = X[i];
      },
      "double-speed");
  auto W = lambda_direction(D);
  auto w = tube_velocity_w(tube, W);
  auto u = normalized_velocity(w, g, 1.0);
  std::vector<double> x{0.4, 0.1, 0.0, 0.2};
  auto wv = w.at(x);
  auto uv = u.at(x);
  CHECK(wv[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(uv[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(uv[1]) < 1e-13);
}

TEST_CASE("normalization holds for c != 1") {
  Chart M = space_chart();
  double c = 2.0;
  auto gt = TensorField::exact(
      M, Shape{0, 2, 0},
      [c](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
        out[0] = S(-c * c);
        out[5] = S(1.0);
        out[10] = S(1.0);
        out[15] = S(1.0);
        /* silence unused warning */ (void)x;
      },
      "g_c2");
  MetricField g(gt, MetricSignature::Lorentzian);
  Chart D = body_time_chart();
  auto tube = identity_tube(D, M);
  auto u = normalized_velocity(tube_velocity_w(tube, lambda_direction(D)), g, c);
  std::vector<double> x{0.1, 0.3, -0.2, 0.4};
  auto uv = u.at(x);
  CHECK(uv[0] == doctest::Approx(1.0).epsilon(1e-12));
  auto m = metric_at<double>(g, std::span<const double>(x));
  double g_uu = 0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) g_uu += m.g[i * 4 + j] * uv[i] * uv[j];
  CHECK(g_uu == doctest::Approx(-c * c).epsilon(1e-10));
}

TEST_CASE("weight-1 densities push forward with 1/|det| and bad points raise") {
  Chart D = body_time_chart(), M = space_chart(2.0);
  double s = 1.3;
  auto tube = stretch_tube(D, M, s);
  RandomStream rng(501);
  auto poly = make_trig_poly(Chart("B", {-1, -1, -1}, {1, 1, 1}), rng, 0.5, 3, 1, 2.0);
  auto R = TensorField::exact(
      D, Shape{0, 0, 1}, [poly](auto X, auto out) { out[0] = poly(X.subspan(1)); }, "R");
  auto rho = pushforward_field(tube, R);

  std::vector<double> X{0.3, 0.4, -0.2, 0.6};
  std::vector<double> x{0.3, s * 0.4, -s * 0.2, s * 0.6};
  double expect = R.at(X)[0] / (s * s * s);
  CHECK(rho.at(x)[0] == doctest::Approx(expect).epsilon(1e-12));

  std::vector<double> outside{0.0, 1.9, 0.0, 0.0};
  CHECK_THROWS_WITH_AS(rho.at(outside), doctest::Contains("Newton residual"), InversionError);

  std::vector<double> edge{0.0, s * 1.0, 0.0, 0.0};
  std::vector<double> Xedge{0.0, 1.0, 0.0, 0.0};
  CHECK(rho.at(edge)[0] == doctest::Approx(R.at(Xedge)[0] / (s * s * s)));
}

TEST_CASE("pushforward and pullback invert each other on all ranks and weights") {
  Chart D = body_time_chart(), M = space_chart(1.5);
  RandomStream rng(502);
  auto tube = perturbed_identity_tube(D, M, rng, 0.03);

  std::vector<Shape> shapes{{0, 0, 0}, {0, 0, 1}, {1, 0, 0}, {0, 1, 0},
                            {1, 1, 0}, {0, 2, 0}, {2, 0, 1}};
  std::vector<std::vector<double>> pts;
  for (int t = 0; t < 4; ++t) {
    std::vector<double> x(4);
    for (auto& xi : x) xi = 0.6 * rng.sym();
    pts.push_back(x);
  }
  for (const auto& sh : shapes) {
    auto gamma = random_tensor_field(M, sh, rng, 1.0, "gamma");
    auto round1 = pushforward_field(tube, pullback_field(tube, gamma));
    for (const auto& x : pts) {
      auto a = gamma.at(x);
      auto b = round1.at(x);
      for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - b[i]) < 1e-9);
    }
    auto K = random_tensor_field(D, sh, rng, 1.0, "K");
    auto round2 = pullback_field(tube, pushforward_field(tube, K));
    for (const auto& X : pts) {
      auto a = K.at(X);
      auto b = round2.at(X);
      for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(std::abs(a[i] - b[i]) < 1e-9);
    }
  }
}

TEST_CASE("identity tube transports without change") {
  Chart D = body_time_chart(), M = space_chart(1.0);
  auto tube = identity_tube(D, M);
  RandomStream rng(503);
  auto gamma = random_tensor_field(M, Shape{1, 1, 0}, rng, 1.0, "gamma");
  std::vector<double> x{0.2, -0.4, 0.5, 0.1};
  auto a = gamma.at(x);
  auto b = pullback_field(tube, gamma).at(x);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
}

TEST_CASE("pulled-back metric keeps W timelike") {
  Chart D = body_time_chart(), M = space_chart(1.5);
  RandomStream rng(504);
  auto tube = perturbed_identity_tube(D, M, rng, 0.03);
  auto g = minkowski_metric(M);
  auto Gamma = pullback_field(tube, g.tensor(), "Gamma");
  for (const auto& X : interior_grid(D, 3, 0.05)) {
    auto Gv = Gamma.at(X);
    CHECK(Gv[0] < 0);  // Γ(W,W) with W = ∂_λ
  }
}

TEST_CASE("Lie derivative along w annihilates transported body fields") {
  Chart D = body_time_chart(), M = space_chart(1.5);
  RandomStream rng(505);
  auto tube = perturbed_identity_tube(D, M, rng, 0.03);
  auto W = lambda_direction(D);
  auto w = tube_velocity_w(tube, W);

  Chart B("B", {-1, -1, -1}, {1, 1, 1});
  for (Shape sh : {Shape{1, 1, 0}, Shape{0, 0, 1}, Shape{0, 2, 0}}) {
    std::vector<TrigPoly> comps;
    for (std::size_t i = 0; i < sh.ncomp(4); ++i)
      comps.push_back(make_trig_poly(B, rng, 1.0, 3, 1));
    auto K = TensorField::exact(
        D, sh,
        [comps](auto X, auto out) {
          auto Xs = X.subspan(1);
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = comps[i](Xs);
        },
        "K");
    auto pushed = pushforward_field(tube, K);
    for (int t = 0; t < 3; ++t) {
      std::vector<double> x(4);
      for (auto& xi : x) xi = 0.55 * rng.sym();
      auto r = lie_derivative_at<double>(pushed, w, x);
      for (double ri : r) CHECK(std::abs(ri) < 1e-5);
    }
  }
}

TEST_CASE("projector algebra at a boosted state") {
  Chart M = space_chart();
  auto g = minkowski_metric(M);
  std::vector<double> x{0.0, 0.0, 0.0, 0.0};
  auto m = metric_at<double>(g, std::span<const double>(x));
  std::vector<double> u{1.25, 0.75, 0.0, 0.0};
  auto pr = projection_at<double>(m, u, 1.0);

  double trP = 0;
  for (int i = 0; i < 4; ++i) {
    trP += pr.P_mix[i * 4 + i];
    double Pu = 0, pu = 0;
    for (int j = 0; j < 4; ++j) {
      Pu += pr.P_mix[i * 4 + j] * u[j];
      pu += pr.p_low[i * 4 + j] * u[j];
    }
    CHECK(std::abs(Pu) < 1e-12);
    CHECK(std::abs(pu) < 1e-12);
    for (int j = 0; j < 4; ++j) {
      double PP = 0;
      for (int k = 0; k < 4; ++k) PP += pr.P_mix[i * 4 + k] * pr.P_mix[k * 4 + j];
      CHECK(std::abs(PP - pr.P_mix[i * 4 + j]) < 1e-12);
    }
  }
  CHECK(trP == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("projection via w agrees with projection via u on random states") {
  Chart M = space_chart(1.5);
  RandomStream rng(506);
  auto pert = random_symmetric_field(M, rng, 0.05, "dg");
  auto gt = TensorField::derived(
      M, Shape{0, 2, 0}, {pert},
      [pert](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        pert.eval(x, out);
        out[0] = out[0] - S(1.0);
        out[5] = out[5] + S(1.0);
        out[10] = out[10] + S(1.0);
        out[15] = out[15] + S(1.0);
      },
      "g");
  MetricField g(gt, MetricSignature::Lorentzian);

  for (int trial = 0; trial < 8; ++trial) {
    std::vector<double> x(4);
    for (auto& xi : x) xi = 0.8 * rng.sym();
    auto m = metric_at<double>(g, std::span<const double>(x));
    std::vector<double> w{1.0, 0.3 * rng.sym(), 0.3 * rng.sym(), 0.3 * rng.sym()};
    double g_ww = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) g_ww += m.g[i * 4 + j] * w[i] * w[j];
    REQUIRE(g_ww < 0);
    double alpha = std::sqrt(-g_ww);
    std::vector<double> u(4);
    for (int i = 0; i < 4; ++i) u[i] = w[i] / alpha;

    auto pr = projection_at<double>(m, u, 1.0);
    auto pw = flow_projection_low<double>(m, w);
    for (int i = 0; i < 16; ++i) CHECK(std::abs(pr.p_low[i] - pw[i]) < 1e-10);

    // quotient-inverse identities for p_up
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double pup_p = 0, p_pup_p = 0, pup_p_pup = 0;
        for (int k = 0; k < 4; ++k) pup_p += pr.p_up[i * 4 + k] * pr.p_low[k * 4 + j];
        CHECK(std::abs(pup_p - pr.P_mix[i * 4 + j]) < 1e-10);
        for (int k = 0; k < 4; ++k)
          for (int l = 0; l < 4; ++l) {
            p_pup_p += pr.p_low[i * 4 + k] * pr.p_up[k * 4 + l] * pr.p_low[l * 4 + j];
            pup_p_pup += pr.p_up[i * 4 + k] * pr.p_low[k * 4 + l] * pr.p_up[l * 4 + j];
          }
        CHECK(std::abs(p_pup_p - pr.p_low[i * 4 + j]) < 1e-10);
        CHECK(std::abs(pup_p_pup - pr.p_up[i * 4 + j]) < 1e-10);
      }
  }
}

TEST_CASE("deformation tensors of the static and stretched tubes") {
  Chart D = body_time_chart(), M = space_chart(2.0);
  auto g = minkowski_metric(M);
  auto W = lambda_direction(D);
  auto G = make_body_metric(D, [](auto Xs, auto out) {
    using S = std::remove_cvref_t<decltype(out[0])>;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
    out[0] = S(1.0);
    out[4] = S(1.0);
    out[8] = S(1.0);
    (void)Xs;
  });

  std::vector<double> X{0.2, 0.3, -0.1, 0.4};
  {
    auto tube = identity_tube(D, M);
    auto C = cauchy_green_field(tube, g, W).at(X);
    auto c = strain_field(tube, G).at(tube.map_point(X));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double want = (i == j && i > 0) ? 1.0 : 0.0;
        CHECK(std::abs(C[i * 4 + j] - want) < 1e-13);
        CHECK(std::abs(c[i * 4 + j] - want) < 1e-13);
      }
  }
  {
    double s = 1.1;
    auto tube = stretch_tube(D, M, s);
    auto C = cauchy_green_field(tube, g, W).at(X);
    auto c = strain_field(tube, G).at(tube.map_point(X));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double wantC = (i == j && i > 0) ? s * s : 0.0;
        double wantc = (i == j && i > 0) ? 1.0 / (s * s) : 0.0;
        CHECK(std::abs(C[i * 4 + j] - wantC) < 1e-12);
        CHECK(std::abs(c[i * 4 + j] - wantc) < 1e-12);
      }
  }
}

TEST_CASE("strain degeneracies and coordinate formulas on a randomized tube") {
  Chart D = body_time_chart(), M = space_chart(1.5);
  RandomStream rng(507);
  auto base = perturbed_identity_tube(D, M, rng, 0.02);
  auto tube = WorldTube::from_map(
      D, M,
      [base](auto X, auto out) {
        base.map(X, out);
        out[1] = out[1] + 0.35 * X[2];  // superposed shear
      },
      "sheared-perturbed");
  auto g = minkowski_metric(M);
  auto W = lambda_direction(D);
  validate_tube(tube, g, W);
  RandomStream grng(508);
  auto gpoly = make_trig_poly(Chart("B", {-1, -1, -1}, {1, 1, 1}), grng, 0.1);
  auto G = make_body_metric(D, [gpoly](auto Xs, auto out) {
    using S = std::remove_cvref_t<decltype(out[0])>;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
    S bump = gpoly(Xs);
    out[0] = 1.0 + bump * bump;
    out[4] = S(1.0);
    out[8] = 1.0 - 0.3 * bump;
  });

  auto Cf = cauchy_green_field(tube, g, W);
  auto cf = strain_field(tube, G);
  auto w = tube_velocity_w(tube, W);
  auto u = normalized_velocity(w, g, 1.0);

  for (int t = 0; t < 5; ++t) {
    std::vector<double> X(4);
    for (auto& Xi : X) Xi = 0.7 * rng.sym();
    auto C = Cf.at(X);
    for (int B = 0; B < 4; ++B) CHECK(std::abs(C[0 * 4 + B]) < 1e-8);  // i_∂λ C = 0

    auto x = tube.map_point(X);
    auto cv = cf.at(x);
    auto uv = u.at(x);
    for (int nu = 0; nu < 4; ++nu) {
      double iuc = 0;
      for (int mu = 0; mu < 4; ++mu) iuc += uv[mu] * cv[mu * 4 + nu];
      CHECK(std::abs(iuc) < 1e-8);  // i_u c = 0
    }

    // coordinate route: F^μ_A spatial columns of J, C_AB = F^T 𝗉 F
    auto J = tube.jacobian<double>(std::span<const double>(X));
    auto m = metric_at<double>(g, std::span<const double>(x));
    auto pr = projection_at<double>(m, uv, 1.0);
    for (int A = 1; A < 4; ++A)
      for (int B = 1; B < 4; ++B) {
        double acc = 0;
        for (int mu = 0; mu < 4; ++mu)
          for (int nu = 0; nu < 4; ++nu)
            acc += J[mu * 4 + A] * pr.p_low[mu * 4 + nu] * J[nu * 4 + B];
        CHECK(std::abs(acc - C[A * 4 + B]) < 1e-8);
      }

    // inverse-motion route: 𝖼_{μν} = (J⁻¹)^A_μ G_AB (J⁻¹)^B_ν
    std::vector<double> Jinv(16);
    det_and_invert<double>(4, J.data(), Jinv.data(), "J");
    auto Gv = G.at(X);
    for (int mu = 0; mu < 4; ++mu)
      for (int nu = 0; nu < 4; ++nu) {
        double acc = 0;
        for (int A = 0; A < 4; ++A)
          for (int B = 0; B < 4; ++B) acc += Jinv[A * 4 + mu] * Gv[A * 4 + B] * Jinv[B * 4 + nu];
        CHECK(std::abs(acc - cv[mu * 4 + nu]) < 1e-8);
      }

    // spatial block of C stays positive-definite
    std::vector<double> blk(9);
    for (int A = 1; A < 4; ++A)
      for (int B = 1; B < 4; ++B) blk[(A - 1) * 3 + (B - 1)] = C[A * 4 + B];
    std::vector<double> evals, V;
    jacobi_eigen(3, blk, evals, V);
    for (double ev : evals) CHECK(ev > 1e-6);
  }
}

TEST_CASE("transport derivatives agree with finite differences of the black box") {
  Chart D = body_time_chart(), M = space_chart(1.5);
  RandomStream rng(509);
  auto tube = perturbed_identity_tube(D, M, rng, 0.03);
  auto K = random_tensor_field(D, Shape{1, 1, 0}, rng, 1.0, "K");
  auto pushed = pushforward_field(tube, K);
  auto boxed = TensorField::as_finite_diff(pushed);

  std::vector<double> x{0.25, -0.3, 0.4, 0.1};
  for (int axis = 0; axis < 4; ++axis) {
    auto da = pushed.partial(x, axis);
    auto db = boxed.partial(x, axis);
    for (std::size_t i = 0; i < da.size(); ++i) CHECK(std::abs(da[i] - db[i]) < 1e-6);
  }
  auto sa = pushed.partial2(x, 1, 2);
  auto sb = boxed.partial2(x, 1, 2);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(std::abs(sa[i] - sb[i]) < 1e-5);
}

TEST_CASE("inversion cache is safe under concurrent evaluation") {
  Chart D = body_time_chart(), M = space_chart(1.5);
  RandomStream rng(510);
  auto tube = perturbed_identity_tube(D, M, rng, 0.03);
  auto K = random_tensor_field(D, Shape{0, 2, 0}, rng, 1.0, "K");
  auto pushed = pushforward_field(tube, K);

  std::vector<std::vector<double>> pts;
  for (int t = 0; t < 40; ++t) {
    std::vector<double> x(4);
    for (auto& xi : x) xi = 0.6 * rng.sym();
    pts.push_back(x);
  }
  std::vector<std::vector<double>> serial;
  for (const auto& x : pts) serial.push_back(pushed.at(x));

  std::vector<std::vector<std::vector<double>>> results(4);
  std::vector<std::thread> pool;
  for (int tid = 0; tid < 4; ++tid)
    pool.emplace_back([&, tid] {
      auto& mine = results[tid];
      for (int rep = 0; rep < 5; ++rep)
        for (const auto& x : pts) mine.push_back(pushed.at(x));
    });
  for (auto& th : pool) th.join();
  for (const auto& mine : results)
    for (std::size_t k = 0; k < mine.size(); ++k) {
      const auto& want = serial[k % pts.size()];
      for (std::size_t i = 0; i < want.size(); ++i) CHECK(mine[k][i] == want[i]);
    }
}
