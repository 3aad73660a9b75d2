#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "relcont/lagrangians.hpp"
#include "relcont/oracle.hpp"

using namespace relcont;

namespace {

struct RandomState {
  MetricData<double> m;
  std::vector<double> gv;
  std::vector<double> w;
  double rho_bar, sigma_bar;
  std::vector<double> c_low;  // empty for fluids
};

RandomState draw_state(RandomStream& rng, bool with_strain, double c_light = 1.0) {
  RandomState st;
  int d = 4;
  st.gv = detail::random_metric_components(d, rng, 0.15);
  st.m = metric_data_from_components<double>(d, st.gv, "test state");
  st.w.assign(d, 0.0);
  st.w[0] = 1.0;
  for (int i = 1; i < d; ++i) st.w[i] = 0.25 * rng.sym();
  st.rho_bar = 0.5 + 1.5 * rng.uniform();
  st.sigma_bar = st.rho_bar * 0.5 * rng.uniform();
  if (with_strain) {
    double g_ww = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g_ww += st.gv[i * d + j] * st.w[i] * st.w[j];
    double alpha = std::sqrt(-g_ww);
    std::vector<double> u(d);
    for (int i = 0; i < d; ++i) u[i] = c_light * st.w[i] / alpha;
    auto pr = projection_at<double>(st.m, u, c_light);
    st.c_low = detail::on_shell_strain(4, pr, rng, 0.25);
  }
  return st;
}

void check_close(double got, double want, double tol) {
  CHECK(std::abs(got - want) < tol * std::max(1.0, std::abs(want)));
}

}  // namespace

TEST_CASE("equation-of-state algebra and dual consistency") {
  auto lin = eos_linear(0.2);
  CHECK(lin.pressure<double>(2.0, 0.0) == doctest::Approx(0.8).epsilon(1e-14));

  RandomStream rng(601);
  for (const auto& eos :
       {eos_dust(), eos_linear(0.7), eos_gamma_law(0.8, 1.4, 0.3), eos_poly_eta(0.5, 1.2)}) {
    for (int t = 0; t < 6; ++t) {
      double rho = 0.3 + 2.0 * rng.uniform();
      double eta = rng.uniform();
      D1 er = eos.e(D1{rho, 1.0}, D1{eta, 0.0});
      D1 eh = eos.e(D1{rho, 0.0}, D1{eta, 1.0});
      check_close(eos.de_drho(rho, eta), er.b, 1e-12);
      check_close(eos.de_deta(rho, eta), eh.b, 1e-12);
    }
  }
}

TEST_CASE("dust in the rest frame") {
  Chart M("M", {-1, -1, -1, -1}, {1, 1, 1, 1});
  auto g = minkowski_metric(M);
  std::vector<double> x{0, 0, 0, 0};
  auto m = metric_at<double>(g, std::span<const double>(x));
  std::vector<double> w{1, 0, 0, 0};
  auto L = fluid_lagrangian(eos_dust());
  auto r = L.at<double>(m, w, 1.0, 0.0, {});
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r.d_rho == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(r.d_w[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(std::abs(r.d_w[1]) < 1e-15);
  CHECK(r.d_g[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(r.d_g[5]) < 1e-15);
  CHECK(std::abs(r.pressure) < 1e-15);
}

TEST_CASE("closed-form partials agree with seeded dual derivatives") {
  RandomStream rng(602);
  struct Case {
    ContinuumLagrangian L;
    bool strain;
  };
  std::vector<Case> cases{{fluid_lagrangian(eos_gamma_law(0.8, 1.4, 0.3)), false},
                          {fluid_lagrangian(eos_poly_eta(0.5, 1.2)), false},
                          {elastic_lagrangian(stored_stvenant(0.7)), true},
                          {general_continuum_lagrangian(eos_gamma_law(0.6, 1.3, 0.2),
                                                        stored_stvenant(0.9)),
                           true}};
  int d = 4;
  for (auto& cs : cases) {
    for (int trial = 0; trial < 5; ++trial) {
      auto st = draw_state(rng, cs.strain);
      auto r = cs.L.at<double>(st.m, st.w, st.rho_bar, st.sigma_bar, st.c_low);

      auto lift = [&](auto seed_fn) {
        std::vector<D1> gv(16), w(4), c;
        for (int i = 0; i < 16; ++i) gv[i] = D1{st.gv[i], 0.0};
        for (int i = 0; i < 4; ++i) w[i] = D1{st.w[i], 0.0};
        for (double ci : st.c_low) c.push_back(D1{ci, 0.0});
        D1 rb{st.rho_bar, 0.0}, sb{st.sigma_bar, 0.0};
        seed_fn(gv, w, c, rb, sb);
        auto m = metric_data_from_components<D1>(d, gv, "seeded");
        return cs.L.at<D1>(m, w, rb, sb, c).value.b;
      };

      check_close(lift([&](auto&, auto&, auto&, D1& rb, D1&) { rb.b = 1; }), r.d_rho, 1e-9);
      check_close(lift([&](auto&, auto&, auto&, D1&, D1& sb) { sb.b = 1; }), r.d_sigma, 1e-9);
      for (int lam = 0; lam < d; ++lam)
        check_close(lift([&](auto&, auto& w, auto&, D1&, D1&) { w[lam].b = 1; }), r.d_w[lam],
                    1e-9);
      for (int mu = 0; mu < d; ++mu)
        for (int nu = mu; nu < d; ++nu) {
          double dg = lift([&](auto& gv, auto&, auto&, D1&, D1&) {
            gv[mu * 4 + nu].b = 1;
            gv[nu * 4 + mu].b = 1;
          });
          double want = (mu == nu) ? r.d_g[mu * 4 + nu] : 2 * r.d_g[mu * 4 + nu];
          check_close(dg, want, 1e-9);
          if (cs.strain) {
            double dc = lift([&](auto&, auto&, auto& c, D1&, D1&) {
              c[mu * 4 + nu].b = 1;
              c[nu * 4 + mu].b = 1;
            });
            double wantc = (mu == nu) ? r.d_c[mu * 4 + nu] : 2 * r.d_c[mu * 4 + nu];
            check_close(dc, wantc, 1e-9);
          }
        }
    }
  }
}

TEST_CASE("stored-energy gradients: reference state and isotropy identity") {
  RandomStream rng(603);
  auto en = stored_stvenant(1.0);
  int d = 4;
  for (int trial = 0; trial < 6; ++trial) {
    auto st = draw_state(rng, true);
    double g_ww = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g_ww += st.gv[i * d + j] * st.w[i] * st.w[j];
    double alpha = std::sqrt(-g_ww);
    std::vector<double> u(d);
    for (int i = 0; i < d; ++i) u[i] = st.w[i] / alpha;
    auto pr = projection_at<double>(st.m, u, 1.0);

    // at the reference state 𝖼 = 𝗉 the energy and its 𝖼-gradient vanish
    double w_ref = en.varpi<double>(d, pr.p_low, pr.p_up);
    CHECK(std::abs(w_ref) < 1e-12);
    auto dc_ref = en.varpi_dc<double>(d, pr.p_low, pr.p_up);
    for (double v : dc_ref) CHECK(std::abs(v) < 1e-12);

    // ∂ϖ/∂𝖼·𝖼 + ∂ϖ/∂𝗉·𝗉 = 0 at a generic on-shell state
    std::span<const double> c_low(st.c_low);
    auto dc = en.varpi_dc<double>(d, c_low, pr.p_up);
    auto dp = en.varpi_dp<double>(d, c_low, pr.p_up);
    for (int mu = 0; mu < d; ++mu)
      for (int nu = 0; nu < d; ++nu) {
        double acc = 0;
        for (int g = 0; g < d; ++g)
          acc += dc[mu * d + g] * st.c_low[g * d + nu] + dp[mu * d + g] * pr.p_low[g * d + nu];
        CHECK(std::abs(acc) < 1e-8);
      }
  }
}

TEST_CASE("pseudo-inverse by eigendecomposition gives the same invariants") {
  RandomStream rng(604);
  auto en = stored_stvenant(1.0);
  int d = 4;
  for (int trial = 0; trial < 8; ++trial) {
    auto st = draw_state(rng, true);
    double g_ww = 0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g_ww += st.gv[i * d + j] * st.w[i] * st.w[j];
    std::vector<double> u(d);
    for (int i = 0; i < d; ++i) u[i] = st.w[i] / std::sqrt(-g_ww);
    auto pr = projection_at<double>(st.m, u, 1.0);
    double closed = en.varpi<double>(d, std::span<const double>(st.c_low), pr.p_up);
    double eigen = varpi_invariants_eigen(en, d, st.c_low, pr.p_low);
    CHECK(std::abs(closed - eigen) < 1e-10 * std::max(1.0, std::abs(closed)));
  }
}

TEST_CASE("general continuum reduces to the fluid and elastic specializations") {
  RandomStream rng(605);
  auto eos = eos_gamma_law(0.8, 1.4, 0.3);
  auto fluid = fluid_lagrangian(eos);
  auto general_f = general_continuum_lagrangian(eos, stored_zero());
  auto elastic = elastic_lagrangian(stored_stvenant(0.7));
  auto general_e = general_continuum_lagrangian(eos_dust(), stored_stvenant(0.7));
  for (int t = 0; t < 5; ++t) {
    auto st = draw_state(rng, true);
    auto a = fluid.at<double>(st.m, st.w, st.rho_bar, st.sigma_bar, {});
    auto b = general_f.at<double>(st.m, st.w, st.rho_bar, st.sigma_bar, st.c_low);
    CHECK(a.value == b.value);
    CHECK(a.d_rho == b.d_rho);
    for (int i = 0; i < 4; ++i) CHECK(a.d_w[i] == b.d_w[i]);
    for (int i = 0; i < 16; ++i) CHECK(a.d_g[i] == b.d_g[i]);
    for (double v : b.d_c) CHECK(v == 0.0);

    auto e1 = elastic.at<double>(st.m, st.w, st.rho_bar, 0.0, st.c_low);
    auto e2 = general_e.at<double>(st.m, st.w, st.rho_bar, 0.0, st.c_low);
    CHECK(e1.value == e2.value);
    for (int i = 0; i < 16; ++i) CHECK(e1.d_c[i] == e2.d_c[i]);
  }
}

TEST_CASE("invalid states are rejected") {
  Chart M("M", {-1, -1, -1, -1}, {1, 1, 1, 1});
  auto g = minkowski_metric(M);
  std::vector<double> x{0, 0, 0, 0};
  auto m = metric_at<double>(g, std::span<const double>(x));
  std::vector<double> w{1, 0, 0, 0};
  auto L = elastic_lagrangian(stored_stvenant(1.0));

  CHECK_THROWS_AS(L.at<double>(m, w, -1.0, 0.0, {}), StateError);

  std::vector<double> spacelike{0, 1, 0, 0};
  CHECK_THROWS_AS(L.at<double>(m, spacelike, 1.0, 0.0, {}), StateError);

  std::vector<double> c_bad(16, 0.0);
  c_bad[0] = 0.8;  // c(u,u) != 0 in the rest frame
  c_bad[5] = c_bad[10] = c_bad[15] = 1.0;
  CHECK_THROWS_WITH_AS(L.at<double>(m, w, 1.0, 0.0, c_bad),
                       doctest::Contains("not degenerate"), StateError);

  auto fib = stored_stvenant_fiber(1.0, 0.5, {0, 1, 0, 0});
  std::vector<double> c_ok(16, 0.0);
  c_ok[5] = c_ok[10] = c_ok[15] = 1.0;
  auto Lf = elastic_lagrangian(fib);
  CHECK_THROWS_WITH_AS(Lf.at<double>(m, w, 1.0, 0.0, c_ok),
                       doctest::Contains("anisotropic"), StateError);
}

TEST_CASE("material and Eulerian routes agree on the stretched block") {
  Chart D("D", {-1, -1, -1, -1}, {1, 1, 1, 1});
  Chart M("M", {-2, -2, -2, -2}, {2, 2, 2, 2});
  auto g = minkowski_metric(M);
  double s = 1.1;
  auto tube = stretch_tube(D, M, s);
  auto L = elastic_lagrangian(stored_stvenant(1.0));

  RandomStream rng(606);
  auto rpoly = make_trig_poly(Chart("B", {-1, -1, -1}, {1, 1, 1}), rng, 0.2, 3, 1, 1.3);
  auto rf = make_reference_fields(
      D, [rpoly](auto Xs) { return rpoly(Xs); },
      [](auto Xs) {
        using S = std::remove_cvref_t<decltype(Xs[0])>;
        (void)Xs;
        return S(0.0);
      });
  rf.G = make_body_metric(D, [](auto, auto out) {
    using S = std::remove_cvref_t<decltype(out[0])>;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
    out[0] = S(1.0);
    out[4] = S(1.0);
    out[8] = S(1.0);
  });

  auto Lmat = material_lagrangian_field(L, tube, rf, g);

  // uniform stretch: ϖ = ¾ (s⁻² - 1)², ℒ̄ = -R̄ (1 + ϖ)
  std::vector<double> X{0.2, 0.4, -0.3, 0.1};
  double si = 1.0 / (s * s);
  double varpi = 0.75 * (si - 1) * (si - 1);
  double want = -rpoly(std::span<const double>(std::vector<double>{0.4, -0.3, 0.1})) * (1 + varpi);
  CHECK(Lmat.at(X)[0] == doctest::Approx(want).epsilon(1e-12));

  // Eulerian assembly pulled back to the body
  EulerianState st;
  st.w = tube_velocity_w(tube, rf.W);
  st.rho = pushforward_field(tube, rf.R);
  st.sigma = pushforward_field(tube, rf.S);
  st.c = strain_field(tube, rf.G);
  auto lbar = eulerian_lagrangian_field(L, g, st);
  auto pulled = pullback_field(tube, lbar);
  for (const auto& Xp : interior_grid(D, 3, 0.1)) {
    double a = Lmat.at(Xp)[0];
    double b = pulled.at(Xp)[0];
    CHECK(std::abs(a - b) < 1e-8 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("convective representation matches the material one") {
  Chart D("D", {-1, -1, -1, -1}, {1, 1, 1, 1});
  Chart M("M", {-1.5, -1.5, -1.5, -1.5}, {1.5, 1.5, 1.5, 1.5});
  auto g = minkowski_metric(M);
  RandomStream rng(607);
  auto tube = perturbed_identity_tube(D, M, rng, 0.03);
  auto L = general_continuum_lagrangian(eos_gamma_law(0.6, 1.3, 0.2), stored_stvenant(0.8));

  Chart B("B", {-1, -1, -1}, {1, 1, 1});
  auto rpoly = make_trig_poly(B, rng, 0.2, 3, 1, 1.4);
  auto spoly = make_trig_poly(B, rng, 0.1, 3, 1, 0.4);
  auto rf = make_reference_fields(
      D, [rpoly](auto Xs) { return rpoly(Xs); }, [spoly](auto Xs) { return spoly(Xs); });
  auto gpoly = make_trig_poly(B, rng, 0.15);
  rf.G = make_body_metric(D, [gpoly](auto Xs, auto out) {
    using S = std::remove_cvref_t<decltype(out[0])>;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
    S b = gpoly(Xs);
    out[0] = 1.0 + b * b;
    out[4] = S(1.0);
    out[8] = 1.0 + 0.5 * b * b;
  });

  auto Lmat = material_lagrangian_field(L, tube, rf, g);
  auto Gamma = pullback_field(tube, g.tensor(), "Gamma");
  auto Lconv = convective_lagrangian_field(L, Gamma, rf);
  for (const auto& X : interior_grid(D, 3, 0.1)) {
    double a = Lmat.at(X)[0];
    double b = Lconv.at(X)[0];
    CHECK(std::abs(a - b) < 1e-8 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("spacetime covariance holds for fluids and isotropic elasticity") {
  auto rep1 = spacetime_covariance_check(fluid_lagrangian(eos_gamma_law(0.8, 1.4, 0.3)),
                                         RandomStream(608));
  CHECK(rep1.max_residual < 1e-6);
  auto rep2 = spacetime_covariance_check(elastic_lagrangian(stored_stvenant(0.9)),
                                         RandomStream(609));
  CHECK(rep2.max_residual < 1e-6);
}

TEST_CASE("material covariance holds for isotropic energies and fails for the fiber term") {
  auto iso = material_covariance_check(
      general_continuum_lagrangian(eos_gamma_law(0.6, 1.3, 0.2), stored_stvenant(0.8)),
      RandomStream(610));
  CHECK(iso.max_residual < 1e-6);
  auto fluid = material_covariance_check(fluid_lagrangian(eos_poly_eta(0.5, 1.2)),
                                         RandomStream(611));
  CHECK(fluid.max_residual < 1e-6);
  auto fib = material_covariance_check(
      elastic_lagrangian(stored_stvenant_fiber(1.0, 0.8, {0, 1, 0, 0})), RandomStream(612));
  CHECK(fib.max_residual > 1e-2);
}

TEST_CASE("infinitesimal covariance identity") {
  RandomStream rng(613);
  auto dust = fluid_lagrangian(eos_dust());
  for (int t = 0; t < 10; ++t) {
    auto st = draw_state(rng, false);
    CHECK(covariance_identity_residual(dust, st.m, st.w, st.rho_bar, st.sigma_bar, {}) < 1e-10);
  }
  auto gen = general_continuum_lagrangian(eos_gamma_law(0.7, 1.35, 0.25), stored_stvenant(0.6));
  for (int t = 0; t < 10; ++t) {
    auto st = draw_state(rng, true);
    CHECK(covariance_identity_residual(gen, st.m, st.w, st.rho_bar, st.sigma_bar, st.c_low) <
          1e-8);
  }
}

TEST_CASE("chain rule in the point dependence closes to zero") {
  Chart M("M", {-1, -1, -1, -1}, {1, 1, 1, 1});
  RandomStream rng(614);
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

  EulerianState st;
  {
    auto wpert = random_tensor_field(M, Shape{1, 0, 0}, rng, 0.15, "dw");
    st.w = TensorField::derived(
        M, Shape{1, 0, 0}, {wpert},
        [wpert](auto x, auto out) {
          using S = std::remove_cvref_t<decltype(out[0])>;
          wpert.eval(x, out);
          out[0] = out[0] + S(1.0);
        },
        "w");
  }
  st.rho = random_tensor_field(M, Shape{0, 0, 1}, rng, 0.3, "rho", 1.5);
  st.sigma = random_tensor_field(M, Shape{0, 0, 1}, rng, 0.1, "sigma", 0.4);
  auto B = random_symmetric_field(M, rng, 0.3, "B");
  st.c = TensorField::derived(
      M, Shape{0, 2, 0}, {B, st.w, gt},
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

  auto L = general_continuum_lagrangian(eos_gamma_law(0.7, 1.3, 0.25), stored_stvenant(0.5));
  auto res = lagrangian_chain_rule_residual(L, g, st);
  for (const auto& x : interior_grid(M, 3, 0.1)) {
    auto rv = res.at(x);
    for (double v : rv) CHECK(std::abs(v) < 1e-8);
  }
}
