#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relcont/scenes.hpp"

using namespace relcont;

namespace {

std::vector<std::vector<double>> region_points(const GravityRegion& r, int per_axis,
                                               double margin) {
  return interior_grid(Chart("probe", r.lo, r.hi), per_axis, margin);
}

}  // namespace

TEST_CASE("matterless flat spacetime has zero action and zero residuals") {
  auto m = flat_matched_dust(0.0);

  auto terms = total_action_terms(m);
  CHECK(std::abs(terms.matter_minus) < 1e-12);
  CHECK(std::abs(terms.eh_minus) < 1e-12);
  CHECK(std::abs(terms.eh_plus) < 1e-12);
  CHECK(std::abs(terms.ghy_minus) < 1e-12);
  CHECK(std::abs(terms.ghy_plus) < 1e-12);
  CHECK(std::abs(total_action(m)) < 1e-12);

  auto rf = einstein_interior_residual(m, region_points(m.interior, 2, 0.2), 1e-12, "exact");
  CHECK(rf.pass());

  auto spts = interior_grid(m.interface_surface->chart(), 2, 0.2);
  auto jr = junction_check(*m.interface_surface, m.interior.g, m.exterior->g, spts, 1e-14,
                           "exact");
  CHECK(jr.pass());
}

TEST_CASE("degenerate integration boxes contribute nothing") {
  auto m = flat_matched_dust(1.0);
  m.interior.hi[1] = m.interior.lo[1];
  CHECK(detail::integrate_region(m.interior, [](std::span<const double>) { return 1.0; }) ==
        0.0);
}

TEST_CASE("uniform dust on flat space sources matter action but no curvature") {
  auto m = flat_matched_dust(1.0);

  // closed form: l = -rho_bar over a t x half-box volume of 1*1*2*2
  auto terms = total_action_terms(m);
  CHECK(terms.matter_minus == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(std::abs(terms.eh_minus) < 1e-12);

  // flat metric with matter is not an Einstein solution and the residual says so
  auto rf = einstein_interior_residual(m, region_points(m.interior, 2, 0.2), 1e-4, "exact");
  CHECK(rf.max_norm > 1.0);
  CHECK(!rf.pass());
}

TEST_CASE("friedmann backgrounds satisfy the sourced Einstein equation exactly") {
  Chart ch("frw", {0.8, -0.5, -0.5, -0.5}, {1.3, 0.5, 0.5, 0.5});
  auto pts = interior_grid(ch, 3, 0.05);

  SUBCASE("matter dominated dust") {
    auto g = frw_metric(1.0, 2.0 / 3.0, ch, "frw");
    EulerianState st;
    st.w = TensorField::constant(ch, Shape{1, 0, 0}, {1, 0, 0, 0}, "w");
    st.rho = TensorField::constant(ch, Shape{0, 0, 1}, {1.0 / (6.0 * M_PI)}, "rho");
    st.sigma = TensorField::constant(ch, Shape{0, 0, 1}, {0.0}, "sigma");
    MatchedSpacetime m{GravityRegion{g, ch.lo, ch.hi, 4, fluid_lagrangian(eos_dust()), st, {}},
                       {}, {}, {}};
    auto rf = einstein_interior_residual(m, pts, 1e-10, "exact");
    CHECK(rf.pass());
  }

  SUBCASE("radiation dominated gamma-law fluid") {
    auto g = frw_metric(1.0, 0.5, ch, "frw");
    double rho0 = 1.0 / (32.0 * M_PI);
    double A = 3.0 / (32.0 * M_PI * std::pow(rho0, 4.0 / 3.0));
    EulerianState st;
    st.w = TensorField::constant(ch, Shape{1, 0, 0}, {1, 0, 0, 0}, "w");
    st.rho = TensorField::constant(ch, Shape{0, 0, 1}, {rho0}, "rho");
    st.sigma = TensorField::constant(ch, Shape{0, 0, 1}, {0.5 * rho0}, "sigma");
    MatchedSpacetime m{GravityRegion{g, ch.lo, ch.hi, 4,
                                     fluid_lagrangian(eos_gamma_law(A, 1.0 / 3.0, 1.0)), st, {}},
                       {}, {}, {}};
    auto rf = einstein_interior_residual(m, pts, 1e-10, "exact");
    CHECK(rf.pass());
  }
}

TEST_CASE("star oracle reproduces the interior closed forms") {
  // make_star substitutes the profile into the TOV balance internally; reaching
  // this line means the 1-D oracle is self-consistent
  auto star = make_star(1.0, 0.05);

  CHECK(star.mass() == doctest::Approx(4.0 * M_PI / 3.0 * 0.05).epsilon(1e-14));
  CHECK(std::abs(star.pressure(1.0)) < 1e-14);
  CHECK(star.pressure(0.0) > 0.0);
  CHECK(star.pressure(0.0) < 0.05);
  for (int i = 0; i < 20; ++i) {
    double r = i / 20.0;
    CHECK(star.pressure(r) >= star.pressure(r + 0.05) - 1e-15);
  }
  double f1sq = 1.0 - 2.0 * star.mass();
  CHECK(star.lapse(1.0) * star.lapse(1.0) == doctest::Approx(f1sq).epsilon(1e-14));
  CHECK(star.radial(1.0) == doctest::Approx(1.0 / f1sq).epsilon(1e-14));

  CHECK_THROWS_AS(make_star(1.0, 0.5), ConfigError);  // beyond the static bound
}

TEST_CASE("matched star satisfies junction, traction, and field equations") {
  auto star = make_star(1.0, 0.05);
  auto m = star_spacetime(star);
  auto spts = interior_grid(m.interface_surface->chart(), 3, 0.1);

  SUBCASE("interface normal points outward") {
    std::vector<double> mid(3);
    const auto& tc = m.interface_surface->chart();
    for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (tc.lo[i] + tc.hi[i]);
    auto fr = surf_frame_at<double>(*m.interface_surface, mid);
    CHECK(fr.n[1] > 0.0);
  }

  SUBCASE("junction conditions hold to machine precision") {
    auto jr = junction_check(*m.interface_surface, m.interior.g, m.exterior->g, spts, 1e-10,
                             "exact");
    CHECK(jr.h_jump.max_norm < 1e-12);
    CHECK(jr.K_jump.max_norm < 1e-12);
    CHECK(jr.energy_jump.max_norm < 1e-12);
    CHECK(jr.momentum_jump.max_norm < 1e-12);
    CHECK(jr.pass());
  }

  SUBCASE("interface traction vanishes with the surface pressure") {
    auto samples = interface_samples(*m.interface_surface, spts);
    auto rf = boundary_traction_residual(*m.interior.matter, m.interior.g, *m.interior.state,
                                         samples, 1e-10, "exact");
    CHECK(rf.pass());
  }

  SUBCASE("interior sources its own curvature, exterior is vacuum") {
    auto in_pts = region_points(m.interior, 3, 0.08);
    CHECK(einstein_interior_residual(m, in_pts, 1e-10, "exact").pass());
    CHECK(bianchi_residual(m.interior.g, in_pts, 1e-6, "exact").pass());
    auto out_pts = region_points(*m.exterior, 3, 0.08);
    CHECK(einstein_exterior_residual(m, out_pts, 1e-10, "exact").pass());
    CHECK(bianchi_residual(m.exterior->g, out_pts, 1e-6, "exact").pass());
  }

  SUBCASE("stress divergence is bounded by the Einstein divergence") {
    auto in_pts = region_points(m.interior, 2, 0.12);
    auto cmp = stress_divergence_comparison(*m.interior.matter, m.interior.g, *m.interior.state,
                                            m.constants.chi(), in_pts, 0.0, "exact");
    CHECK(cmp.stress.max_norm <= cmp.einstein.max_norm + 1e-10);
  }

  SUBCASE("matched interface GHY terms cancel") {
    double inner = ghy_integral(*m.interface_surface, m.constants.chi());
    double outer = ghy_integral(m.interface_outer(), m.constants.chi());
    CHECK(inner == doctest::Approx(outer).epsilon(1e-10));
  }

  SUBCASE("matched report passes and is name ordered") {
    MatchedReportConfig cfg;
    cfg.scene = "star";
    auto rep = matched_report(m, cfg);
    REQUIRE(!rep.checks.empty());
    CHECK(rep.all_pass());
    for (std::size_t i = 1; i < rep.checks.size(); ++i)
      CHECK(rep.checks[i - 1].name < rep.checks[i].name);
    bool has_implication = false;
    for (const auto& c : rep.checks)
      if (c.name == "junction-implies-free-boundary") has_implication = c.pass;
    CHECK(has_implication);
  }
}

TEST_CASE("mass-mismatched star fails only the junction checks") {
  auto star = make_star(1.0, 0.05);
  auto m = star_spacetime(star, 1.1);
  auto spts = interior_grid(m.interface_surface->chart(), 2, 0.15);

  auto jr = junction_check(*m.interface_surface, m.interior.g, m.exterior->g, spts, 1e-5,
                           "exact");
  CHECK(jr.h_jump.max_norm > 1e-2);
  CHECK(jr.K_jump.max_norm > 1e-2);
  // the Einstein-constraint jumps stay zero: interior G(n,.) vanishes with p(R)
  // and the rescaled exterior is still vacuum
  CHECK(jr.energy_jump.max_norm < 1e-12);
  CHECK(jr.momentum_jump.max_norm < 1e-12);

  CHECK(einstein_interior_residual(m, region_points(m.interior, 2, 0.1), 1e-10, "exact").pass());
  CHECK(einstein_exterior_residual(m, region_points(*m.exterior, 2, 0.1), 1e-10, "exact").pass());
  CHECK(eulerian_el_residual(*m.interior.matter, m.interior.g, *m.interior.state,
                             region_points(m.interior, 2, 0.1), 1e-8, "exact")
            .pass());
}

TEST_CASE("schwarzschild metric is vacuum and a perturbed mass profile is not") {
  auto g = schwarzschild_metric(0.2, 1.0, 4.0);
  auto pts = interior_grid(g.tensor().chart(), 3, 0.1);
  CHECK(einstein_vacuum_residual(g, pts, 1e-10, "exact").pass());

  Chart ch = g.tensor().chart();
  auto bad = MetricField(TensorField::exact(
                             ch, Shape{0, 2, 0},
                             [](auto x, auto out) {
                               using S = std::remove_cvref_t<decltype(out[0])>;
                               for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
                               S mr = 0.2 * (1.0 + 0.1 * (x[1] - 2.2));
                               S f = 1.0 - 2.0 * mr / x[1];
                               S st = sin(x[2]);
                               out[0] = -f;
                               out[5] = 1.0 / f;
                               out[10] = x[1] * x[1];
                               out[15] = x[1] * x[1] * st * st;
                             },
                             "schw_bad"),
                         MetricSignature::Lorentzian, false);
  CHECK(einstein_vacuum_residual(bad, pts, 1e-10, "exact").max_norm > 1e-3);
}

TEST_CASE("total star action is finite and node-stable") {
  auto star = make_star(1.0, 0.05);
  auto a6 = total_action(star_spacetime(star, 1.0, 3.0, 0.1, 0.9, 6));
  auto a12 = total_action(star_spacetime(star, 1.0, 3.0, 0.1, 0.9, 12));
  CHECK(std::isfinite(a6));
  CHECK(std::abs(a6 - a12) / std::abs(a12) < 1e-5);
}
