#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relcont/dual.hpp"
#include "relcont/linalg.hpp"

using namespace relcont;

TEST_CASE("first derivatives through elementary functions") {
  double x0 = 0.7;
  D1 x{x0, 1.0};
  CHECK(sin(x).b == doctest::Approx(std::cos(x0)).epsilon(1e-15));
  CHECK(cos(x).b == doctest::Approx(-std::sin(x0)).epsilon(1e-15));
  CHECK(exp(x).b == doctest::Approx(std::exp(x0)).epsilon(1e-15));
  CHECK(log(x).b == doctest::Approx(1.0 / x0).epsilon(1e-15));
  CHECK(sqrt(x).b == doctest::Approx(0.5 / std::sqrt(x0)).epsilon(1e-15));
  CHECK(pow(x, 3.5).b == doctest::Approx(3.5 * std::pow(x0, 2.5)).epsilon(1e-15));
  auto y = (x * x + 2.0 * x + 1.0) / (1.0 + x);
  CHECK(y.a == doctest::Approx(x0 + 1.0));
  CHECK(y.b == doctest::Approx(1.0));
}

TEST_CASE("nested duals carry second and third derivatives") {
  double t = 0.3;
  // f(t) = sin(t) * exp(2t)
  auto f = [](auto v) { return sin(v) * exp(2.0 * v); };
  D3 x{D2{D1{t, 1.0}, D1{1.0, 0.0}}, D2{D1{1.0, 0.0}, D1{0.0, 0.0}}};
  auto r = f(x);
  double s = std::sin(t), c = std::cos(t), e = std::exp(2 * t);
  CHECK(r.a.a.a == doctest::Approx(s * e).epsilon(1e-15));
  CHECK(r.a.a.b == doctest::Approx((c + 2 * s) * e).epsilon(1e-15));
  CHECK(r.b.b.a == doctest::Approx((3 * s + 4 * c) * e).epsilon(1e-14));  // f''
  CHECK(r.b.b.b == doctest::Approx((2 * s + 11 * c) * e).epsilon(1e-14));  // f'''
}

TEST_CASE("mixed partials via two seeds") {
  // f(x,y) = x^2 y^3: d2f/dxdy = 6 x y^2
  double X = 1.3, Y = 0.8;
  D2 x{D1{X, 0.0}, D1{1.0, 0.0}};  // outer seed = d/dx
  D2 y{D1{Y, 1.0}, D1{0.0, 0.0}};  // inner seed = d/dy
  auto f = x * x * y * y * y;
  CHECK(f.b.b == doctest::Approx(6 * X * Y * Y).epsilon(1e-14));
}

TEST_CASE("matrix inversion under duals differentiates the inverse") {
  // A(t) = [[1, t], [t, 2]]; d/dt A^{-1} = -A^{-1} A' A^{-1}
  double t = 0.4;
  std::vector<D1> A = {D1{1, 0}, D1{t, 1}, D1{t, 1}, D1{2, 0}};
  std::vector<D1> Ai(4);
  D1 det = det_and_invert<D1>(2, A.data(), Ai.data(), "test");
  double d = 2 - t * t;
  CHECK(det.a == doctest::Approx(d));
  CHECK(det.b == doctest::Approx(-2 * t));
  // A^{-1} = 1/d [[2, -t], [-t, 1]]
  CHECK(Ai[0].a == doctest::Approx(2 / d));
  CHECK(Ai[1].a == doctest::Approx(-t / d));
  // d/dt (2/d) = 2 * 2t / d^2
  CHECK(Ai[0].b == doctest::Approx(4 * t / (d * d)).epsilon(1e-13));
  CHECK(Ai[3].b == doctest::Approx(2 * t / (d * d)).epsilon(1e-13));
}

TEST_CASE("singular matrix raises") {
  std::vector<double> A = {1, 2, 2, 4};
  CHECK_THROWS_AS(determinant<double>(2, A.data(), "degenerate"), SingularError);
}

TEST_CASE("jacobi eigensolver and pseudo-inverse") {
  std::vector<double> A = {2, 1, 0, 1, 2, 0, 0, 0, 0};  // evals 3, 1, 0
  std::vector<double> ev, V;
  jacobi_eigen(3, A, ev, V);
  std::sort(ev.begin(), ev.end());
  CHECK(ev[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ev[1] == doctest::Approx(1.0));
  CHECK(ev[2] == doctest::Approx(3.0));

  auto P = sym_pseudo_inverse(3, A);
  // P A P = P and A P A = A
  std::vector<double> T1(9), T2(9);
  mat_mul(3, P.data(), A.data(), T1.data());
  mat_mul(3, T1.data(), P.data(), T2.data());
  for (int i = 0; i < 9; ++i) CHECK(T2[i] == doctest::Approx(P[i]).epsilon(1e-12));
  mat_mul(3, A.data(), P.data(), T1.data());
  mat_mul(3, T1.data(), A.data(), T2.data());
  for (int i = 0; i < 9; ++i) CHECK(T2[i] == doctest::Approx(A[i]).epsilon(1e-12));
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  std::vector<double> x, w;
  gauss_legendre(8, x, w);
  double s = 0;
  for (int i = 0; i < 8; ++i) s += w[i] * std::pow(x[i], 14);  // degree 14 < 2*8
  CHECK(s == doctest::Approx(2.0 / 15.0).epsilon(1e-14));
  double total = 0;
  for (double wi : w) total += wi;
  CHECK(total == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("permutation walk covers S_n with signs") {
  int count = 0, pos = 0;
  for_each_permutation(4, [&](const int*, int s) {
    ++count;
    if (s > 0) ++pos;
  });
  CHECK(count == 24);
  CHECK(pos == 12);
}
