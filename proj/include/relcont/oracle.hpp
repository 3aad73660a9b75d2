#pragma once

// Independent oracles used by the test suites: a flow-based Lie derivative
// (RK4 transport + pullback difference quotient) and a Richardson-extrapolated
// central difference for first variations. These stay deliberately separate
// from the operators they check.

#include <functional>
#include <vector>

#include "relcont/linalg.hpp"
#include "relcont/tensor.hpp"

namespace relcont {

// flow of ζ for parameter time eps, RK4 with nsteps; templated so dual seeds
// transport the flow Jacobian alongside the point
template <class S>
std::vector<S> flow_point(const TensorField& zeta, std::span<const S> x0, double eps,
                          int nsteps = 8) {
  int d = zeta.dim();
  std::vector<S> y(x0.begin(), x0.end());
  double h = eps / nsteps;
  std::vector<S> k1(d), k2(d), k3(d), k4(d), tmp(d);
  for (int s = 0; s < nsteps; ++s) {
    zeta.eval<S>(y, k1);
    for (int i = 0; i < d; ++i) tmp[i] = y[i] + (h / 2) * k1[i];
    zeta.eval<S>(tmp, k2);
    for (int i = 0; i < d; ++i) tmp[i] = y[i] + (h / 2) * k2[i];
    zeta.eval<S>(tmp, k3);
    for (int i = 0; i < d; ++i) tmp[i] = y[i] + h * k3[i];
    zeta.eval<S>(tmp, k4);
    for (int i = 0; i < d; ++i)
      y[i] = y[i] + (h / 6) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return y;
}

// (φ_eps^* k)(x): pull k back along the flow of ζ
inline std::vector<double> flow_pullback(const TensorField& k, const TensorField& zeta,
                                         std::span<const double> x, double eps) {
  int d = k.dim();
  Shape sh = k.shape();
  // flow with a Jacobian: seed each axis
  std::vector<double> y0(d);
  std::vector<double> A(d * d);  // A^mu_nu = ∂ φ^mu / ∂ x^nu
  for (int a = 0; a < d; ++a) {
    std::vector<D1> xs(d);
    for (int i = 0; i < d; ++i) xs[i] = D1{x[i], i == a ? 1.0 : 0.0};
    auto ys = flow_point<D1>(zeta, xs, eps);
    for (int m = 0; m < d; ++m) {
      A[m * d + a] = ys[m].b;
      if (a == 0) y0[m] = ys[m].a;
    }
  }
  std::vector<double> kv = k.at(y0);
  std::vector<double> Ainv(d * d);
  double detA = det_and_invert<double>(d, A.data(), Ainv.data(), "flow jacobian");
  int p = sh.p, q = sh.q, rank = p + q;
  std::size_t nc = sh.ncomp(d);
  std::vector<double> out(nc, 0.0);
  double wfac = sh.weight != 0 ? std::pow(std::abs(detA), double(sh.weight)) : 1.0;
  std::array<int, 8> src{};
  for_each_index(d, rank, [&](const int* idx) {
    double acc = 0;
    for_each_index(d, rank, [&](const int* jdx) {
      double f = 1.0;
      for (int r = 0; r < p; ++r) f *= Ainv[idx[r] * d + jdx[r]];
      for (int s = 0; s < q; ++s) f *= A[jdx[p + s] * d + idx[p + s]];
      for (int t = 0; t < rank; ++t) src[t] = jdx[t];
      acc += f * kv[flat_index(src.data(), rank, d)];
    });
    out[flat_index(idx, rank, d)] = acc * wfac;
  });
  return out;
}

// difference quotient of the flow pullback: the oracle for £_ζ k
inline std::vector<double> lie_flow_oracle(const TensorField& k, const TensorField& zeta,
                                           std::span<const double> x, double eps = 1e-3) {
  auto plus = flow_pullback(k, zeta, x, eps);
  auto minus = flow_pullback(k, zeta, x, -eps);
  std::vector<double> out(plus.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (plus[i] - minus[i]) / (2 * eps);
  return out;
}

// Richardson-extrapolated central difference: O(step^4)
inline double fd_variation(const std::function<double(double)>& F, double step = 1e-4) {
  auto central = [&](double h) { return (F(h) - F(-h)) / (2 * h); };
  double d1 = central(step);
  double d2 = central(step / 2);
  return (4 * d2 - d1) / 3;
}

// convergence probe: same quotient at two steps, for order verification
inline std::pair<double, double> fd_variation_pair(const std::function<double(double)>& F,
                                                   double step) {
  auto richardson = [&](double h) {
    auto central = [&](double hh) { return (F(hh) - F(-hh)) / (2 * hh); };
    return (4 * central(h / 2) - central(h)) / 3;
  };
  return {richardson(step), richardson(step / 2)};
}

}  // namespace relcont
