#pragma once

// Metric wrapper and the pointwise kernels built on it: inverse/volume,
// Christoffel symbols, Riemann/Ricci/Einstein. All kernels are templated on
// the scalar so one more dual level gives one more derivative.

#include <optional>
#include <sstream>
#include <vector>

#include "relcont/linalg.hpp"
#include "relcont/tensor.hpp"

namespace relcont {

enum class MetricSignature { Lorentzian, Riemannian };

class MetricField {
  TensorField g_;
  MetricSignature sig_ = MetricSignature::Lorentzian;

 public:
  MetricField() = default;
  MetricField(TensorField g, MetricSignature sig, bool validate = true) : g_(std::move(g)), sig_(sig) {
    if (g_.shape() != Shape{0, 2, 0})
      throw StateError("metric '" + g_.name() + "' must be a weight-0 (0,2) field");
    if (validate) validate_samples();
  }

  const TensorField& tensor() const { return g_; }
  const Chart& chart() const { return g_.chart(); }
  int dim() const { return g_.dim(); }
  MetricSignature signature() const { return sig_; }
  DerivMode mode() const { return g_.mode(); }
  const std::string& name() const { return g_.name(); }
  int negative_directions() const { return sig_ == MetricSignature::Lorentzian ? 1 : 0; }

  template <class S>
  void eval(std::span<const S> x, std::span<S> out) const {
    g_.eval<S>(x, out);
  }

 private:
  void validate_samples() const {
    int d = dim();
    auto pts = interior_grid(chart(), 3, 0.1);
    for (const auto& x : pts) {
      auto g = g_.at(x);
      for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
          if (std::abs(g[i * d + j] - g[j * d + i]) > 1e-12)
            throw StateError("metric '" + name() + "': asymmetry above 1e-12 at sample point");
      double det = determinant<double>(d, g.data(), "metric validation");
      if (std::abs(det) < 1e-14)
        throw StateError("metric '" + name() + "': vanishing determinant at sample point");
      auto signs = eigenvalue_signs(d, g);
      int neg = 0;
      for (int s : signs) neg += (s < 0);
      if (neg != negative_directions())
        throw StateError("metric '" + name() + "': eigenvalue signs disagree with declared " +
                         (sig_ == MetricSignature::Lorentzian ? "Lorentzian" : "Riemannian") +
                         " signature");
    }
  }
};

template <class S>
struct MetricData {
  int dim = 0;
  std::vector<S> g, ginv;  // dim x dim
  S det{};
  S vol{};  // sqrt(|det|)
};

template <class S>
MetricData<S> metric_data_from_components(int d, std::vector<S> g, const char* where) {
  MetricData<S> m;
  m.dim = d;
  m.g = std::move(g);
  m.ginv.resize(d * d);
  m.det = det_and_invert<S>(d, m.g.data(), m.ginv.data(), where);
  m.vol = sqrt(dabs(m.det));
  return m;
}

template <class S>
std::string point_text(std::span<const S> x) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << primal(x[i]);
  os << ")";
  return os.str();
}

template <class S>
MetricData<S> metric_at(const MetricField& gf, std::span<const S> x) {
  int d = gf.dim();
  std::vector<S> g(d * d);
  gf.eval<S>(x, g);
  try {
    return metric_data_from_components<S>(d, std::move(g), "metric inversion");
  } catch (const SingularError&) {
    throw SingularError("metric '" + gf.name() + "' singular at " + point_text(x));
  }
}

template <class S>
struct ChristoffelData {
  MetricData<S> metric;
  std::vector<S> dg;     // [sigma][mu][nu] = ∂_sigma g_mu_nu
  std::vector<S> gamma;  // [lam][mu][nu]
};

template <class S>
ChristoffelData<S> christoffel_at(const MetricField& gf, std::span<const S> x) {
  using SS = Dual<S>;
  int d = gf.dim();
  ChristoffelData<S> c;
  c.dg.resize(d * d * d);
  std::vector<S> g0(d * d);
  std::vector<SS> xs(d), gs(d * d);
  for (int s = 0; s < d; ++s) {
    for (int i = 0; i < d; ++i) xs[i] = SS{x[i], S(i == s ? 1.0 : 0.0)};
    gf.eval<SS>(xs, gs);
    for (int i = 0; i < d * d; ++i) {
      c.dg[s * d * d + i] = gs[i].b;
      if (s == 0) g0[i] = gs[i].a;
    }
  }
  try {
    c.metric = metric_data_from_components<S>(d, std::move(g0), "metric inversion");
  } catch (const SingularError&) {
    throw SingularError("christoffel of '" + gf.name() + "': metric singular at " +
                        point_text(x));
  }
  c.gamma.assign(d * d * d, S(0.0));
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m)
      for (int n = 0; n < d; ++n) {
        S acc = S(0.0);
        for (int s = 0; s < d; ++s) {
          acc = acc + c.metric.ginv[l * d + s] *
                          (c.dg[m * d * d + s * d + n] + c.dg[n * d * d + s * d + m] -
                           c.dg[s * d * d + m * d + n]);
        }
        c.gamma[(l * d + m) * d + n] = 0.5 * acc;
      }
  return c;
}

template <class S>
struct CurvatureData {
  MetricData<S> metric;
  std::vector<S> gamma;          // [lam][mu][nu]
  std::vector<S> riemann;        // R^lam_{alpha mu beta}, [lam][alpha][mu][beta]
  std::vector<S> ricci;          // R_{alpha beta}
  S scalar{};
  std::vector<S> einstein_low;   // G_{alpha beta}
  std::vector<S> einstein_up;    // G^{alpha beta}
  std::vector<S> einstein_mix;   // G^alpha_beta
};

// convention: R^lam_{alpha mu beta} = ∂_mu Γ^lam_{alpha beta} - ∂_beta Γ^lam_{alpha mu}
//             + Γ^lam_{sig mu} Γ^sig_{alpha beta} - Γ^lam_{sig beta} Γ^sig_{alpha mu}
template <class S>
CurvatureData<S> curvature_at(const MetricField& gf, std::span<const S> x) {
  using SS = Dual<S>;
  int d = gf.dim();
  CurvatureData<S> r;
  std::vector<S> dgamma(d * d * d * d);  // [mu][lam][a][b] = ∂_mu Γ^lam_{a b}
  std::vector<SS> xs(d);
  for (int mu = 0; mu < d; ++mu) {
    for (int i = 0; i < d; ++i) xs[i] = SS{x[i], S(i == mu ? 1.0 : 0.0)};
    auto ch = christoffel_at<SS>(gf, xs);
    for (int i = 0; i < d * d * d; ++i) dgamma[mu * d * d * d + i] = ch.gamma[i].b;
    if (mu == 0) {
      r.gamma.resize(d * d * d);
      for (int i = 0; i < d * d * d; ++i) r.gamma[i] = ch.gamma[i].a;
      r.metric.dim = d;
      r.metric.g.resize(d * d);
      r.metric.ginv.resize(d * d);
      for (int i = 0; i < d * d; ++i) {
        r.metric.g[i] = ch.metric.g[i].a;
        r.metric.ginv[i] = ch.metric.ginv[i].a;
      }
      r.metric.det = ch.metric.det.a;
      r.metric.vol = ch.metric.vol.a;
    }
  }
  auto G = [&](int l, int m, int n) -> const S& { return r.gamma[(l * d + m) * d + n]; };
  auto dG = [&](int mu, int l, int m, int n) -> const S& {
    return dgamma[((mu * d + l) * d + m) * d + n];
  };
  r.riemann.assign(d * d * d * d, S(0.0));
  for (int l = 0; l < d; ++l)
    for (int a = 0; a < d; ++a)
      for (int m = 0; m < d; ++m)
        for (int b = 0; b < d; ++b) {
          S acc = dG(m, l, a, b) - dG(b, l, a, m);
          for (int s = 0; s < d; ++s) acc = acc + G(l, s, m) * G(s, a, b) - G(l, s, b) * G(s, a, m);
          r.riemann[((l * d + a) * d + m) * d + b] = acc;
        }
  r.ricci.assign(d * d, S(0.0));
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      S acc = S(0.0);
      for (int m = 0; m < d; ++m) acc = acc + r.riemann[((m * d + a) * d + m) * d + b];
      r.ricci[a * d + b] = acc;
    }
  r.scalar = S(0.0);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) r.scalar = r.scalar + r.metric.ginv[a * d + b] * r.ricci[a * d + b];
  r.einstein_low.resize(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      r.einstein_low[i * d + j] = r.ricci[i * d + j] - 0.5 * r.scalar * r.metric.g[i * d + j];
  r.einstein_up.assign(d * d, S(0.0));
  r.einstein_mix.assign(d * d, S(0.0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      S up = S(0.0), mix = S(0.0);
      for (int a = 0; a < d; ++a) {
        mix = mix + r.metric.ginv[i * d + a] * r.einstein_low[a * d + j];
        for (int b = 0; b < d; ++b)
          up = up + r.metric.ginv[i * d + a] * r.metric.ginv[j * d + b] * r.einstein_low[a * d + b];
      }
      r.einstein_up[i * d + j] = up;
      r.einstein_mix[i * d + j] = mix;
    }
  return r;
}

// ∇_alpha G^{alpha beta}: needs third metric derivatives, so exact fields only
inline std::vector<double> einstein_divergence(const MetricField& gf,
                                               std::span<const double> x) {
  int d = gf.dim();
  std::vector<D1> xs(d);
  std::vector<std::vector<double>> dEin(d);  // [mu] -> ∂_mu G^{ab}
  CurvatureData<D1> last;
  for (int mu = 0; mu < d; ++mu) {
    for (int i = 0; i < d; ++i) xs[i] = D1{x[i], i == mu ? 1.0 : 0.0};
    last = curvature_at<D1>(gf, xs);
    dEin[mu].resize(d * d);
    for (int i = 0; i < d * d; ++i) dEin[mu][i] = last.einstein_up[i].b;
  }
  auto G = [&](int l, int m, int n) { return last.gamma[(l * d + m) * d + n].a; };
  std::vector<double> div(d, 0.0);
  for (int b = 0; b < d; ++b) {
    double acc = 0;
    for (int a = 0; a < d; ++a) {
      acc += dEin[a][a * d + b];
      for (int s = 0; s < d; ++s)
        acc += G(a, a, s) * last.einstein_up[s * d + b].a + G(b, a, s) * last.einstein_up[a * d + s].a;
    }
    div[b] = acc;
  }
  return div;
}

class Connection {
  std::optional<MetricField> metric_;
  Chart chart_;

  explicit Connection(Chart ch) : chart_(std::move(ch)) {}

 public:
  static Connection levi_civita(MetricField m) {
    Connection c(m.chart());
    c.metric_ = std::move(m);
    return c;
  }
  static Connection flat(Chart ch) { return Connection(std::move(ch)); }

  bool is_flat() const { return !metric_.has_value(); }
  const Chart& chart() const { return chart_; }
  int dim() const { return chart_.dim(); }
  const MetricField& metric() const {
    if (!metric_) throw StateError("flat connection carries no metric");
    return *metric_;
  }

  template <class S>
  std::vector<S> christoffel(std::span<const S> x) const {
    int d = dim();
    if (!metric_) return std::vector<S>(d * d * d, S(0.0));
    return christoffel_at<S>(*metric_, x).gamma;
  }

  // max |∂_s g_mn - Γ^l_{s m} g_ln - Γ^l_{s n} g_ml|
  double compatibility_residual(std::span<const double> x) const {
    if (!metric_) return 0.0;
    auto c = christoffel_at<double>(*metric_, x);
    int d = dim();
    double worst = 0;
    for (int s = 0; s < d; ++s)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
          double acc = c.dg[s * d * d + m * d + n];
          for (int l = 0; l < d; ++l)
            acc -= c.gamma[(l * d + s) * d + m] * c.metric.g[l * d + n] +
                   c.gamma[(l * d + s) * d + n] * c.metric.g[m * d + l];
          worst = std::max(worst, std::abs(acc));
        }
    return worst;
  }

  double torsion_residual(std::span<const double> x) const {
    auto g = christoffel<double>(x);
    int d = dim();
    double worst = 0;
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n)
          worst = std::max(worst, std::abs(g[(l * d + m) * d + n] - g[(l * d + n) * d + m]));
    return worst;
  }
};

// ---- stock metrics ----

inline MetricField minkowski_metric(Chart ch) {
  int d = ch.dim();
  std::vector<double> eta(d * d, 0.0);
  eta[0] = -1.0;
  for (int i = 1; i < d; ++i) eta[i * d + i] = 1.0;
  return MetricField(TensorField::constant(std::move(ch), Shape{0, 2, 0}, eta, "minkowski"),
                     MetricSignature::Lorentzian);
}

inline MetricField euclidean_metric(Chart ch) {
  int d = ch.dim();
  std::vector<double> e(d * d, 0.0);
  for (int i = 0; i < d; ++i) e[i * d + i] = 1.0;
  return MetricField(TensorField::constant(std::move(ch), Shape{0, 2, 0}, e, "euclidean"),
                     MetricSignature::Riemannian);
}

// round sphere of radius r, coordinates (theta, phi)
inline MetricField sphere_metric(double r, double pole_margin = 0.05) {
  Chart ch("sphere", {pole_margin, 0.0}, {M_PI - pole_margin, 2 * M_PI});
  ch.periodic = {false, true};
  return MetricField(TensorField::exact(
                         std::move(ch), Shape{0, 2, 0},
                         [r](auto x, auto out) {
                           using S = std::remove_cvref_t<decltype(out[0])>;
                           S st = sin(x[0]);
                           out[0] = S(r * r);
                           out[1] = S(0.0);
                           out[2] = S(0.0);
                           out[3] = r * r * st * st;
                         },
                         "sphere-r" + std::to_string(r)),
                     MetricSignature::Riemannian);
}

// Schwarzschild exterior in (t, r, theta, phi), mass m
inline MetricField schwarzschild_metric(double m, double r_lo, double r_hi, double t_hi = 1.0,
                                        double pole_margin = 0.05) {
  Chart ch("schwarzschild", {0.0, r_lo, pole_margin, 0.0},
           {t_hi, r_hi, M_PI - pole_margin, 2 * M_PI});
  ch.periodic = {false, false, false, true};
  return MetricField(TensorField::exact(
                         std::move(ch), Shape{0, 2, 0},
                         [m](auto x, auto out) {
                           using S = std::remove_cvref_t<decltype(out[0])>;
                           for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
                           S f = 1.0 - 2.0 * m / x[1];
                           S st = sin(x[2]);
                           out[0 * 4 + 0] = -f;
                           out[1 * 4 + 1] = 1.0 / f;
                           out[2 * 4 + 2] = x[1] * x[1];
                           out[3 * 4 + 3] = x[1] * x[1] * st * st;
                         },
                         "schwarzschild-m" + std::to_string(m)),
                     MetricSignature::Lorentzian);
}

// spatially flat FRW with scale factor a(t) = (t/t0)^n
inline MetricField frw_metric(double t0, double n, Chart ch, std::string name) {
  return MetricField(TensorField::exact(
                         std::move(ch), Shape{0, 2, 0},
                         [t0, n](auto x, auto out) {
                           using S = std::remove_cvref_t<decltype(out[0])>;
                           for (std::size_t i = 0; i < out.size(); ++i) out[i] = S(0.0);
                           S a = pow(x[0] / t0, n);
                           out[0] = S(-1.0);
                           out[1 * 4 + 1] = a * a;
                           out[2 * 4 + 2] = a * a;
                           out[3 * 4 + 3] = a * a;
                         },
                         std::move(name)),
                     MetricSignature::Lorentzian);
}

}  // namespace relcont
