#pragma once

// Dense tensor fields over a chart. A field carries evaluators at four scalar
// depths (double and three nested dual levels); closed-form fields get exact
// derivatives, black-box fields get a 4th-order finite-difference lift up to
// second order. Component layout is row-major over (upper..., lower...).

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "relcont/chart.hpp"
#include "relcont/dual.hpp"
#include "relcont/error.hpp"
#include "relcont/linalg.hpp"

namespace relcont {

struct Shape {
  int p = 0;       // contravariant slots
  int q = 0;       // covariant slots
  int weight = 0;  // 0 or 1

  int rank() const { return p + q; }
  std::size_t ncomp(int dim) const { return ipow(std::size_t(dim), std::size_t(rank())); }
  bool operator==(const Shape&) const = default;
};

enum class DerivMode { Exact, FiniteDiff };

inline const char* to_string(DerivMode m) {
  return m == DerivMode::Exact ? "exact" : "finite-diff";
}

template <class S>
constexpr int dual_depth() {
  if constexpr (std::is_same_v<S, double>) return 0;
  else if constexpr (std::is_same_v<S, D1>) return 1;
  else if constexpr (std::is_same_v<S, D2>) return 2;
  else if constexpr (std::is_same_v<S, D3>) return 3;
  else return 4;  // instantiated by generic composition, never evaluated
}

template <class S>
using EvalFn = std::function<void(std::span<const S>, std::span<S>)>;

class TensorField {
  struct Impl {
    Chart chart;
    Shape shape;
    DerivMode mode = DerivMode::Exact;
    int max_depth = 3;
    double margin = 0.0;  // stencil clearance from the chart boundary
    double fd_h = 0.0;
    std::string name;
    EvalFn<double> f0;
    EvalFn<D1> f1;
    EvalFn<D2> f2;
    EvalFn<D3> f3;
  };
  std::shared_ptr<const Impl> im_;

  explicit TensorField(std::shared_ptr<const Impl> im) : im_(std::move(im)) {}

  template <class S>
  static void check_point(const Impl& im, std::span<const S> x) {
    std::array<double, 8> buf{};
    int d = im.chart.dim();
    for (int i = 0; i < d && i < 8; ++i) buf[i] = primal(x[i]);
    im.chart.require_inside(std::span<const double>(buf.data(), x.size()), im.margin,
                            "field '" + im.name + "'");
  }

 public:
  TensorField() = default;

  const Chart& chart() const { return im_->chart; }
  const Shape& shape() const { return im_->shape; }
  DerivMode mode() const { return im_->mode; }
  int max_depth() const { return im_->max_depth; }
  double fd_step() const { return im_->fd_h; }
  double boundary_margin() const { return im_->margin; }
  const std::string& name() const { return im_->name; }
  int dim() const { return im_->chart.dim(); }
  std::size_t ncomp() const { return im_->shape.ncomp(dim()); }
  bool valid() const { return im_ != nullptr; }

  template <class S>
  void eval(std::span<const S> x, std::span<S> out) const {
    constexpr int depth = dual_depth<S>();
    const Impl& im = *im_;
    if (depth > im.max_depth)
      throw Error("field '" + im.name + "' supplies derivatives up to order " +
                  std::to_string(im.max_depth) + ", order " + std::to_string(depth) +
                  " requested");
    check_point<S>(im, x);
    if constexpr (depth == 0) im.f0(x, out);
    else if constexpr (depth == 1) im.f1(x, out);
    else if constexpr (depth == 2) im.f2(x, out);
    else if constexpr (depth == 3) im.f3(x, out);
    else throw Error("derivative depth beyond the supported nesting");
  }

  template <class S>
  std::vector<S> operator()(std::span<const S> x) const {
    std::vector<S> out(ncomp());
    eval<S>(x, std::span<S>(out));
    return out;
  }
  std::vector<double> at(std::span<const double> x) const { return (*this)(x); }

  // ∂_axis of every component
  std::vector<double> partial(std::span<const double> x, int axis) const {
    int d = dim();
    if (axis < 0 || axis >= d)
      throw ConfigError("field '" + name() + "': derivative axis " + std::to_string(axis) +
                        " out of range");
    std::vector<D1> xs(d);
    for (int i = 0; i < d; ++i) xs[i] = D1{x[i], i == axis ? 1.0 : 0.0};
    std::vector<D1> o(ncomp());
    eval<D1>(xs, o);
    std::vector<double> r(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) r[i] = o[i].b;
    return r;
  }

  // layout [axis][component]
  std::vector<double> partial_all(std::span<const double> x) const {
    int d = dim();
    std::size_t nc = ncomp();
    std::vector<double> r(d * nc);
    for (int a = 0; a < d; ++a) {
      auto pa = partial(x, a);
      std::copy(pa.begin(), pa.end(), r.begin() + a * nc);
    }
    return r;
  }

  std::vector<double> partial2(std::span<const double> x, int ax1, int ax2) const {
    int d = dim();
    std::vector<D2> xs(d);
    for (int i = 0; i < d; ++i)
      xs[i] = D2{D1{x[i], i == ax2 ? 1.0 : 0.0}, D1{i == ax1 ? 1.0 : 0.0, 0.0}};
    std::vector<D2> o(ncomp());
    eval<D2>(xs, o);
    std::vector<double> r(o.size());
    for (std::size_t i = 0; i < o.size(); ++i) r[i] = o[i].b.b;
    return r;
  }

  // ---- factories ----

  // F is a generic callable f(std::span<const S> x, std::span<S> out)
  template <class F>
  static TensorField exact(Chart chart, Shape shape, F f, std::string name) {
    auto im = std::make_shared<Impl>();
    im->chart = std::move(chart);
    im->shape = shape;
    im->mode = DerivMode::Exact;
    im->max_depth = 3;
    im->name = std::move(name);
    im->f0 = [f](std::span<const double> x, std::span<double> out) { f(x, out); };
    im->f1 = [f](std::span<const D1> x, std::span<D1> out) { f(x, out); };
    im->f2 = [f](std::span<const D2> x, std::span<D2> out) { f(x, out); };
    im->f3 = [f](std::span<const D3> x, std::span<D3> out) { f(x, out); };
    return TensorField(std::move(im));
  }

  // F0 is double-only; derivatives come from 4th-order central stencils
  template <class F0>
  static TensorField finite_diff(Chart chart, Shape shape, F0 f, std::string name,
                                 double h = 0.0) {
    auto im = std::make_shared<Impl>();
    if (h <= 0) h = 1e-4 * chart.scale();
    im->chart = std::move(chart);
    im->shape = shape;
    im->mode = DerivMode::FiniteDiff;
    im->max_depth = 2;
    im->fd_h = h;
    im->margin = 2.0 * h * (1 + 1e-9);
    im->name = std::move(name);
    int dim = im->chart.dim();
    std::size_t nc = shape.ncomp(dim);

    im->f0 = [f](std::span<const double> x, std::span<double> out) { f(x, out); };

    auto sample = [f, dim, nc](const double* a, const double* u, double s,
                               std::vector<double>& out) {
      std::vector<double> p(dim);
      for (int i = 0; i < dim; ++i) p[i] = a[i] + s * u[i];
      out.assign(nc, 0.0);
      f(std::span<const double>(p), std::span<double>(out));
    };

    // directional derivative along u (any magnitude), 4th order
    auto ddir = [sample, h, dim, nc](const double* a, const double* u,
                                     std::vector<double>& out) {
      double beta = 0;
      for (int i = 0; i < dim; ++i) beta = std::max(beta, std::abs(u[i]));
      out.assign(nc, 0.0);
      if (beta == 0) return;
      std::vector<double> un(dim);
      for (int i = 0; i < dim; ++i) un[i] = u[i] / beta;
      std::vector<double> m2, m1, p1, p2;
      sample(a, un.data(), -2 * h, m2);
      sample(a, un.data(), -h, m1);
      sample(a, un.data(), h, p1);
      sample(a, un.data(), 2 * h, p2);
      for (std::size_t c = 0; c < nc; ++c)
        out[c] = beta * (m2[c] - 8 * m1[c] + 8 * p1[c] - p2[c]) / (12 * h);
    };

    im->f1 = [ddir, f, dim, nc](std::span<const D1> x, std::span<D1> out) {
      std::vector<double> a(dim), b(dim);
      for (int i = 0; i < dim; ++i) {
        a[i] = x[i].a;
        b[i] = x[i].b;
      }
      std::vector<double> v(nc), d;
      f(std::span<const double>(a), std::span<double>(v));
      ddir(a.data(), b.data(), d);
      for (std::size_t c = 0; c < nc; ++c) out[c] = D1{v[c], d[c]};
    };

    // cross second derivative with one Richardson step: O(h^4)
    auto dcross = [sample, h, dim, nc](const double* a, const double* u, const double* v,
                                       std::vector<double>& out) {
      double bu = 0, bv = 0;
      for (int i = 0; i < dim; ++i) {
        bu = std::max(bu, std::abs(u[i]));
        bv = std::max(bv, std::abs(v[i]));
      }
      out.assign(nc, 0.0);
      if (bu == 0 || bv == 0) return;
      std::vector<double> up(dim), vp(dim), sum(dim), dif(dim);
      for (int i = 0; i < dim; ++i) {
        up[i] = u[i] / bu;
        vp[i] = v[i] / bv;
        sum[i] = up[i] + vp[i];
        dif[i] = up[i] - vp[i];
      }
      auto cross_at = [&](double s, std::vector<double>& r) {
        std::vector<double> pp, pm, mp, mm;
        sample(a, sum.data(), s, pp);
        sample(a, dif.data(), s, pm);
        sample(a, dif.data(), -s, mp);
        sample(a, sum.data(), -s, mm);
        r.resize(nc);
        for (std::size_t c = 0; c < nc; ++c) r[c] = (pp[c] - pm[c] - mp[c] + mm[c]) / (4 * s * s);
      };
      std::vector<double> ch, ch2;
      cross_at(h, ch);
      cross_at(h / 2, ch2);
      for (std::size_t c = 0; c < nc; ++c) out[c] = bu * bv * (4 * ch2[c] - ch[c]) / 3.0;
    };

    im->f2 = [ddir, dcross, f, dim, nc](std::span<const D2> x, std::span<D2> out) {
      std::vector<double> a(dim), b(dim), c(dim), d(dim);
      for (int i = 0; i < dim; ++i) {
        a[i] = x[i].a.a;
        c[i] = x[i].a.b;
        b[i] = x[i].b.a;
        d[i] = x[i].b.b;
      }
      std::vector<double> v(nc), db, dc, dd, hbc;
      f(std::span<const double>(a), std::span<double>(v));
      ddir(a.data(), b.data(), db);
      ddir(a.data(), c.data(), dc);
      ddir(a.data(), d.data(), dd);
      dcross(a.data(), b.data(), c.data(), hbc);
      for (std::size_t k = 0; k < nc; ++k)
        out[k] = D2{D1{v[k], dc[k]}, D1{db[k], hbc[k] + dd[k]}};
    };

    std::string nm = im->name;
    im->f3 = [nm](std::span<const D3>, std::span<D3>) {
      throw Error("field '" + nm + "': third derivatives unavailable in finite-diff mode");
    };
    return TensorField(std::move(im));
  }

  // Composite of other fields; `deps` fix mode and derivative depth,
  // `depth_cost` is how many derivative levels F consumes internally.
  template <class F>
  static TensorField derived(Chart chart, Shape shape, const std::vector<TensorField>& deps,
                             F f, std::string name, int depth_cost = 0) {
    auto im = std::make_shared<Impl>();
    im->chart = std::move(chart);
    im->shape = shape;
    im->mode = DerivMode::Exact;
    im->max_depth = 3;
    im->name = std::move(name);
    for (const auto& dep : deps) {
      if (dep.mode() == DerivMode::FiniteDiff) im->mode = DerivMode::FiniteDiff;
      im->max_depth = std::min(im->max_depth, dep.max_depth());
      im->margin = std::max(im->margin, dep.boundary_margin());
      im->fd_h = std::max(im->fd_h, dep.fd_step());
    }
    im->max_depth -= depth_cost;
    if (im->max_depth < 0)
      throw ConfigError("field '" + im->name + "': dependencies too shallow for composition");
    im->f0 = [f](std::span<const double> x, std::span<double> out) { f(x, out); };
    im->f1 = [f](std::span<const D1> x, std::span<D1> out) { f(x, out); };
    im->f2 = [f](std::span<const D2> x, std::span<D2> out) { f(x, out); };
    im->f3 = [f](std::span<const D3> x, std::span<D3> out) { f(x, out); };
    return TensorField(std::move(im));
  }

  static TensorField constant(Chart chart, Shape shape, std::vector<double> comps,
                              std::string name) {
    std::size_t nc = shape.ncomp(chart.dim());
    if (comps.size() != nc)
      throw ConfigError("field '" + name + "': expected " + std::to_string(nc) +
                        " components, got " + std::to_string(comps.size()));
    return exact(
        std::move(chart), shape,
        [comps](auto /*x*/, auto out) {
          for (std::size_t i = 0; i < comps.size(); ++i) out[i] = comps[i];
        },
        std::move(name));
  }

  // re-wrap as a black box: only the double evaluator survives
  static TensorField as_finite_diff(const TensorField& src, double h = 0.0) {
    TensorField s = src;
    return finite_diff(
        s.chart(), s.shape(),
        [s](std::span<const double> x, std::span<double> out) { s.eval<double>(x, out); },
        s.name() + "#fd", h);
  }
};

template <class S>
std::vector<S> eval_at(const TensorField& f, std::span<const S> x) {
  return f(x);
}

}  // namespace relcont
