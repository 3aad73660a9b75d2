#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "relcont/error.hpp"

namespace relcont {

// A coordinate box: closed intervals per axis. Axes marked periodic are
// angular (quadrature stays interior, bounds checks wrap nothing).
struct Chart {
  std::string name;
  std::vector<double> lo, hi;
  std::vector<bool> periodic;

  Chart() = default;
  Chart(std::string n, std::vector<double> l, std::vector<double> h)
      : name(std::move(n)), lo(std::move(l)), hi(std::move(h)), periodic(lo.size(), false) {
    if (lo.size() != hi.size() || lo.empty())
      throw ConfigError("chart '" + name + "': mismatched or empty interval lists");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i]))
        throw ConfigError("chart '" + name + "': empty interval on axis " + std::to_string(i));
  }

  int dim() const { return static_cast<int>(lo.size()); }

  double extent(int axis) const { return hi[axis] - lo[axis]; }

  double scale() const {
    double s = 0;
    for (int i = 0; i < dim(); ++i) s = std::max(s, extent(i));
    return s;
  }

  bool contains(std::span<const double> x, double margin = 0.0) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) return false;
    return true;
  }

  void require_inside(std::span<const double> x, double margin, const std::string& who) const {
    if (static_cast<int>(x.size()) != dim())
      throw BoundsError(who + ": point dimension " + std::to_string(x.size()) +
                        " != chart dimension " + std::to_string(dim()));
    for (int i = 0; i < dim(); ++i) {
      if (x[i] < lo[i] + margin || x[i] > hi[i] - margin) {
        throw BoundsError(who + ": coordinate " + std::to_string(i) + " = " +
                          std::to_string(x[i]) + " outside [" + std::to_string(lo[i] + margin) +
                          ", " + std::to_string(hi[i] - margin) + "] of chart '" + name + "'");
      }
    }
  }
};

// tensor-product grid of points strictly inside the box
inline std::vector<std::vector<double>> interior_grid(const Chart& ch, int per_axis,
                                                      double margin_frac = 0.05) {
  int d = ch.dim();
  std::vector<std::vector<double>> pts;
  std::vector<int> idx(d, 0);
  for (;;) {
    std::vector<double> p(d);
    for (int i = 0; i < d; ++i) {
      double m = margin_frac * ch.extent(i);
      double a = ch.lo[i] + m, b = ch.hi[i] - m;
      p[i] = per_axis == 1 ? 0.5 * (a + b) : a + (b - a) * idx[i] / double(per_axis - 1);
    }
    pts.push_back(std::move(p));
    int k = d - 1;
    while (k >= 0 && ++idx[k] == per_axis) idx[k--] = 0;
    if (k < 0) break;
  }
  return pts;
}

}  // namespace relcont
