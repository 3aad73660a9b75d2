#include <cmath>
#include <map>
#include <mutex>
#include <vector>

#include "relcont/linalg.hpp"

namespace relcont {

namespace {

void compute_gl(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess, then Newton on P_n
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (t * p1 - p0) / (t * t - 1.0);
      double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-15) break;
    }
    double p0 = 1.0, p1 = t;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (t * p1 - p0) / (t * t - 1.0);
    x[n - 1 - i] = t;
    w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
}

std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
std::mutex cache_mtx;

}  // namespace

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  std::lock_guard lk(cache_mtx);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::pair<std::vector<double>, std::vector<double>> e;
    compute_gl(n, e.first, e.second);
    it = cache.emplace(n, std::move(e)).first;
  }
  x = it->second.first;
  w = it->second.second;
}

}  // namespace relcont
