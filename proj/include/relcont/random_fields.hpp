#pragma once

// Seeded random smooth fields: low-order trig polynomials with coefficients
// drawn from a fixed-width stream. The double extraction below is pinned so
// reports stay byte-identical across platforms.

#include <cstdint>
#include <random>
#include <vector>

#include "relcont/tensor.hpp"

namespace relcont {

struct RandomStream {
  std::mt19937_64 eng;
  explicit RandomStream(std::uint64_t seed) : eng(seed) {}

  double uniform() { return double(eng() >> 11) * 0x1.0p-53; }  // [0, 1)
  double sym() { return 2.0 * uniform() - 1.0; }
  int integer(int lo, int hi) {  // inclusive
    int n = hi - lo + 1;
    int v = int(uniform() * n);
    return lo + (v >= n ? n - 1 : v);
  }
  RandomStream fork() { return RandomStream(eng()); }
};

struct TrigPoly {
  struct Term {
    double amp;
    std::vector<double> omega;
    double phase;
  };
  double offset = 0.0;
  std::vector<Term> terms;

  template <class S>
  S operator()(std::span<const S> x) const {
    S r = S(offset);
    for (const auto& t : terms) {
      S arg = S(t.phase);
      for (std::size_t i = 0; i < t.omega.size(); ++i) arg = arg + t.omega[i] * x[i];
      r = r + t.amp * sin(arg);
    }
    return r;
  }
};

inline TrigPoly make_trig_poly(const Chart& ch, RandomStream& rng, double amp, int nterms = 3,
                               int max_freq = 2, double offset = 0.0) {
  TrigPoly p;
  p.offset = offset;
  int d = ch.dim();
  for (int k = 0; k < nterms; ++k) {
    TrigPoly::Term t;
    t.amp = amp * rng.sym();
    t.phase = 2 * M_PI * rng.uniform();
    t.omega.resize(d);
    for (int i = 0; i < d; ++i)
      t.omega[i] = rng.integer(0, max_freq) * M_PI / ch.extent(i);
    p.terms.push_back(std::move(t));
  }
  return p;
}

inline TensorField random_tensor_field(const Chart& ch, Shape sh, RandomStream& rng, double amp,
                                       std::string name, double offset = 0.0) {
  std::size_t nc = sh.ncomp(ch.dim());
  std::vector<TrigPoly> comps;
  comps.reserve(nc);
  for (std::size_t i = 0; i < nc; ++i) comps.push_back(make_trig_poly(ch, rng, amp, 3, 2, offset));
  return TensorField::exact(
      ch, sh,
      [comps](auto x, auto out) {
        for (std::size_t i = 0; i < comps.size(); ++i) out[i] = comps[i](x);
      },
      std::move(name));
}

inline TensorField random_vector_field(const Chart& ch, RandomStream& rng, double amp,
                                       std::string name) {
  return random_tensor_field(ch, Shape{1, 0, 0}, rng, amp, std::move(name));
}

// symmetric (0,2), zero weight; suited for metric perturbations
inline TensorField random_symmetric_field(const Chart& ch, RandomStream& rng, double amp,
                                          std::string name) {
  int d = ch.dim();
  std::vector<TrigPoly> tri;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) tri.push_back(make_trig_poly(ch, rng, amp));
  return TensorField::exact(
      ch, Shape{0, 2, 0},
      [tri, d](auto x, auto out) {
        int k = 0;
        for (int i = 0; i < d; ++i)
          for (int j = i; j < d; ++j) {
            auto v = tri[k++](x);
            out[i * d + j] = v;
            out[j * d + i] = v;
          }
      },
      std::move(name));
}

// a compactly-supported bump profile: exp(-1/(1-r^2)) rescaled, zero outside.
// Smooth and exactly zero near the chart boundary; used for boundary-clean
// variations. center/halfwidth are per-axis in chart coordinates.
inline TensorField bump_scalar_field(const Chart& ch, std::vector<double> center,
                                     std::vector<double> halfwidth, std::string name) {
  int d = ch.dim();
  return TensorField::exact(
      ch, Shape{0, 0, 0},
      [center, halfwidth, d](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        S r2 = S(0.0);
        for (int i = 0; i < d; ++i) {
          S t = (x[i] - center[i]) / halfwidth[i];
          r2 = r2 + t * t;
        }
        if (primal(r2) >= 1.0 - 1e-12) {
          out[0] = S(0.0);
          return;
        }
        out[0] = exp(1.0 - 1.0 / (1.0 - r2));
      },
      std::move(name));
}

}  // namespace relcont
