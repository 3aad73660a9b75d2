#pragma once

// Lie derivatives of tensor densities, the index-shuffle "hat" extension, and
// the matched divergence operators. The hat of a (p,q) density is the
// (p+1,q+1) density whose contraction with ∂ζ (or ∇ζ) collects every
// non-transport term of £_ζ, weight term included:
//
//   k̂^{a⃗ ν}_{b⃗ μ} = Σ_s k^{a⃗}_{b1..μ@s..bq} δ^ν_{b_s}
//                   - Σ_r k^{a1..ν@r..ap}_{b⃗} δ^{a_r}_μ
//                   + w k^{a⃗}_{b⃗} δ^ν_μ

#include <vector>

#include "relcont/metric.hpp"
#include "relcont/tensor.hpp"

namespace relcont {

template <class S>
std::vector<S> hat_components(int dim, Shape sh, std::span<const S> k) {
  int p = sh.p, q = sh.q;
  std::vector<S> out(ipow(dim, p + q + 2), S(0.0));
  std::array<int, 8> kidx{};
  for_each_index(dim, p + q + 2, [&](const int* idx) {
    const int* alpha = idx;        // p entries
    int nu = idx[p];
    const int* beta = idx + p + 1;  // q entries
    int mu = idx[p + 1 + q];
    S acc = S(0.0);
    for (int s = 0; s < q; ++s) {
      if (beta[s] != nu) continue;
      for (int r = 0; r < p; ++r) kidx[r] = alpha[r];
      for (int t = 0; t < q; ++t) kidx[p + t] = (t == s ? mu : beta[t]);
      acc = acc + k[flat_index(kidx.data(), p + q, dim)];
    }
    for (int r = 0; r < p; ++r) {
      if (alpha[r] != mu) continue;
      for (int t = 0; t < p; ++t) kidx[t] = (t == r ? nu : alpha[t]);
      for (int t = 0; t < q; ++t) kidx[p + t] = beta[t];
      acc = acc - k[flat_index(kidx.data(), p + q, dim)];
    }
    if (sh.weight != 0 && nu == mu) {
      for (int r = 0; r < p; ++r) kidx[r] = alpha[r];
      for (int t = 0; t < q; ++t) kidx[p + t] = beta[t];
      acc = acc + double(sh.weight) * k[flat_index(kidx.data(), p + q, dim)];
    }
    out[flat_index(idx, p + q + 2, dim)] = acc;
  });
  return out;
}

// £_ζ k from components; dk layout [γ][comp], dz layout [ν][μ] = ∂_ν ζ^μ.
// Written as explicit shuffles, independent of hat_components, so the two
// can check each other.
template <class S>
std::vector<S> lie_components(int dim, Shape sh, std::span<const S> k, std::span<const S> dk,
                              std::span<const S> zeta, std::span<const S> dz) {
  int p = sh.p, q = sh.q, rank = p + q;
  std::size_t nc = sh.ncomp(dim);
  std::vector<S> out(nc, S(0.0));
  std::array<int, 8> kidx{};
  S divz = S(0.0);
  for (int g = 0; g < dim; ++g) divz = divz + dz[g * dim + g];
  for_each_index(dim, rank, [&](const int* idx) {
    std::size_t f = flat_index(idx, rank, dim);
    S acc = S(0.0);
    for (int g = 0; g < dim; ++g) acc = acc + zeta[g] * dk[g * nc + f];
    for (int r = 0; r < p; ++r) {
      for (int t = 0; t < rank; ++t) kidx[t] = idx[t];
      for (int g = 0; g < dim; ++g) {
        kidx[r] = g;
        acc = acc - k[flat_index(kidx.data(), rank, dim)] * dz[g * dim + idx[r]];
      }
    }
    for (int s = 0; s < q; ++s) {
      for (int t = 0; t < rank; ++t) kidx[t] = idx[t];
      for (int g = 0; g < dim; ++g) {
        kidx[p + s] = g;
        acc = acc + k[flat_index(kidx.data(), rank, dim)] * dz[idx[p + s] * dim + g];
      }
    }
    if (sh.weight != 0) acc = acc + double(sh.weight) * k[f] * divz;
    out[f] = acc;
  });
  return out;
}

// ∇_σ T from components; same layouts as above. gamma is [λ][μ][ν].
template <class S>
std::vector<S> covariant_derivative_components(int dim, Shape sh, std::span<const S> k,
                                               std::span<const S> dk,
                                               std::span<const S> gamma) {
  int p = sh.p, q = sh.q, rank = p + q;
  std::size_t nc = sh.ncomp(dim);
  std::vector<S> out(dim * nc, S(0.0));
  std::array<int, 8> kidx{};
  auto G = [&](int l, int m, int n) -> const S& { return gamma[(l * dim + m) * dim + n]; };
  std::vector<S> gtrace(dim, S(0.0));  // Γ^γ_{γσ}
  for (int s = 0; s < dim; ++s) {
    S t = S(0.0);
    for (int g = 0; g < dim; ++g) t = t + G(g, g, s);
    gtrace[s] = t;
  }
  for (int sig = 0; sig < dim; ++sig) {
    for_each_index(dim, rank, [&](const int* idx) {
      std::size_t f = flat_index(idx, rank, dim);
      S acc = dk[sig * nc + f];
      for (int r = 0; r < p; ++r) {
        for (int t = 0; t < rank; ++t) kidx[t] = idx[t];
        for (int g = 0; g < dim; ++g) {
          kidx[r] = g;
          acc = acc + G(idx[r], sig, g) * k[flat_index(kidx.data(), rank, dim)];
        }
      }
      for (int s = 0; s < q; ++s) {
        for (int t = 0; t < rank; ++t) kidx[t] = idx[t];
        for (int g = 0; g < dim; ++g) {
          kidx[p + s] = g;
          acc = acc - G(g, sig, idx[p + s]) * k[flat_index(kidx.data(), rank, dim)];
        }
      }
      if (sh.weight != 0) acc = acc - double(sh.weight) * gtrace[sig] * k[f];
      out[sig * nc + f] = acc;
    });
  }
  return out;
}

// full contraction of a (p,q) density k with its (q,p) conjugate pi
template <class S>
S full_contraction(int dim, Shape sh, std::span<const S> k, std::span<const S> pi) {
  int rank = sh.rank();
  S acc = S(0.0);
  std::array<int, 8> pidx{};
  for_each_index(dim, rank, [&](const int* idx) {
    // pi's slots mirror k's: upper <-> lower, same order
    for (int r = 0; r < sh.p; ++r) pidx[sh.q + r] = idx[r];
    for (int s = 0; s < sh.q; ++s) pidx[s] = idx[sh.p + s];
    acc = acc + k[flat_index(idx, rank, dim)] * pi[flat_index(pidx.data(), rank, dim)];
  });
  return acc;
}

// (pi : k_hat)^ν_μ, the (1,1) density entering the contraction identity
template <class S>
std::vector<S> pi_hat_contraction(int dim, Shape ksh, std::span<const S> khat,
                                  std::span<const S> pi) {
  std::vector<S> out(dim * dim, S(0.0));
  int p = ksh.p, q = ksh.q;
  std::array<int, 8> hidx{}, pidx{};
  for (int nu = 0; nu < dim; ++nu)
    for (int mu = 0; mu < dim; ++mu) {
      S acc = S(0.0);
      for_each_index(dim, p + q, [&](const int* idx) {
        for (int r = 0; r < p; ++r) {
          hidx[r] = idx[r];
          pidx[q + r] = idx[r];
        }
        hidx[p] = nu;
        for (int s = 0; s < q; ++s) {
          hidx[p + 1 + s] = idx[p + s];
          pidx[s] = idx[p + s];
        }
        hidx[p + 1 + q] = mu;
        acc = acc + pi[flat_index(pidx.data(), p + q, dim)] *
                        khat[flat_index(hidx.data(), p + q + 2, dim)];
      });
      out[nu * dim + mu] = acc;
    }
  return out;
}

// ---- field-level wrappers ----

namespace detail {

template <class S>
void eval_with_partials(const TensorField& f, std::span<const S> x, std::vector<S>& val,
                        std::vector<S>& dval) {
  using SS = Dual<S>;
  int d = f.dim();
  std::size_t nc = f.ncomp();
  val.resize(nc);
  dval.resize(d * nc);
  std::vector<SS> xs(d), o(nc);
  for (int a = 0; a < d; ++a) {
    for (int i = 0; i < d; ++i) xs[i] = SS{x[i], S(i == a ? 1.0 : 0.0)};
    f.eval<SS>(xs, o);
    for (std::size_t c = 0; c < nc; ++c) {
      dval[a * nc + c] = o[c].b;
      if (a == 0) val[c] = o[c].a;
    }
  }
}

}  // namespace detail

template <class S>
std::vector<S> lie_derivative_at(const TensorField& k, const TensorField& zeta,
                                 std::span<const S> x) {
  int d = k.dim();
  std::vector<S> kv, dk, zv, dz;
  detail::eval_with_partials<S>(k, x, kv, dk);
  detail::eval_with_partials<S>(zeta, x, zv, dz);
  return lie_components<S>(d, k.shape(), kv, dk, zv, dz);
}

inline TensorField lie_derivative_field(const TensorField& k, const TensorField& zeta,
                                        std::string name = "") {
  if (name.empty()) name = "lie(" + zeta.name() + ", " + k.name() + ")";
  return TensorField::derived(
      k.chart(), k.shape(), {k, zeta},
      [k, zeta](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        auto r = lie_derivative_at<S>(k, zeta, x);
        for (std::size_t i = 0; i < r.size(); ++i) out[i] = r[i];
      },
      std::move(name), 1);
}

inline TensorField hat_field(const TensorField& k) {
  Shape hsh{k.shape().p + 1, k.shape().q + 1, k.shape().weight};
  return TensorField::derived(
      k.chart(), hsh, {k},
      [k](auto x, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> kv(k.ncomp());
        k.eval(x, std::span<S>(kv));
        auto h = hat_components<S>(k.dim(), k.shape(), std::span<const S>(kv));
        for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i];
      },
      k.name() + "^", 0);
}

// divergence over the first contravariant slot; densities of weight 1 with
// a flat connection give the canonical coordinate divergence
template <class S>
std::vector<S> divergence_at(const TensorField& T, const Connection& conn,
                             std::span<const S> x) {
  Shape sh = T.shape();
  if (sh.p < 1) throw StateError("divergence needs at least one contravariant slot on '" +
                                 T.name() + "'");
  int d = T.dim();
  std::vector<S> tv, dt;
  detail::eval_with_partials<S>(T, x, tv, dt);
  auto gamma = conn.christoffel<S>(x);
  auto grad = covariant_derivative_components<S>(d, sh, tv, dt, gamma);
  Shape osh{sh.p - 1, sh.q, sh.weight};
  std::size_t onc = osh.ncomp(d), nc = sh.ncomp(d);
  std::vector<S> out(onc, S(0.0));
  std::array<int, 8> tidx{};
  for_each_index(d, osh.rank(), [&](const int* idx) {
    S acc = S(0.0);
    for (int m = 0; m < d; ++m) {
      tidx[0] = m;
      for (int t = 0; t < osh.rank(); ++t) tidx[t + 1] = idx[t];
      acc = acc + grad[m * nc + flat_index(tidx.data(), sh.rank(), d)];
    }
    out[flat_index(idx, osh.rank(), d)] = acc;
  });
  return out;
}

inline double coordinate_divergence(const TensorField& X, std::span<const double> x) {
  if (X.shape().p != 1 || X.shape().q != 0)
    throw StateError("coordinate divergence expects a vector field, got '" + X.name() + "'");
  double acc = 0;
  int d = X.dim();
  for (int a = 0; a < d; ++a) acc += X.partial(x, a)[a];
  return acc;
}

// ---- contraction identity ----

struct ContractionIdentityCheck {
  double lhs = 0;            // (£_ζ k) · π
  double rhs_partial = 0;    // coordinate-divergence form
  double rhs_covariant = 0;  // covariant form
  double residual_partial = 0;
  double residual_covariant = 0;
};

inline ContractionIdentityCheck contraction_identity_check(const TensorField& k,
                                                           const TensorField& pi,
                                                           const TensorField& zeta,
                                                           const Connection& conn,
                                                           std::span<const double> x) {
  int d = k.dim();
  Shape ksh = k.shape();
  if (pi.shape().p != ksh.q || pi.shape().q != ksh.p)
    throw StateError("conjugate field '" + pi.name() + "' valence mismatch against '" +
                     k.name() + "'");
  if (ksh.weight + pi.shape().weight != 1)
    throw StateError("contraction identity needs total weight 1, got " +
                     std::to_string(ksh.weight + pi.shape().weight));

  // A = (π : k̂), weight 1 by the precondition above
  auto A = TensorField::derived(
      k.chart(), Shape{1, 1, 1}, {k, pi},
      [k, pi](auto xx, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        std::vector<S> kv(k.ncomp()), pv(pi.ncomp());
        k.eval(xx, std::span<S>(kv));
        pi.eval(xx, std::span<S>(pv));
        auto khat = hat_components<S>(k.dim(), k.shape(), std::span<const S>(kv));
        auto a = pi_hat_contraction<S>(k.dim(), k.shape(), std::span<const S>(khat),
                                       std::span<const S>(pv));
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i];
      },
      "(pi:k-hat)", 0);
  auto Az = TensorField::derived(
      k.chart(), Shape{1, 0, 1}, {A, zeta},
      [A, zeta](auto xx, auto out) {
        using S = std::remove_cvref_t<decltype(out[0])>;
        int dd = A.dim();
        std::vector<S> av(dd * dd), zv(dd);
        A.eval(xx, std::span<S>(av));
        zeta.eval(xx, std::span<S>(zv));
        for (int n = 0; n < dd; ++n) {
          S acc = S(0.0);
          for (int m = 0; m < dd; ++m) acc = acc + av[n * dd + m] * zv[m];
          out[n] = acc;
        }
      },
      "(pi:k-hat)zeta", 0);

  ContractionIdentityCheck r;
  auto lie = lie_derivative_at<double>(k, zeta, x);
  auto pv = pi.at(x);
  r.lhs = full_contraction<double>(d, ksh, lie, pv);

  std::vector<double> kv, dk, zv, dz;
  detail::eval_with_partials<double>(k, x, kv, dk);
  detail::eval_with_partials<double>(zeta, x, zv, dz);

  // coordinate form: ζ^μ (∂_μ k · π - ∂_ν A^ν_μ) + ∂_ν (A ζ)^ν
  std::size_t nc = ksh.ncomp(d);
  auto dA = A.partial_all(x);
  double divAz = coordinate_divergence(Az, x);
  double acc = divAz;
  for (int mu = 0; mu < d; ++mu) {
    double dkpi = full_contraction<double>(
        d, ksh, std::span<const double>(dk.data() + mu * nc, nc), pv);
    double divA_mu = 0;
    for (int nu = 0; nu < d; ++nu) divA_mu += dA[nu * d * d + nu * d + mu];
    acc += zv[mu] * (dkpi - divA_mu);
  }
  r.rhs_partial = acc;

  // covariant form: ζ^μ ((∇_μ k) · π - (div^∇ A)_μ) + div (A ζ)
  auto gamma = conn.christoffel<double>(x);
  auto gradk = covariant_derivative_components<double>(d, ksh, kv, dk, gamma);
  auto divA = divergence_at<double>(A, conn, x);
  double acc2 = divAz;
  for (int mu = 0; mu < d; ++mu) {
    double nkpi = full_contraction<double>(
        d, ksh, std::span<const double>(gradk.data() + mu * nc, nc), pv);
    acc2 += zv[mu] * (nkpi - divA[mu]);
  }
  r.rhs_covariant = acc2;

  r.residual_partial = std::abs(r.lhs - r.rhs_partial);
  r.residual_covariant = std::abs(r.lhs - r.rhs_covariant);
  return r;
}

}  // namespace relcont
