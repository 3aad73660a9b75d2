#pragma once

// Dense kernels for the tiny matrices (dim <= 4) this library lives on.
// Everything that runs inside dual-number arithmetic pivots on primal
// magnitude so the branch structure is independent of the seed parts.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "relcont/dual.hpp"
#include "relcont/error.hpp"

namespace relcont {

inline std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= base;
  return r;
}

template <class S>
S det_and_invert(int n, const S* A, S* Ainv, const char* what) {
  // Gauss-Jordan on [A | I]; throws SingularError with `what` on breakdown.
  std::vector<S> M(A, A + n * n);
  std::vector<S> I(n * n, S(0.0));
  for (int i = 0; i < n; ++i) I[i * n + i] = S(1.0);
  S det = S(1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = dabs(primal(M[col * n + col]));
    for (int r = col + 1; r < n; ++r) {
      double v = dabs(primal(M[r * n + col]));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (!(best > 1e-300)) throw SingularError(std::string("singular matrix: ") + what);
    if (piv != col) {
      for (int c = 0; c < n; ++c) {
        std::swap(M[piv * n + c], M[col * n + c]);
        std::swap(I[piv * n + c], I[col * n + c]);
      }
      det = -det;
    }
    S d = M[col * n + col];
    det = det * d;
    for (int c = 0; c < n; ++c) {
      M[col * n + c] = M[col * n + c] / d;
      I[col * n + c] = I[col * n + c] / d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      S f = M[r * n + col];
      for (int c = 0; c < n; ++c) {
        M[r * n + c] = M[r * n + c] - f * M[col * n + c];
        I[r * n + c] = I[r * n + c] - f * I[col * n + c];
      }
    }
  }
  if (Ainv) {
    for (int i = 0; i < n * n; ++i) Ainv[i] = I[i];
  }
  return det;
}

template <class S>
S determinant(int n, const S* A, const char* what) {
  return det_and_invert<S>(n, A, nullptr, what);
}

template <class S>
void solve_linear(int n, const S* A, const S* rhs, S* x, const char* what) {
  std::vector<S> Ai(n * n);
  det_and_invert<S>(n, A, Ai.data(), what);
  for (int i = 0; i < n; ++i) {
    S acc = S(0.0);
    for (int j = 0; j < n; ++j) acc = acc + Ai[i * n + j] * rhs[j];
    x[i] = acc;
  }
}

template <class S>
void mat_mul(int n, const S* A, const S* B, S* C) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      S acc = S(0.0);
      for (int k = 0; k < n; ++k) acc = acc + A[i * n + k] * B[k * n + j];
      C[i * n + j] = acc;
    }
}

template <class S>
S mat_trace(int n, const S* A) {
  S t = S(0.0);
  for (int i = 0; i < n; ++i) t = t + A[i * n + i];
  return t;
}

// cyclic Jacobi; A symmetric, destroyed. Rows of V are eigenvectors.
inline void jacobi_eigen(int n, std::vector<double> A, std::vector<double>& evals,
                         std::vector<double>& V) {
  V.assign(n * n, 0.0);
  for (int i = 0; i < n; ++i) V[i * n + i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += A[p * n + q] * A[p * n + q];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        double apq = A[p * n + q];
        if (std::abs(apq) < 1e-300) continue;
        double theta = (A[q * n + q] - A[p * n + p]) / (2 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = A[k * n + p], akq = A[k * n + q];
          A[k * n + p] = c * akp - s * akq;
          A[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = A[p * n + k], aqk = A[q * n + k];
          A[p * n + k] = c * apk - s * aqk;
          A[q * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vpk = V[p * n + k], vqk = V[q * n + k];
          V[p * n + k] = c * vpk - s * vqk;
          V[q * n + k] = s * vpk + c * vqk;
        }
      }
  }
  evals.resize(n);
  for (int i = 0; i < n; ++i) evals[i] = A[i * n + i];
}

// Moore-Penrose of a symmetric matrix, eigenvalues below `cut` treated as 0.
inline std::vector<double> sym_pseudo_inverse(int n, const std::vector<double>& A,
                                              double cut = 1e-10) {
  std::vector<double> evals, V;
  jacobi_eigen(n, A, evals, V);
  std::vector<double> P(n * n, 0.0);
  for (int k = 0; k < n; ++k) {
    if (std::abs(evals[k]) <= cut) continue;
    double w = 1.0 / evals[k];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) P[i * n + j] += w * V[k * n + i] * V[k * n + j];
  }
  return P;
}

inline std::vector<int> eigenvalue_signs(int n, const std::vector<double>& A) {
  std::vector<double> evals, V;
  jacobi_eigen(n, A, evals, V);
  std::vector<int> s(n);
  for (int i = 0; i < n; ++i) s[i] = evals[i] > 0 ? 1 : (evals[i] < 0 ? -1 : 0);
  return s;
}

// Gauss-Legendre nodes/weights on [-1, 1]; Newton on the Legendre recurrence.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// iterate over permutations of {0..n-1} with their sign
template <class F>
void for_each_permutation(int n, F&& f) {
  std::array<int, 8> p{};
  for (int i = 0; i < n; ++i) p[i] = i;
  // Heap's algorithm, tracking parity
  std::array<int, 8> c{};
  int sign = 1;
  f(p.data(), sign);
  int i = 0;
  while (i < n) {
    if (c[i] < i) {
      if (i % 2 == 0)
        std::swap(p[0], p[i]);
      else
        std::swap(p[c[i]], p[i]);
      sign = -sign;
      f(p.data(), sign);
      c[i]++;
      i = 0;
    } else {
      c[i] = 0;
      ++i;
    }
  }
}

// multi-index walk: fn(const int* idx) over all rank-tuples in {0..dim-1}^rank
template <class F>
void for_each_index(int dim, int rank, F&& fn) {
  std::array<int, 8> idx{};
  if (rank == 0) {
    fn(idx.data());
    return;
  }
  for (;;) {
    fn(idx.data());
    int k = rank - 1;
    while (k >= 0 && ++idx[k] == dim) idx[k--] = 0;
    if (k < 0) break;
  }
}

inline std::size_t flat_index(const int* idx, int rank, int dim) {
  std::size_t f = 0;
  for (int r = 0; r < rank; ++r) f = f * dim + idx[r];
  return f;
}

}  // namespace relcont
