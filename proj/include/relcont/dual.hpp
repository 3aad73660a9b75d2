#pragma once

// Forward-mode scalars. Dual<T> nests, so Dual<Dual<double>> carries exact
// second derivatives and one more level carries thirds; curvature needs two
// metric derivatives and the contracted Bianchi test needs three.

#include <cmath>
#include <cstddef>

namespace relcont {

template <class T>
struct Dual {
  T a{};  // value
  T b{};  // derivative part

  constexpr Dual() = default;
  constexpr Dual(double v) : a(v), b() {}  // NOLINT: implicit promotion wanted
  constexpr Dual(const T& a_, const T& b_) : a(a_), b(b_) {}

  Dual& operator+=(const Dual& o) {
    a += o.a;
    b += o.b;
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    a -= o.a;
    b -= o.b;
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    b = a * o.b + b * o.a;
    a = a * o.a;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    b = (b * o.a - a * o.b) / (o.a * o.a);
    a = a / o.a;
    return *this;
  }
};

using D0 = double;
using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

inline double primal(double x) { return x; }
template <class T>
double primal(const Dual<T>& x) {
  return primal(x.a);
}

template <class T>
Dual<T> operator+(const Dual<T>& x, const Dual<T>& y) {
  return {x.a + y.a, x.b + y.b};
}
template <class T>
Dual<T> operator-(const Dual<T>& x, const Dual<T>& y) {
  return {x.a - y.a, x.b - y.b};
}
template <class T>
Dual<T> operator*(const Dual<T>& x, const Dual<T>& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a};
}
template <class T>
Dual<T> operator/(const Dual<T>& x, const Dual<T>& y) {
  return {x.a / y.a, (x.b * y.a - x.a * y.b) / (y.a * y.a)};
}
template <class T>
Dual<T> operator-(const Dual<T>& x) {
  return {-x.a, -x.b};
}
template <class T>
Dual<T> operator+(const Dual<T>& x) {
  return x;
}

template <class T>
Dual<T> operator+(const Dual<T>& x, double y) {
  return {x.a + y, x.b};
}
template <class T>
Dual<T> operator+(double x, const Dual<T>& y) {
  return {x + y.a, y.b};
}
template <class T>
Dual<T> operator-(const Dual<T>& x, double y) {
  return {x.a - y, x.b};
}
template <class T>
Dual<T> operator-(double x, const Dual<T>& y) {
  return {x - y.a, -y.b};
}
template <class T>
Dual<T> operator*(const Dual<T>& x, double y) {
  return {x.a * y, x.b * y};
}
template <class T>
Dual<T> operator*(double x, const Dual<T>& y) {
  return {x * y.a, x * y.b};
}
template <class T>
Dual<T> operator/(const Dual<T>& x, double y) {
  return {x.a / y, x.b / y};
}
template <class T>
Dual<T> operator/(double x, const Dual<T>& y) {
  return Dual<T>(x) / y;
}

using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;
using std::tan;

template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  T s = sqrt(x.a);
  return {s, x.b / (2.0 * s)};
}
template <class T>
Dual<T> sin(const Dual<T>& x) {
  return {sin(x.a), cos(x.a) * x.b};
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  return {cos(x.a), -(sin(x.a) * x.b)};
}
template <class T>
Dual<T> tan(const Dual<T>& x) {
  T c = cos(x.a);
  return {tan(x.a), x.b / (c * c)};
}
template <class T>
Dual<T> exp(const Dual<T>& x) {
  T e = exp(x.a);
  return {e, e * x.b};
}
template <class T>
Dual<T> log(const Dual<T>& x) {
  return {log(x.a), x.b / x.a};
}
template <class T>
Dual<T> pow(const Dual<T>& x, double p) {
  return {pow(x.a, p), p * pow(x.a, p - 1.0) * x.b};
}

inline double dabs(double x) { return x < 0 ? -x : x; }
template <class T>
Dual<T> dabs(const Dual<T>& x) {
  return primal(x) < 0 ? -x : x;
}

// comparisons act on primal values; enough for pivoting and damping
template <class T>
bool operator<(const Dual<T>& x, const Dual<T>& y) {
  return primal(x) < primal(y);
}
template <class T>
bool operator<(const Dual<T>& x, double y) {
  return primal(x) < y;
}
template <class T>
bool operator<(double x, const Dual<T>& y) {
  return x < primal(y);
}

}  // namespace relcont
