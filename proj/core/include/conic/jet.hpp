#pragma once

// Second-order forward-mode jets in the two chart variables (r, theta).
// A Jet carries f, grad f and the symmetric Hessian; arithmetic follows the
// chain rule so metric coefficients built from jets come with their exact
// first and second derivatives.

#include <cmath>

namespace conic {

struct Jet {
  double v = 0.0;
  double dr = 0.0;
  double dt = 0.0;
  double drr = 0.0;
  double drt = 0.0;
  double dtt = 0.0;

  static Jet constant(double c) { return {c, 0, 0, 0, 0, 0}; }
  static Jet r_var(double r) { return {r, 1, 0, 0, 0, 0}; }
  static Jet theta_var(double t) { return {t, 0, 1, 0, 0, 0}; }
};

// Applies a scalar function with derivatives f0, f1, f2 at a.v.
inline Jet compose(const Jet& a, double f0, double f1, double f2) {
  return {f0,
          f1 * a.dr,
          f1 * a.dt,
          f1 * a.drr + f2 * a.dr * a.dr,
          f1 * a.drt + f2 * a.dr * a.dt,
          f1 * a.dtt + f2 * a.dt * a.dt};
}

inline Jet operator+(const Jet& a, const Jet& b) {
  return {a.v + b.v, a.dr + b.dr, a.dt + b.dt, a.drr + b.drr, a.drt + b.drt, a.dtt + b.dtt};
}
inline Jet operator-(const Jet& a, const Jet& b) {
  return {a.v - b.v, a.dr - b.dr, a.dt - b.dt, a.drr - b.drr, a.drt - b.drt, a.dtt - b.dtt};
}
inline Jet operator-(const Jet& a) { return {-a.v, -a.dr, -a.dt, -a.drr, -a.drt, -a.dtt}; }
inline Jet operator*(const Jet& a, const Jet& b) {
  return {a.v * b.v,
          a.dr * b.v + a.v * b.dr,
          a.dt * b.v + a.v * b.dt,
          a.drr * b.v + 2.0 * a.dr * b.dr + a.v * b.drr,
          a.drt * b.v + a.dr * b.dt + a.dt * b.dr + a.v * b.drt,
          a.dtt * b.v + 2.0 * a.dt * b.dt + a.v * b.dtt};
}
inline Jet operator*(double s, const Jet& a) {
  return {s * a.v, s * a.dr, s * a.dt, s * a.drr, s * a.drt, s * a.dtt};
}
inline Jet operator*(const Jet& a, double s) { return s * a; }
inline Jet operator+(const Jet& a, double s) { return {a.v + s, a.dr, a.dt, a.drr, a.drt, a.dtt}; }
inline Jet operator+(double s, const Jet& a) { return a + s; }
inline Jet operator-(double s, const Jet& a) { return (-a) + s; }
inline Jet operator-(const Jet& a, double s) { return a + (-s); }

inline Jet reciprocal(const Jet& a) {
  const double i = 1.0 / a.v;
  return compose(a, i, -i * i, 2.0 * i * i * i);
}
inline Jet operator/(const Jet& a, const Jet& b) { return a * reciprocal(b); }
inline Jet operator/(double s, const Jet& b) { return s * reciprocal(b); }
inline Jet operator/(const Jet& a, double s) { return (1.0 / s) * a; }

inline Jet pow(const Jet& a, double p) {
  const double f0 = std::pow(a.v, p);
  return compose(a, f0, p * f0 / a.v, p * (p - 1.0) * f0 / (a.v * a.v));
}
inline Jet sqrt(const Jet& a) { return pow(a, 0.5); }
inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return compose(a, e, e, e);
}
inline Jet log(const Jet& a) { return compose(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v)); }
inline Jet sin(const Jet& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, s, c, -s);
}
inline Jet cos(const Jet& a) {
  const double s = std::sin(a.v), c = std::cos(a.v);
  return compose(a, c, -s, -c);
}

}  // namespace conic
