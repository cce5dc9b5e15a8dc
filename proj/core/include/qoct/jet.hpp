#pragma once
#include <cmath>

namespace qoct {

/// Truncated Taylor series (value and first three derivatives) with
/// arithmetic that propagates derivatives exactly. Used to differentiate
/// k(omega) analytically; no finite-difference steps anywhere in the
/// production path.
struct Jet3 {
  double f = 0.0;   // value
  double d1 = 0.0;  // first derivative
  double d2 = 0.0;  // second derivative
  double d3 = 0.0;  // third derivative

  static Jet3 constant(double c) { return {c, 0.0, 0.0, 0.0}; }
  static Jet3 variable(double x) { return {x, 1.0, 0.0, 0.0}; }
};

inline Jet3 operator+(const Jet3& a, const Jet3& b) {
  return {a.f + b.f, a.d1 + b.d1, a.d2 + b.d2, a.d3 + b.d3};
}
inline Jet3 operator-(const Jet3& a, const Jet3& b) {
  return {a.f - b.f, a.d1 - b.d1, a.d2 - b.d2, a.d3 - b.d3};
}
inline Jet3 operator+(const Jet3& a, double c) { return {a.f + c, a.d1, a.d2, a.d3}; }
inline Jet3 operator-(const Jet3& a, double c) { return {a.f - c, a.d1, a.d2, a.d3}; }
inline Jet3 operator-(double c, const Jet3& a) { return {c - a.f, -a.d1, -a.d2, -a.d3}; }
inline Jet3 operator*(double c, const Jet3& a) { return {c * a.f, c * a.d1, c * a.d2, c * a.d3}; }
inline Jet3 operator*(const Jet3& a, double c) { return c * a; }

inline Jet3 operator*(const Jet3& a, const Jet3& b) {
  return {a.f * b.f,
          a.d1 * b.f + a.f * b.d1,
          a.d2 * b.f + 2.0 * a.d1 * b.d1 + a.f * b.d2,
          a.d3 * b.f + 3.0 * a.d2 * b.d1 + 3.0 * a.d1 * b.d2 + a.f * b.d3};
}

inline Jet3 reciprocal(const Jet3& v) {
  const double w = 1.0 / v.f;
  Jet3 r;
  r.f = w;
  r.d1 = -v.d1 * w * w;
  r.d2 = -v.d2 * w * w - 2.0 * v.d1 * w * r.d1;
  r.d3 = -v.d3 * w * w - 4.0 * v.d2 * w * r.d1 - 2.0 * v.d1 * r.d1 * r.d1 -
         2.0 * v.d1 * w * r.d2;
  return r;
}

inline Jet3 operator/(const Jet3& a, const Jet3& b) { return a * reciprocal(b); }
inline Jet3 operator/(double c, const Jet3& b) { return c * reciprocal(b); }
inline Jet3 operator/(const Jet3& a, double c) { return a * (1.0 / c); }

inline Jet3 sqrt(const Jet3& u) {
  Jet3 s;
  s.f = std::sqrt(u.f);
  const double inv2s = 0.5 / s.f;
  s.d1 = u.d1 * inv2s;
  s.d2 = (u.d2 - 2.0 * s.d1 * s.d1) * inv2s;
  s.d3 = (u.d3 - 6.0 * s.d1 * s.d2) * inv2s;
  return s;
}

}  // namespace qoct
