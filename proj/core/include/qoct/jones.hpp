#pragma once
#include <array>
#include <cmath>
#include <complex>

#include "qoct/units.hpp"

namespace qoct {

/// Jones vector in the (H, V) basis.
struct JonesVector {
  cplx h{0.0, 0.0};
  cplx v{0.0, 0.0};
};

/// 2x2 complex Jones matrix, row-major: [hh hv; vh vv].
struct JonesMatrix {
  std::array<cplx, 4> m{cplx(0), cplx(0), cplx(0), cplx(0)};

  static JonesMatrix identity() { return {{cplx(1), cplx(0), cplx(0), cplx(1)}}; }
  static JonesMatrix scalar(cplx s) { return {{s, cplx(0), cplx(0), s}}; }
  static JonesMatrix diag(cplx a, cplx b) { return {{a, cplx(0), cplx(0), b}}; }

  /// Basis rotation by angle a (radians).
  static JonesMatrix rotation(double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {{cplx(c), cplx(s), cplx(-s), cplx(c)}};
  }

  /// Retarder with fast-axis angle alpha and retardation delta:
  /// R(-alpha) diag(e^{-i delta/2}, e^{+i delta/2}) R(alpha).
  static JonesMatrix wave_plate(double delta, double alpha) {
    const JonesMatrix d = diag(std::polar(1.0, -delta / 2), std::polar(1.0, delta / 2));
    return rotation(-alpha) * d * rotation(alpha);
  }

  /// Ideal achromatic quarter-wave plate at 45 degrees.
  static JonesMatrix quarter_wave_45() { return wave_plate(std::acos(-1.0) / 2, std::acos(-1.0) / 4); }

  friend JonesMatrix operator*(const JonesMatrix& a, const JonesMatrix& b) {
    return {{a.m[0] * b.m[0] + a.m[1] * b.m[2], a.m[0] * b.m[1] + a.m[1] * b.m[3],
             a.m[2] * b.m[0] + a.m[3] * b.m[2], a.m[2] * b.m[1] + a.m[3] * b.m[3]}};
  }
  friend JonesMatrix operator*(cplx s, const JonesMatrix& a) {
    return {{s * a.m[0], s * a.m[1], s * a.m[2], s * a.m[3]}};
  }
  friend JonesMatrix operator+(const JonesMatrix& a, const JonesMatrix& b) {
    return {{a.m[0] + b.m[0], a.m[1] + b.m[1], a.m[2] + b.m[2], a.m[3] + b.m[3]}};
  }
  friend JonesVector operator*(const JonesMatrix& a, const JonesVector& x) {
    return {a.m[0] * x.h + a.m[1] * x.v, a.m[2] * x.h + a.m[3] * x.v};
  }

  /// Largest absolute deviation of J^dagger J from the identity.
  double unitarity_defect() const {
    const cplx g00 = std::conj(m[0]) * m[0] + std::conj(m[2]) * m[2];
    const cplx g01 = std::conj(m[0]) * m[1] + std::conj(m[2]) * m[3];
    const cplx g11 = std::conj(m[1]) * m[1] + std::conj(m[3]) * m[3];
    return std::max({std::abs(g00 - 1.0), std::abs(g11 - 1.0), std::abs(g01)});
  }
};

}  // namespace qoct
