#pragma once

#include "nvgate/types.hpp"

namespace nvgate {

// Transverse polarization in the (x, y) basis. Scattered-photon vectors are
// left un-normalized so that their squared norm carries the emission weight.
struct JonesVector {
  cplx ex{0.0};
  cplx ey{0.0};

  static JonesVector x() { return {1.0, 0.0}; }
  static JonesVector y() { return {0.0, 1.0}; }
  static JonesVector along(Axis a) { return a == Axis::X ? x() : y(); }
  // (x + s*y)/sqrt(2)
  static JonesVector diagonal(double s) { return {1.0 / std::sqrt(2.0), s / std::sqrt(2.0)}; }
  static JonesVector linear_deg(double deg) {
    const double t = deg * pi / 180.0;
    return {std::cos(t), std::sin(t)};
  }

  cplx operator[](Axis a) const { return a == Axis::X ? ex : ey; }
  double norm2() const { return std::norm(ex) + std::norm(ey); }
  double norm() const { return std::sqrt(norm2()); }
  bool is_normalized(double tol = 1e-12) const { return std::abs(norm2() - 1.0) < tol; }

  JonesVector normalized() const {
    const double n = norm();
    if (n == 0.0) throw Error(ErrorKind::Domain, "cannot normalize a zero Jones vector");
    return {ex / n, ey / n};
  }
  // <this|other>
  cplx inner(const JonesVector& o) const { return std::conj(ex) * o.ex + std::conj(ey) * o.ey; }
  // bilinear d.v, used for drive-dipole contraction
  JonesVector operator*(cplx s) const { return {ex * s, ey * s}; }
  JonesVector operator+(const JonesVector& o) const { return {ex + o.ex, ey + o.ey}; }
  JonesVector operator-(const JonesVector& o) const { return {ex - o.ex, ey - o.ey}; }
  JonesVector orthogonal() const { return {-std::conj(ey), std::conj(ex)}; }
};

inline JonesVector operator*(cplx s, const JonesVector& v) { return v * s; }

}  // namespace nvgate
