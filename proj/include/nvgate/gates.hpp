#pragma once

#include "nvgate/polarization.hpp"

#include <utility>

namespace nvgate {

enum class Detector { Left, Right };

inline const char* name(Detector d) { return d == Detector::Left ? "left" : "right"; }

// Two-qubit operator on (g2g2, g2g3, g3g2, g3g3), NV 1 first.
struct GateMatrix {
  Mat4c m = Mat4c::Zero();
  bool normalized = false;
  double path_phase_chi = pi / 2;

  // Scaled so that tr(G^dag G) = 4; the success probability lives in the scale.
  GateMatrix normalized_copy() const {
    const double n2 = (m.adjoint() * m).trace().real();
    if (!(n2 > 0.0)) throw Error(ErrorKind::Blocked, "cannot normalize a zero gate");
    GateMatrix g = *this;
    g.m = m * std::sqrt(4.0 / n2);
    g.normalized = true;
    return g;
  }
};

namespace ops {

inline Mat2c X() {
  Mat2c m;
  m << 0, 1, 1, 0;
  return m;
}
inline Mat2c Hd() {
  Mat2c m;
  m << 1, 1, 1, -1;
  return m / std::sqrt(2.0);
}
inline Mat2c S() {
  Mat2c m;
  m << 1, 0, 0, I;
  return m;
}
inline Mat4c CZ() {
  Mat4c m = Mat4c::Identity();
  m(3, 3) = -1;
  return m;
}
inline Mat4c kron(const Mat2c& a, const Mat2c& b) {
  Mat4c m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) m.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return m;
}
inline Mat4c XX() { return kron(X(), X()); }

}  // namespace ops

// Heralded operator for a photon reaching the given detector when each NV
// applies `t` on scattering; the photon from NV 1 picks up exp(i chi) on its
// way to the right detector, the one from NV 2 on its way to the left one.
inline GateMatrix two_nv_gate(const Mat2c& t1, const Mat2c& t2, Detector det, double chi = pi / 2) {
  const Mat2c id = Mat2c::Identity();
  const cplx ph = std::exp(I * chi);
  GateMatrix g;
  g.path_phase_chi = chi;
  if (det == Detector::Right)
    g.m = ph * ops::kron(t1, id) + ops::kron(id, t2);
  else
    g.m = ops::kron(t1, id) + ph * ops::kron(id, t2);
  return g;
}

inline GateMatrix two_nv_gate(const Mat2c& t, Detector det, double chi = pi / 2) { return two_nv_gate(t, t, det, chi); }

inline std::pair<GateMatrix, GateMatrix> ideal_gates(double chi = pi / 2) {
  GateMatrix r = two_nv_gate(ops::X(), Detector::Right, chi);
  GateMatrix l = two_nv_gate(ops::X(), Detector::Left, chi);
  r.m /= std::sqrt(2.0);
  l.m /= std::sqrt(2.0);
  r.normalized = l.normalized = true;
  return {r, l};
}

// The flip-only map the scheme aims for: diagonal dropped, off-diagonal
// magnitudes averaged, phases kept.
inline Mat2c ideal_transform(const Mat2c& t) {
  const double mean = 0.5 * (std::abs(t(0, 1)) + std::abs(t(1, 0)));
  auto phase = [](cplx z) { return std::abs(z) > 0.0 ? z / std::abs(z) : cplx(1.0); };
  Mat2c out = Mat2c::Zero();
  out(0, 1) = mean * phase(t(0, 1));
  out(1, 0) = mean * phase(t(1, 0));
  return out;
}

inline GateMatrix scheme_gate(const SchemeConfig& scheme, const AmplitudeSet& amps, Detector det) {
  return two_nv_gate(conditional_transform(amps, scheme.drive, scheme.polarizer), det);
}

inline GateMatrix scheme_ideal_gate(const SchemeConfig& scheme, const AmplitudeSet& amps, Detector det) {
  GateMatrix g = two_nv_gate(ideal_transform(conditional_transform(amps, scheme.drive, scheme.polarizer)), det);
  return g.normalized_copy();
}

inline double entanglement_fidelity(const GateMatrix& ideal, const GateMatrix& actual) {
  const double nu = (ideal.m.adjoint() * ideal.m).trace().real();
  const double na = (actual.m.adjoint() * actual.m).trace().real();
  if (!(nu > 0.0) || !(na > 0.0)) throw Error(ErrorKind::Domain, "zero-trace gate channel");
  const cplx overlap = (ideal.m.adjoint() * actual.m).trace();
  return std::norm(overlap) / (nu * na);
}

// Operator-norm distance of G^dag G / c from the identity, c = tr(G^dag G)/4.
inline double unitarity_defect(const GateMatrix& g) {
  const Mat4c gg = g.m.adjoint() * g.m;
  const double c = gg.trace().real() / 4.0;
  if (!(c > 0.0)) throw Error(ErrorKind::Blocked, "zero gate");
  Eigen::SelfAdjointEigenSolver<Mat4c> es(gg / c - Mat4c::Identity());
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct FidelityReport {
  double entanglement_fidelity = 0.0;
  double success_probability = 0.0;
  double unitarity_defect = 0.0;
};

inline FidelityReport gate_report(const SchemeConfig& scheme, const AmplitudeSet& amps, Detector det) {
  const GateMatrix g = scheme_gate(scheme, amps, det);
  const GateMatrix u = scheme_ideal_gate(scheme, amps, det);
  return {entanglement_fidelity(u, g),
          first_photon_success(amps, scheme.drive, scheme.polarizer, scheme.extinction), unitarity_defect(g)};
}

struct UnbalancedGate {
  GateMatrix gate;
  double fidelity;
};

// a = {A^(1)_1, A^(1)_2, A^(2)_1, A^(2)_2}: NV i, transition 1 = g2->g3, 2 = g3->g2.
inline UnbalancedGate unbalanced_two_nv_gate(const std::array<double, 4>& a) {
  for (double v : a)
    if (!(v > 0.0)) throw Error(ErrorKind::Domain, "unbalanced amplitudes must be positive");
  Mat2c t1, t2;
  t1 << 0, a[1], a[0], 0;
  t2 << 0, a[3], a[2], 0;
  UnbalancedGate out{two_nv_gate(t1, t2, Detector::Right), 0.0};
  out.fidelity = entanglement_fidelity(ideal_gates().first, out.gate);
  return out;
}

}  // namespace nvgate
