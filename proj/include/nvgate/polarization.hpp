#pragma once

#include "nvgate/scattering.hpp"

#include <string_view>

namespace nvgate {

enum class SchemeName { M1, M2, M3, B1 };
enum class FrequencyRule { Magic, Balance };

inline const char* name(SchemeName s) {
  switch (s) {
    case SchemeName::M1: return "M1";
    case SchemeName::M2: return "M2";
    case SchemeName::M3: return "M3";
    case SchemeName::B1: return "B1";
  }
  return "?";
}

inline SchemeName parse_scheme(std::string_view s) {
  if (s == "M1" || s == "m1") return SchemeName::M1;
  if (s == "M2" || s == "m2") return SchemeName::M2;
  if (s == "M3" || s == "m3") return SchemeName::M3;
  if (s == "B1" || s == "b1") return SchemeName::B1;
  throw Error(ErrorKind::Config, "unknown scheme '" + std::string(s) + "'");
}

struct SchemeConfig {
  SchemeName name = SchemeName::M1;
  JonesVector drive = JonesVector::x();
  JonesVector polarizer = JonesVector::y();
  FrequencyRule rule = FrequencyRule::Magic;
  // Fraction of the blocked intensity that leaks through the polarizer.
  double extinction = 0.0;
};

inline SchemeConfig scheme_config(SchemeName n) {
  switch (n) {
    case SchemeName::M1: return {n, JonesVector::x(), JonesVector::y(), FrequencyRule::Magic};
    case SchemeName::M2: return {n, JonesVector::diagonal(1), JonesVector::diagonal(-1), FrequencyRule::Magic};
    case SchemeName::M3: return {n, JonesVector::diagonal(1), JonesVector::diagonal(1), FrequencyRule::Magic};
    case SchemeName::B1: return {n, JonesVector::x(), JonesVector::y(), FrequencyRule::Balance};
  }
  throw Error(ErrorKind::Config, "unknown scheme");
}

struct ScatteredStates {
  std::array<JonesVector, 2> preserving;  // from g2, g3
  std::array<JonesVector, 2> flipping;    // from g2, g3
  std::array<double, 4> weights{};        // |p2|^2, |p3|^2, |f2|^2, |f3|^2
};

inline ScatteredStates scattered_states(const AmplitudeSet& amps, const JonesVector& drive) {
  ScatteredStates s;
  s.preserving[0] = amps.emitted(drive, Ground::G2, Ground::G2);
  s.preserving[1] = amps.emitted(drive, Ground::G3, Ground::G3);
  s.flipping[0] = amps.emitted(drive, Ground::G2, Ground::G3);
  s.flipping[1] = amps.emitted(drive, Ground::G3, Ground::G2);
  s.weights = {s.preserving[0].norm2(), s.preserving[1].norm2(), s.flipping[0].norm2(), s.flipping[1].norm2()};
  return s;
}

// Orientation of the polarization ellipse major axis relative to `reference`,
// in degrees within (-90, 90].
inline double angle_to(const JonesVector& v, const JonesVector& reference) {
  auto orientation = [](const JonesVector& j) {
    if (j.norm2() == 0.0) throw Error(ErrorKind::Domain, "angle of a zero Jones vector");
    const double s1 = std::norm(j.ex) - std::norm(j.ey);
    const double s2 = 2.0 * (std::conj(j.ex) * j.ey).real();
    return 0.5 * std::atan2(s2, s1) * 180.0 / pi;
  };
  double a = orientation(v) - orientation(reference);
  while (a <= -90.0) a += 180.0;
  while (a > 90.0) a -= 180.0;
  return a;
}

// Ellipticity angle in degrees; 0 for linear polarization.
inline double ellipticity_deg(const JonesVector& v) {
  const double s0 = v.norm2();
  if (s0 == 0.0) throw Error(ErrorKind::Domain, "ellipticity of a zero Jones vector");
  const double s3 = 2.0 * (std::conj(v.ex) * v.ey).imag();
  return 0.5 * std::asin(std::clamp(s3 / s0, -1.0, 1.0)) * 180.0 / pi;
}

namespace detail {
inline double transmitted(const JonesVector& photon, const JonesVector& pol, double extinction) {
  const double pass = std::norm(pol.inner(photon));
  return pass + extinction * (photon.norm2() - pass);
}
}  // namespace detail

// Probability that the photon heralding a scattering event out of `from`
// passes the polarizer (preserving and flipping channels, leakage excluded).
inline double pass_probability(const AmplitudeSet& amps, const JonesVector& drive, const JonesVector& polarizer,
                               Ground from, double extinction = 0.0) {
  const JonesVector p = polarizer.normalized();
  double num = 0.0, den = 0.0;
  for (Ground to : {Ground::G2, Ground::G3}) {
    const JonesVector j = amps.emitted(drive, from, to);
    num += detail::transmitted(j, p, extinction);
    den += j.norm2();
  }
  return den > 0.0 ? num / den : 0.0;
}

// Same, for an NV in the maximally mixed qubit state.
inline double pass_probability(const AmplitudeSet& amps, const JonesVector& drive, const JonesVector& polarizer,
                               double extinction = 0.0) {
  const JonesVector p = polarizer.normalized();
  double num = 0.0, den = 0.0;
  for (Ground from : {Ground::G2, Ground::G3})
    for (Ground to : {Ground::G2, Ground::G3}) {
      const JonesVector j = amps.emitted(drive, from, to);
      num += detail::transmitted(j, p, extinction);
      den += j.norm2();
    }
  return den > 0.0 ? num / den : 0.0;
}

// Worst case over the qubit basis states of the first scattered photon passing.
inline double first_photon_success(const AmplitudeSet& amps, const JonesVector& drive, const JonesVector& polarizer,
                                   double extinction = 0.0) {
  return std::min(pass_probability(amps, drive, polarizer, Ground::G2, extinction),
                  pass_probability(amps, drive, polarizer, Ground::G3, extinction));
}

// Single-NV map conditioned on a photon passing the polarizer; rows are the
// final state, columns the initial state, basis (g2, g3).
inline Mat2c conditional_transform(const AmplitudeSet& amps, const JonesVector& drive,
                                   const JonesVector& polarizer) {
  const JonesVector p = polarizer.normalized();
  Mat2c t;
  double scale = 0.0;
  for (Ground from : {Ground::G2, Ground::G3})
    for (Ground to : {Ground::G2, Ground::G3}) {
      const JonesVector j = amps.emitted(drive, from, to);
      t(index(to) - 1, index(from) - 1) = p.inner(j);
      scale = std::max(scale, j.norm());
    }
  if (t.cwiseAbs().maxCoeff() <= 1e-12 * scale || scale == 0.0)
    throw Error(ErrorKind::Blocked, "polarizer blocks every scattering channel");
  return t;
}

}  // namespace nvgate
