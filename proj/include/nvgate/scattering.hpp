#pragma once

#include "nvgate/jones.hpp"
#include "nvgate/levels.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <vector>

namespace nvgate {

inline constexpr double default_guard_ghz = 0.1;

struct AxisAmplitudes {
  double p2 = 0, p3 = 0;  // preserving
  double f2 = 0, f3 = 0;  // flipping
  double l2 = 0, l3 = 0;  // leakage to g1
};

// Scattering response at one drive frequency, in units of A0/GHz. response
// holds the emitted Jones vector for a unit drive along each axis; any other
// drive is the linear combination.
struct AmplitudeSet {
  double nu_ghz = 0.0;
  // [drive axis][initial: 0 = g2, 1 = g3][final ground g1/g2/g3]
  std::array<std::array<std::array<JonesVector, 3>, 2>, 2> response{};

  static int slot(Ground from) {
    if (from == Ground::G1) throw Error(ErrorKind::Domain, "scattering starts from a qubit state");
    return index(from) - 1;
  }

  JonesVector emitted(const JonesVector& drive, Ground from, Ground to) const {
    const int s = slot(from);
    return drive.ex * response[0][s][index(to)] + drive.ey * response[1][s][index(to)];
  }

  double preserving(Axis a, Ground from) const { return response[index(a)][slot(from)][index(from)][a].real(); }
  double flipping(Axis a, Ground from) const {
    return response[index(a)][slot(from)][index(flipped(from))][other(a)].real();
  }
  // Signed dominant component of the photon left by a g_i -> g1 transition.
  double leakage(Axis a, Ground from) const {
    const JonesVector& v = response[index(a)][slot(from)][index(Ground::G1)];
    return std::abs(v.ex) >= std::abs(v.ey) ? v.ex.real() : v.ey.real();
  }

  AxisAmplitudes axis(Axis a) const {
    return {preserving(a, Ground::G2), preserving(a, Ground::G3), flipping(a, Ground::G2),
            flipping(a, Ground::G3),   leakage(a, Ground::G2),    leakage(a, Ground::G3)};
  }
};

struct ScatteringOptions {
  double guard_ghz = default_guard_ghz;
  // A0 for y-polarized drive relative to x-polarized drive.
  double a0_ratio_y = 1.0;
};

inline AmplitudeSet amplitudes(const LevelScheme& levels, const DipoleMatrix& dipole, double nu_ghz,
                               const ScatteringOptions& opt = {}) {
  std::array<double, 6> delta{};
  for (int j = 0; j < 6; ++j) {
    delta[j] = levels.detuning(j, nu_ghz);
    if (std::abs(delta[j]) < opt.guard_ghz || delta[j] == 0.0) {
      std::ostringstream os;
      os << "drive at " << nu_ghz << " GHz is within " << opt.guard_ghz << " GHz of excited level e" << j + 1;
      throw Error(ErrorKind::NearResonance, os.str());
    }
  }
  AmplitudeSet out;
  out.nu_ghz = nu_ghz;
  for (Axis a : {Axis::X, Axis::Y}) {
    const double scale = a == Axis::X ? 1.0 : opt.a0_ratio_y;
    const int ai = index(a);
    for (Ground from : {Ground::G2, Ground::G3}) {
      for (Ground to : {Ground::G1, Ground::G2, Ground::G3}) {
        JonesVector acc;
        for (int j = 0; j < 6; ++j) {
          const Vec3c& up = dipole.at(from, j);
          const Vec3c& down = dipole.at(to, j);
          const cplx absorb = up(ai) * scale / delta[j];
          acc.ex += std::conj(down(0)) * absorb;
          acc.ey += std::conj(down(1)) * absorb;
        }
        out.response[ai][AmplitudeSet::slot(from)][index(to)] = acc;
      }
    }
  }
  return out;
}

struct SweepRow {
  double nu_ghz;
  AxisAmplitudes amps;
  bool valid;
};

inline std::vector<SweepRow> sweep(const LevelScheme& levels, const DipoleMatrix& dipole, double lo_ghz,
                                   double hi_ghz, double step_ghz, Axis axis, const ScatteringOptions& opt = {}) {
  if (!(hi_ghz > lo_ghz) || !(step_ghz > 0.0)) throw Error(ErrorKind::Domain, "empty sweep range");
  const auto n = static_cast<long>(std::floor((hi_ghz - lo_ghz) / step_ghz + 1e-9)) + 1;
  std::vector<SweepRow> rows;
  rows.reserve(n);
  ScatteringOptions raw = opt;
  raw.guard_ghz = 0.0;
  for (long k = 0; k < n; ++k) {
    const double nu = lo_ghz + k * step_ghz;
    const bool valid = levels.min_abs_detuning(nu) >= opt.guard_ghz;
    AxisAmplitudes a;
    if (levels.min_abs_detuning(nu) > 0.0) {
      a = amplitudes(levels, dipole, nu, raw).axis(axis);
    } else {
      const double inf = std::numeric_limits<double>::infinity();
      a = {inf, inf, inf, inf, inf, inf};
    }
    rows.push_back({nu, a, valid});
  }
  return rows;
}

struct FinderOptions {
  std::optional<double> lo_ghz;
  std::optional<double> hi_ghz;
  double step_ghz = 0.01;
  double tol_ghz = 1e-12;
  ScatteringOptions scattering{};
  // Prefer the admissible root nearest this frequency instead of the default rule.
  std::optional<double> hint_ghz;
};

namespace detail {

inline std::pair<double, double> search_range(const LevelScheme& levels, const FinderOptions& opt) {
  const auto [mn, mx] = std::minmax_element(levels.excited_ghz.begin(), levels.excited_ghz.end());
  const double g = levels.ground_ghz[1];
  return {opt.lo_ghz.value_or(*mn - g - 10.0), opt.hi_ghz.value_or(*mx - g + 10.0)};
}

// Sign-change roots of f on a grid, skipping cells that straddle a resonance.
inline std::vector<double> grid_roots(const LevelScheme& levels, const std::function<double(double)>& f,
                                      const FinderOptions& opt) {
  const auto [lo, hi] = search_range(levels, opt);
  if (!(hi > lo) || !(opt.step_ghz > 0.0)) throw Error(ErrorKind::Domain, "empty search range");
  auto straddles = [&](double a, double b) {
    for (int j = 0; j < 6; ++j) {
      const double r = levels.excited_ghz[j] - levels.ground_ghz[1];
      if (r >= a && r <= b) return true;
    }
    return false;
  };
  std::vector<double> roots;
  const auto n = static_cast<long>(std::ceil((hi - lo) / opt.step_ghz));
  double a = lo, fa = straddles(a, a) ? std::nan("") : f(a);
  for (long k = 1; k <= n; ++k) {
    const double b = std::min(hi, lo + k * opt.step_ghz);
    const bool pole = straddles(a, b);
    const double fb = straddles(b, b) ? std::nan("") : f(b);
    if (!pole && std::isfinite(fa) && std::isfinite(fb)) {
      if (fa == 0.0) {
        roots.push_back(a);
      } else if (fa * fb < 0.0) {
        double x0 = a, x1 = b, f0 = fa;
        while (x1 - x0 > opt.tol_ghz) {
          const double m = 0.5 * (x0 + x1);
          if (m <= x0 || m >= x1) break;
          const double fm = f(m);
          if (fm == 0.0) {
            x0 = x1 = m;
            break;
          }
          if ((fm < 0.0) == (f0 < 0.0)) {
            x0 = m;
            f0 = fm;
          } else {
            x1 = m;
          }
        }
        roots.push_back(0.5 * (x0 + x1));
      }
    }
    a = b;
    fa = fb;
  }
  return roots;
}

inline double pick_root(const LevelScheme& levels, const std::vector<double>& roots, const FinderOptions& opt,
                        const std::function<double(double)>& score, const char* what) {
  std::optional<double> best;
  double best_score = 0.0;
  for (double r : roots) {
    if (levels.min_abs_detuning(r) < opt.scattering.guard_ghz) continue;
    const double s = opt.hint_ghz ? -std::abs(r - *opt.hint_ghz) : score(r);
    if (!best || s > best_score) {
      best = r;
      best_score = s;
    }
  }
  if (!best) throw Error(ErrorKind::NoBracket, std::string("no admissible bracket for the ") + what + " point");
  return *best;
}

}  // namespace detail

// Drive frequency (x-polarized) where the two preserving amplitudes cancel
// pairwise, A_p2 = -A_p3. Among admissible roots the one with the smallest
// |A_p| wins.
inline double find_magic(const LevelScheme& levels, const DipoleMatrix& dipole, const FinderOptions& opt = {}) {
  ScatteringOptions raw = opt.scattering;
  raw.guard_ghz = 0.0;
  auto amps = [&](double nu) { return amplitudes(levels, dipole, nu, raw).axis(Axis::X); };
  const auto roots = detail::grid_roots(
      levels, [&](double nu) { const auto a = amps(nu); return a.p2 + a.p3; }, opt);
  return detail::pick_root(levels, roots, opt, [&](double nu) { return -std::abs(amps(nu).p2); }, "magic");
}

// Drive frequency (x-polarized) where the flipping amplitudes are equal,
// including sign. Among admissible roots the one with the largest |A_f| wins.
inline double find_balance(const LevelScheme& levels, const DipoleMatrix& dipole, const FinderOptions& opt = {}) {
  ScatteringOptions raw = opt.scattering;
  raw.guard_ghz = 0.0;
  auto amps = [&](double nu) { return amplitudes(levels, dipole, nu, raw).axis(Axis::X); };
  const auto roots = detail::grid_roots(
      levels, [&](double nu) { const auto a = amps(nu); return a.f2 - a.f3; }, opt);
  return detail::pick_root(levels, roots, opt, [&](double nu) { return std::abs(amps(nu).f2); }, "balance");
}

namespace phys {
inline constexpr double c = 2.99792458e8;
inline constexpr double eps0 = 8.8541878128e-12;
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double h = 2.0 * pi * hbar;
inline constexpr double debye = 1e-21 / c;
}  // namespace phys

// Plane-wave field amplitude for `power_w` spread over `area_um2` inside a
// medium of refractive index `index`.
inline double drive_field_v_per_m(double power_w, double area_um2, double index) {
  if (!(power_w > 0.0) || !(area_um2 > 0.0) || !(index > 0.0))
    throw Error(ErrorKind::Domain, "drive power, area and index must be positive");
  const double intensity = power_w / (area_um2 * 1e-12);
  return std::sqrt(2.0 * intensity / (index * phys::c * phys::eps0));
}

struct RateParams {
  double p0_debye = 5.2;
  double u_per_um = 2.4847;
  double e_field_v_per_m = drive_field_v_per_m(1e-6, 1.0, 2.42);
  double n_eff = 1.58;
  double nu0_ghz = 1.0;
  double drive_wavelength_nm = 637.0;
};

// Rate constant in MHz; the physical rate of a transition with dimensionless
// amplitude A is gamma0 * A^2.
inline double gamma0_mhz(const RateParams& p) {
  if (!(p.p0_debye > 0.0) || !(p.u_per_um > 0.0) || !(p.e_field_v_per_m > 0.0) || !(p.n_eff > 0.0) ||
      !(p.nu0_ghz > 0.0) || !(p.drive_wavelength_nm > 0.0))
    throw Error(ErrorKind::Domain, "rate parameters must be positive");
  const double p0 = p.p0_debye * phys::debye;
  const double u = p.u_per_um * 1e6;
  const double omega = 2.0 * pi * phys::c / (p.drive_wavelength_nm * 1e-9);
  const double nu0 = p.nu0_ghz * 1e9;
  const double g = p.n_eff * omega * std::pow(p0, 4) * u * u * p.e_field_v_per_m * p.e_field_v_per_m /
                   (4.0 * pi * phys::c * std::pow(phys::hbar, 3) * phys::eps0 * nu0 * nu0);
  return g / 1e6;
}

// Rabi frequency p0 E / h in GHz.
inline double rabi_frequency_ghz(double p0_debye, double e_field_v_per_m) {
  return p0_debye * phys::debye * e_field_v_per_m / phys::h / 1e9;
}

}  // namespace nvgate
