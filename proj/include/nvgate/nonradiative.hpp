#pragma once

#include "nvgate/scattering.hpp"

#include <vector>

namespace nvgate {

// Non-radiative rate into the metastable manifold in MHz, from the excited
// lifetimes of the S_z = 0 and S_z = +-1 branches.
inline double gamma_nr_from_lifetimes(double tau_sz0_ns, double tau_sz1_ns) {
  if (!(tau_sz0_ns > 0.0) || !(tau_sz1_ns > 0.0)) throw Error(ErrorKind::Domain, "lifetimes must be positive");
  if (tau_sz1_ns > tau_sz0_ns) throw Error(ErrorKind::Domain, "the S_z = +-1 branch must not outlive S_z = 0");
  return (1.0 / tau_sz1_ns - 1.0 / tau_sz0_ns) * 1e3;
}

struct ThreeLevelParams {
  double delta_ghz = 5.11;
  double omega_r_ghz = 0.1;
  double gamma_nr_mhz = 44.9;

  bool perturbative() const { return std::abs(omega_r_ghz / delta_ghz) <= 0.1; }
};

// Loss rate of the ground-like dressed state, MHz.
inline double dressed_loss_rate_mhz(const ThreeLevelParams& p) {
  if (p.delta_ghz == 0.0) throw Error(ErrorKind::Domain, "dressed-state estimate needs a non-zero detuning");
  const double r = p.omega_r_ghz / p.delta_ghz;
  return p.gamma_nr_mhz * r * r;
}

inline double dressed_loss_ratio(double gamma_t_mhz, const ThreeLevelParams& p) {
  return gamma_t_mhz / dressed_loss_rate_mhz(p);
}

namespace detail {

using Mat9c = Eigen::Matrix<cplx, 9, 9>;
using Vec9c = Eigen::Matrix<cplx, 9, 1>;

// Row-major vec(rho); d rho/dt in ns^-1 with H in GHz (cyclic).
inline Mat9c three_level_generator(const ThreeLevelParams& p) {
  Eigen::Matrix3cd h = Eigen::Matrix3cd::Zero();
  h(0, 0) = -p.delta_ghz;
  h(0, 1) = h(1, 0) = p.omega_r_ghz;
  Eigen::Matrix3cd c = Eigen::Matrix3cd::Zero();
  c(2, 1) = std::sqrt(p.gamma_nr_mhz * 1e-3);
  auto left = [](const Eigen::Matrix3cd& a) {
    Mat9c m = Mat9c::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) m(3 * i + j, 3 * k + j) += a(i, k);
    return m;
  };
  auto right = [](const Eigen::Matrix3cd& b) {
    Mat9c m = Mat9c::Zero();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) m(3 * i + j, 3 * i + k) += b(k, j);
    return m;
  };
  const Eigen::Matrix3cd ctc = c.adjoint() * c;
  return -2.0 * pi * I * (left(h) - right(h)) + left(c) * right(c.adjoint()) - 0.5 * (left(ctc) + right(ctc));
}

inline Mat9c rk4_step(const Mat9c& l, double h) {
  const Mat9c a = h * l;
  const Mat9c a2 = a * a;
  return Mat9c::Identity() + a + a2 / 2.0 + a2 * a / 6.0 + a2 * a2 / 24.0;
}

inline Mat9c power(Mat9c base, unsigned long long n) {
  Mat9c r = Mat9c::Identity();
  while (n) {
    if (n & 1ULL) r = r * base;
    base = base * base;
    n >>= 1ULL;
  }
  return r;
}

}  // namespace detail

// Populations of (ground, excited, metastable) after t_ns starting in the ground
// state; fixed-step RK4 with the step propagator applied by binary powering.
inline std::array<double, 3> three_level_evolve(const ThreeLevelParams& p, double t_ns, double step_ns = 1e-3) {
  if (!(t_ns >= 0.0) || !(step_ns > 0.0)) throw Error(ErrorKind::Domain, "invalid evolution time or step");
  const auto n = static_cast<unsigned long long>(std::ceil(t_ns / step_ns));
  const double h = n ? t_ns / static_cast<double>(n) : 0.0;
  const detail::Mat9c prop = detail::power(detail::rk4_step(detail::three_level_generator(p), h), n);
  detail::Vec9c rho = detail::Vec9c::Zero();
  rho(0) = 1.0;
  rho = prop * rho;
  const double tr = (rho(0) + rho(4) + rho(8)).real();
  if (std::abs(tr - 1.0) > 1e-9) throw Error(ErrorKind::Numerical, "trace drift in three-level integration");
  return {rho(0).real(), rho(4).real(), rho(8).real()};
}

// Exponential loss rate (MHz) of the non-metastable population, fitted by
// least squares on log-population over [t_ns/4, t_ns].
inline double fit_dressed_loss_rate_mhz(const ThreeLevelParams& p, double t_ns, int samples = 16,
                                        double step_ns = 1e-3) {
  if (samples < 2) throw Error(ErrorKind::Domain, "fit needs at least two samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < samples; ++k) {
    const double t = t_ns * (0.25 + 0.75 * k / (samples - 1));
    const auto pop = three_level_evolve(p, t, step_ns);
    const double y = std::log(pop[0] + pop[1]);
    sx += t;
    sy += y;
    sxx += t * t;
    sxy += t * y;
  }
  const double slope = (samples * sxy - sx * sy) / (samples * sxx - sx * sx);
  return -slope * 1e3;
}

struct LeakageAmplitudes {
  double l2x, l2y, l3x, l3y;
};

inline LeakageAmplitudes leakage_amplitudes(const LevelScheme& levels, const DipoleMatrix& dipole, double nu_ghz,
                                            const ScatteringOptions& opt = {}) {
  const AmplitudeSet a = amplitudes(levels, dipole, nu_ghz, opt);
  return {a.leakage(Axis::X, Ground::G2), a.leakage(Axis::Y, Ground::G2), a.leakage(Axis::X, Ground::G3),
          a.leakage(Axis::Y, Ground::G3)};
}

// Smallest detuning to an S_z ~ +-1 excited state (e1, e2, e5, e6) reached
// from g2 by a drive along `axis`.
inline double smallest_spin_detuning(const LevelScheme& levels, const DipoleMatrix& dipole, double nu_ghz, Axis axis) {
  double best = std::numeric_limits<double>::infinity();
  for (int j : {0, 1, 4, 5})
    if (std::abs(dipole.at(Ground::G2, j)(index(axis))) > 0.1)
      best = std::min(best, std::abs(levels.detuning(j, nu_ghz)));
  if (!std::isfinite(best)) throw Error(ErrorKind::Domain, "drive couples g2 to no S_z = +-1 excited state");
  return best;
}

}  // namespace nvgate
