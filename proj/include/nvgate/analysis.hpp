#pragma once

#include "nvgate/config.hpp"
#include "nvgate/dynamics.hpp"
#include "nvgate/gates.hpp"
#include "nvgate/nonradiative.hpp"

#include <vector>

namespace nvgate {

struct WorkingPoints {
  double magic_ghz = 0.0;
  double balance_ghz = 0.0;
  AmplitudeSet magic;
  AmplitudeSet balance;

  const AmplitudeSet& for_rule(FrequencyRule r) const { return r == FrequencyRule::Magic ? magic : balance; }
};

inline WorkingPoints working_points(const LevelScheme& levels, const DipoleMatrix& dipole, const FinderOptions& opt) {
  WorkingPoints w;
  w.magic_ghz = find_magic(levels, dipole, opt);
  w.balance_ghz = find_balance(levels, dipole, opt);
  w.magic = amplitudes(levels, dipole, w.magic_ghz, opt.scattering);
  w.balance = amplitudes(levels, dipole, w.balance_ghz, opt.scattering);
  return w;
}

inline WorkingPoints working_points(const PhysicsConfig& c) {
  return working_points(c.levels, c.dipole(), c.finder());
}

struct Table4Row {
  std::string label;
  Axis axis;
  double reference_delta_ghz;
  double scheme_delta_ghz;
  double reference_ratio;
  double scheme_ratio;
};

struct Table4 {
  double gamma0_mhz;
  double gamma_nr_mhz;
  double gamma_t_mhz;  // lower flipping rate at the magic point
  double rabi_ghz;
  std::vector<Table4Row> rows;
};

// Loss-ratio table for the magic and balance points under x and y drive. The
// transition rate is the weaker flipping rate at the magic point.
inline Table4 table4(const PhysicsConfig& c, const WorkingPoints& w, double field_scale = 1.0) {
  Table4 t;
  RateParams rp = c.rate;
  rp.e_field_v_per_m *= field_scale;
  t.gamma0_mhz = gamma0_mhz(rp);
  t.gamma_nr_mhz = c.gamma_nr_mhz();
  const auto m = w.magic.axis(Axis::X);
  const double a = std::min(std::abs(m.f2), std::abs(m.f3));
  t.gamma_t_mhz = t.gamma0_mhz * a * a;
  t.rabi_ghz = rabi_frequency_ghz(c.p0_debye, rp.e_field_v_per_m);
  const DipoleMatrix d = c.dipole();
  auto row = [&](const char* label, Axis axis, double ref, double nu) {
    ThreeLevelParams p{ref, t.rabi_ghz, t.gamma_nr_mhz};
    const double scheme_delta = smallest_spin_detuning(c.levels, d, nu, axis);
    ThreeLevelParams q{scheme_delta, t.rabi_ghz, t.gamma_nr_mhz};
    t.rows.push_back({label, axis, ref, scheme_delta, dressed_loss_ratio(t.gamma_t_mhz, p),
                      dressed_loss_ratio(t.gamma_t_mhz, q)});
  };
  row("magic_x", Axis::X, c.table4.magic_x_ghz, w.magic_ghz);
  row("magic_y", Axis::Y, c.table4.magic_y_ghz, w.magic_ghz);
  row("balance_x", Axis::X, c.table4.balance_x_ghz, w.balance_ghz);
  row("balance_y", Axis::Y, c.table4.balance_y_ghz, w.balance_ghz);
  return t;
}

struct SchemeFidelities {
  double m1 = 0, m2 = 0, m3 = 0;
  double m2_success = 0;
};

inline SchemeFidelities scheme_fidelities(const AmplitudeSet& a) {
  SchemeFidelities f;
  f.m1 = gate_report(scheme_config(SchemeName::M1), a, Detector::Right).entanglement_fidelity;
  const auto m2 = gate_report(scheme_config(SchemeName::M2), a, Detector::Right);
  f.m2 = m2.entanglement_fidelity;
  f.m2_success = m2.success_probability;
  f.m3 = gate_report(scheme_config(SchemeName::M3), a, Detector::Right).entanglement_fidelity;
  return f;
}

struct LevelShiftRow {
  int level;  // 1-based
  double shift_ghz;
  double magic_ghz;
  double magic_shift_ghz;
  double abs_ap2, abs_ap3, abs_af2, abs_af3;
  SchemeFidelities fid;
};

// Shift one excited level and follow the magic point from the unshifted one.
inline std::vector<LevelShiftRow> level_shift_scan(const LevelScheme& levels, const DipoleMatrix& dipole, int level,
                                                   const std::vector<double>& shifts, FinderOptions opt) {
  if (level < 1 || level > 6) throw Error(ErrorKind::Domain, "level index must be 1..6");
  const double base = find_magic(levels, dipole, opt);
  std::vector<LevelShiftRow> rows;
  for (double s : shifts) {
    const LevelScheme l = levels.with_shift(level - 1, s);
    FinderOptions o = opt;
    o.hint_ghz = base;
    const double nu = find_magic(l, dipole, o);
    const AmplitudeSet a = amplitudes(l, dipole, nu, opt.scattering);
    const auto x = a.axis(Axis::X);
    rows.push_back({level, s, nu, nu - base, std::abs(x.p2), std::abs(x.p3), std::abs(x.f2), std::abs(x.f3),
                    scheme_fidelities(a)});
  }
  return rows;
}

struct MismatchRow {
  double o_x;
  double abs_ap2x, abs_af2x, abs_af3x;
  double preserving_angle_deg;  // M2 drive, relative to (x - y)
  double orthogonality;
  SchemeFidelities fid;
};

// Scale x dipole components by o_x and evaluate at a fixed drive frequency.
inline std::vector<MismatchRow> mismatch_scan(const LevelScheme& levels, const DipoleMatrix& dipole, double nu_ghz,
                                              const std::vector<double>& factors, const ScatteringOptions& opt = {}) {
  std::vector<MismatchRow> rows;
  for (double o : factors) {
    const DipoleMatrix d = dipole_mismatch(dipole, o);
    const AmplitudeSet a = amplitudes(levels, d, nu_ghz, opt);
    const auto x = a.axis(Axis::X);
    const auto st = scattered_states(a, JonesVector::diagonal(1));
    rows.push_back({o, std::abs(x.p2), std::abs(x.f2), std::abs(x.f3),
                    angle_to(st.preserving[0], JonesVector::diagonal(-1)), d.orthogonality_residual(),
                    scheme_fidelities(a)});
  }
  return rows;
}

struct StrainRow {
  double strength_ghz;
  std::array<double, 6> energies;
  double magic_ghz;
  double abs_ap2, abs_ap3, abs_af2, abs_af3;
  double preserving_angle_deg;  // M2 drive, from g2, relative to (x - y)
  double preserving_ellipticity_deg;
  double orthogonality;
  SchemeFidelities fid;
};

// Strain sweep with label continuity: each step tracks the previous step's
// eigenbasis, walking outward from zero in both directions.
inline std::vector<StrainRow> strain_scan(const PhysicsConfig& c, Axis axis, const std::vector<double>& values) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const DipoleMatrix so = c.dipole_so();
  const UnitaryMixing mix = c.mixing();
  FinderOptions opt = c.finder();
  const StrainedScheme zero = apply_strain(c.levels, so, mix, {axis, 0.0});
  const double base = find_magic(zero.levels, zero.dipole, opt);

  std::vector<StrainRow> rows(sorted.size());
  auto eval = [&](std::size_t k, const StrainedScheme& s, double hint) {
    FinderOptions o = opt;
    o.hint_ghz = hint;
    const double nu = find_magic(s.levels, s.dipole, o);
    const AmplitudeSet a = amplitudes(s.levels, s.dipole, nu, opt.scattering);
    const auto x = a.axis(Axis::X);
    const JonesVector pres = a.emitted(JonesVector::diagonal(1), Ground::G2, Ground::G2);
    rows[k] = {sorted[k], s.levels.excited_ghz, nu, std::abs(x.p2), std::abs(x.p3), std::abs(x.f2), std::abs(x.f3),
               angle_to(pres, JonesVector::diagonal(-1)), ellipticity_deg(pres), s.dipole.orthogonality_residual(),
               scheme_fidelities(a)};
    return nu;
  };
  const auto split = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), 0.0) - sorted.begin());
  for (int dir : {+1, -1}) {
    Mat6 ref = zero.basis;
    double hint = base;
    std::size_t k = split;
    while (dir > 0 ? k < sorted.size() : k > 0) {
      const std::size_t idx = dir > 0 ? k : k - 1;
      const StrainedScheme s =
          sorted[idx] == 0.0 ? zero : apply_strain(c.levels, so, mix, {axis, sorted[idx]}, &ref);
      hint = eval(idx, s, hint);
      ref = s.basis;
      k = dir > 0 ? k + 1 : k - 1;
    }
  }
  return rows;
}

struct UnbalancedRow {
  std::string pattern;
  double ratio;  // delta / mean amplitude
  double exact;
  double expansion;
};

// Two imbalance patterns: per-NV (A_1 = A + d, A_2 = A - d on both NVs) and
// cross-NV (NV 1 at A - d, NV 2 at A + d).
inline std::vector<UnbalancedRow> unbalanced_scan(const std::vector<double>& ratios) {
  std::vector<UnbalancedRow> rows;
  for (double r : ratios) {
    const double a = 1.0, d = r;
    rows.push_back({"per_nv", r, unbalanced_two_nv_gate({a + d, a - d, a + d, a - d}).fidelity, 1.0 - r * r});
    rows.push_back({"cross_nv", r, unbalanced_two_nv_gate({a - d, a - d, a + d, a + d}).fidelity, 1.0 - r * r});
  }
  return rows;
}

}  // namespace nvgate
