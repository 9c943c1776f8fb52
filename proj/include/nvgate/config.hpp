#pragma once

#include "nvgate/levels.hpp"
#include "nvgate/nonradiative.hpp"
#include "nvgate/scattering.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#ifndef NVGATE_DATA_DIR
#define NVGATE_DATA_DIR "data"
#endif

namespace nvgate {

// Flat "key = value" text; '#' starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig c;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
      const auto eq = line.find('=');
      const std::string key = trim(line.substr(0, eq));
      if (eq == std::string::npos) {
        if (key.empty()) continue;
        throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key = value");
      }
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty())
        throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": empty key or value");
      c.values_[key] = value;
    }
    return c;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Config, "cannot open config file " + path);
    return parse(in);
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  double number(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    used_.insert(key);
    if (it == values_.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument(key);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "key " + key + " is not a number: " + it->second);
    }
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Keys present in the file but never read.
  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  }

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

struct Table4Reference {
  double magic_x_ghz = 5.11;
  double magic_y_ghz = 3.95;
  double balance_x_ghz = 3.45;
  double balance_y_ghz = 2.57;
};

struct PhysicsConfig {
  LevelScheme levels;
  FCoefficients f;
  double p0_debye = 5.2;
  ScatteringOptions scattering;
  double search_step_ghz = 0.01;
  double drive_power_w = 1e-6;
  double drive_area_um2 = 1.0;
  double drive_index = 2.42;
  RateParams rate;
  double tau_sz0_ns = 12.0;
  double tau_sz1_ns = 7.8;
  Table4Reference table4;

  DipoleMatrix dipole() const {
    DipoleMatrix d = build_ss_dipole(f);
    d.p0_debye = p0_debye;
    return d;
  }
  DipoleMatrix dipole_so() const {
    DipoleMatrix d = build_so_dipole();
    d.p0_debye = p0_debye;
    return d;
  }
  UnitaryMixing mixing() const { return reconstruct_excited_mixing(f.f11, f.f12); }
  FinderOptions finder() const {
    FinderOptions o;
    o.step_ghz = search_step_ghz;
    o.scattering = scattering;
    return o;
  }
  double gamma_nr_mhz() const { return gamma_nr_from_lifetimes(tau_sz0_ns, tau_sz1_ns); }
};

inline PhysicsConfig physics_from(const KeyValueConfig& kv) {
  PhysicsConfig c;
  for (int j = 0; j < 6; ++j) {
    const std::string key = "level.e" + std::to_string(j + 1) + "_ghz";
    if (!kv.has(key)) throw Error(ErrorKind::Config, "missing required key " + key);
    c.levels.excited_ghz[j] = kv.number(key, 0.0);
  }
  const double zfs = kv.number("level.zfs_ghz", zero_field_splitting_ghz);
  c.levels.ground_ghz = {-zfs, 0.0, 0.0};
  c.levels.optical_gap_thz = kv.number("level.optical_gap_thz", c.levels.optical_gap_thz);
  c.f.f11 = kv.number("dipole.f11", c.f.f11);
  c.f.f12 = kv.number("dipole.f12", c.f.f12);
  c.f.f21 = kv.number("dipole.f21", c.f.f21);
  c.f.f22 = kv.number("dipole.f22", c.f.f22);
  c.f.f23 = kv.number("dipole.f23", c.f.f23);
  c.p0_debye = kv.number("dipole.p0_debye", c.p0_debye);
  c.scattering.guard_ghz = kv.number("scattering.guard_ghz", c.scattering.guard_ghz);
  c.scattering.a0_ratio_y = kv.number("scattering.a0_ratio_y", c.scattering.a0_ratio_y);
  c.search_step_ghz = kv.number("scattering.search_step_ghz", c.search_step_ghz);
  c.drive_power_w = kv.number("rate.drive_power_w", c.drive_power_w);
  c.drive_area_um2 = kv.number("rate.drive_area_um2", c.drive_area_um2);
  c.drive_index = kv.number("rate.drive_index", c.drive_index);
  c.rate.p0_debye = c.p0_debye;
  c.rate.u_per_um = kv.number("rate.u_per_um", c.rate.u_per_um);
  c.rate.n_eff = kv.number("rate.n_eff", c.rate.n_eff);
  c.rate.nu0_ghz = kv.number("rate.nu0_ghz", c.rate.nu0_ghz);
  c.rate.drive_wavelength_nm = kv.number("rate.drive_wavelength_nm", c.rate.drive_wavelength_nm);
  c.rate.e_field_v_per_m = drive_field_v_per_m(c.drive_power_w, c.drive_area_um2, c.drive_index);
  c.tau_sz0_ns = kv.number("nonradiative.tau_sz0_ns", c.tau_sz0_ns);
  c.tau_sz1_ns = kv.number("nonradiative.tau_sz1_ns", c.tau_sz1_ns);
  c.table4.magic_x_ghz = kv.number("table4.delta_magic_x_ghz", c.table4.magic_x_ghz);
  c.table4.magic_y_ghz = kv.number("table4.delta_magic_y_ghz", c.table4.magic_y_ghz);
  c.table4.balance_x_ghz = kv.number("table4.delta_balance_x_ghz", c.table4.balance_x_ghz);
  c.table4.balance_y_ghz = kv.number("table4.delta_balance_y_ghz", c.table4.balance_y_ghz);

  if (const auto extra = kv.unused(); !extra.empty()) throw Error(ErrorKind::Config, "unknown config key " + extra.front());
  if (!(c.scattering.guard_ghz > 0.0) || !(c.search_step_ghz > 0.0) || !(c.scattering.a0_ratio_y > 0.0))
    throw Error(ErrorKind::Config, "guard band, search step and A0 ratio must be positive");
  c.levels.validate();
  reconstruct_excited_mixing(c.f.f11, c.f.f12);
  return c;
}

inline std::string default_config_path() { return std::string(NVGATE_DATA_DIR) + "/default.cfg"; }

inline PhysicsConfig load_physics(const std::string& path = default_config_path()) {
  return physics_from(KeyValueConfig::load(path));
}

}  // namespace nvgate
