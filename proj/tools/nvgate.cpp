#include "nvgate/analysis.hpp"
#include "nvgate/waveguide.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

using namespace nvgate;

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(9) << v;
  return os.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorKind::Numerical, "sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "not a number list: " + s);
    }
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty number list");
  return out;
}

std::vector<double> grid(double lo, double hi, double step) {
  std::vector<double> v;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= n; ++k) v.push_back(lo + k * step);
  return v;
}

double parse_window(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  const auto v = parse_list(s);
  if (v.size() != 1 || !(v[0] > 0.0)) throw Error(ErrorKind::Config, "window must be a positive number or inf");
  return v[0];
}

struct Context {
  std::string config_path = default_config_path();
  std::vector<std::string> overrides;
  std::string command;
  PhysicsConfig phys;
  std::string digest;

  void load() {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Config, "cannot open config file " + config_path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::istringstream ts(text);
    KeyValueConfig kv = KeyValueConfig::parse(ts);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos || eq == 0) throw Error(ErrorKind::Config, "override must be key=value: " + o);
      kv.set(o.substr(0, eq), o.substr(eq + 1));
      text += "\n" + o;
    }
    phys = physics_from(kv);
    digest = sha256_hex(text);
  }
};

// Destination for one output; every file starts with the manifest block.
class Sink {
 public:
  Sink(const Context& ctx, const std::string& path, std::optional<std::uint64_t> seed) : path_(path.empty() ? "-" : path) {
    if (path_ != "-") {
      file_.open(path_);
      if (!file_) throw Error(ErrorKind::Config, "cannot write " + path_);
    }
    std::ostream& os = out();
    os << "# nvgate " << NVGATE_VERSION << "\n";
    os << "# command: " << ctx.command << "\n";
    os << "# config: " << std::filesystem::path(ctx.config_path).filename().string() << " sha256=" << ctx.digest << "\n";
    os << "# seed: " << (seed ? std::to_string(*seed) : std::string("none")) << "\n";
    os << "# output: " << (path_ == "-" ? "stdout" : std::filesystem::path(path_).filename().string()) << "\n";
  }
  std::ostream& out() { return path_ == "-" ? std::cout : file_; }

 private:
  std::string path_;
  std::ofstream file_;
};

void kv(std::ostream& os, const std::string& key, double v) { os << key << "=" << num(v) << "\n"; }
void kv(std::ostream& os, const std::string& key, const std::string& v) { os << key << "=" << v << "\n"; }

void write_sweep(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "nu_ghz,abs_Ap2,abs_Ap3,abs_Af2,abs_Af3,abs_Al2,abs_Al3,valid\n";
  for (const auto& r : rows)
    os << num(r.nu_ghz) << ',' << num(std::abs(r.amps.p2)) << ',' << num(std::abs(r.amps.p3)) << ','
       << num(std::abs(r.amps.f2)) << ',' << num(std::abs(r.amps.f3)) << ',' << num(std::abs(r.amps.l2)) << ','
       << num(std::abs(r.amps.l3)) << ',' << (r.valid ? 1 : 0) << "\n";
}

void write_gate(std::ostream& os, const std::string& label, const Mat4c& m) {
  os << "# gate " << label << " (rows g2g2,g2g3,g3g2,g3g3; re,im pairs)\n";
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) os << (j ? "," : "") << num(m(i, j).real()) << ',' << num(m(i, j).imag());
    os << "\n";
  }
}

const char* ensemble_header = "scheme,input,eta,window,n_traj,n_success,mean_F,stderr_F,P\n";

void write_ensemble_row(std::ostream& os, const std::string& scheme, const std::string& input, double eta,
                        double window, const EnsembleResult& r) {
  os << scheme << ',' << input << ',' << num(eta) << ',' << num(window) << ',' << r.n_traj << ',' << r.n_success
     << ',' << num(r.mean_fidelity) << ',' << num(r.fidelity_stderr) << ',' << num(r.success_probability) << "\n";
}

struct TrajectoryArgs {
  std::string scheme = "ideal";
  std::string input = "psi1";
  double eta = 0.85;
  std::string window = "inf";
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  bool two_detectors = false;
  bool leakage = false;
  std::string per_nv;
  std::string dump;
};

GateModel make_model(const PhysicsConfig& c, const std::string& scheme, InputState in, double eta,
                     const ChannelOptions& opt, const std::optional<std::array<double, 4>>& per_nv,
                     const WorkingPoints* wp) {
  if (scheme == "ideal") {
    if (per_nv) {
      SchemeConfig sc = scheme_config(SchemeName::M1);
      return scheme_model(sc, AmplitudeSet{}, eta, input_state(in), per_nv, opt);
    }
    return idealized_model(eta, input_state(in), opt);
  }
  const SchemeConfig sc = scheme_config(parse_scheme(scheme));
  const WorkingPoints w = wp ? *wp : working_points(c);
  return scheme_model(sc, w.for_rule(sc.rule), eta, input_state(in), per_nv, opt);
}

int cmd_sweep(Context& ctx, const std::string& axis, std::optional<double> lo, std::optional<double> hi, double step,
              const std::string& out) {
  const Axis a = axis == "y" ? Axis::Y : Axis::X;
  if (axis != "x" && axis != "y") throw Error(ErrorKind::Config, "axis must be x or y");
  const auto [mn, mx] = std::minmax_element(ctx.phys.levels.excited_ghz.begin(), ctx.phys.levels.excited_ghz.end());
  const auto rows = sweep(ctx.phys.levels, ctx.phys.dipole(), lo.value_or(*mn - 5.0), hi.value_or(*mx + 5.0), step, a,
                          ctx.phys.scattering);
  Sink s(ctx, out, std::nullopt);
  write_sweep(s.out(), rows);
  return 0;
}

void write_points(std::ostream& os, const PhysicsConfig& c, const WorkingPoints& w) {
  const auto m = w.magic.axis(Axis::X);
  const auto b = w.balance.axis(Axis::X);
  kv(os, "magic_ghz", w.magic_ghz);
  kv(os, "magic_Ap2", m.p2);
  kv(os, "magic_Ap3", m.p3);
  kv(os, "magic_Af2", m.f2);
  kv(os, "magic_Af3", m.f3);
  kv(os, "magic_Al2", m.l2);
  kv(os, "magic_Al3", m.l3);
  kv(os, "balance_ghz", w.balance_ghz);
  kv(os, "balance_Ap2", b.p2);
  kv(os, "balance_Ap3", b.p3);
  kv(os, "balance_Af2", b.f2);
  kv(os, "balance_Af3", b.f3);
  kv(os, "balance_Al2", b.l2);
  kv(os, "balance_Al3", b.l3);
  const SchemeConfig b1 = scheme_config(SchemeName::B1);
  kv(os, "balance_first_photon_success", first_photon_success(w.balance, b1.drive, b1.polarizer));
  for (int j = 0; j < 6; ++j) {
    kv(os, "magic_delta_e" + std::to_string(j + 1), c.levels.detuning(j, w.magic_ghz));
    kv(os, "balance_delta_e" + std::to_string(j + 1), c.levels.detuning(j, w.balance_ghz));
  }
}

int cmd_find_points(Context& ctx, const std::string& out) {
  const WorkingPoints w = working_points(ctx.phys);
  Sink s(ctx, out, std::nullopt);
  write_points(s.out(), ctx.phys, w);
  return 0;
}

int cmd_gate_report(Context& ctx, const std::string& scheme, const std::string& detector, const std::string& out) {
  const SchemeConfig sc = scheme_config(parse_scheme(scheme));
  if (detector != "right" && detector != "left") throw Error(ErrorKind::Config, "detector must be left or right");
  const Detector det = detector == "left" ? Detector::Left : Detector::Right;
  const WorkingPoints w = working_points(ctx.phys);
  const AmplitudeSet& a = w.for_rule(sc.rule);
  const GateMatrix g = scheme_gate(sc, a, det);
  const GateMatrix u = scheme_ideal_gate(sc, a, det);
  const FidelityReport r = gate_report(sc, a, det);
  Sink s(ctx, out, std::nullopt);
  std::ostream& os = s.out();
  kv(os, "scheme", name(sc.name));
  kv(os, "detector", name(det));
  kv(os, "frequency_ghz", a.nu_ghz);
  kv(os, "entanglement_fidelity", r.entanglement_fidelity);
  kv(os, "success_probability", r.success_probability);
  kv(os, "mixed_state_pass_probability", pass_probability(a, sc.drive, sc.polarizer, sc.extinction));
  kv(os, "unitarity_defect", r.unitarity_defect);
  write_gate(os, "actual", g.m);
  write_gate(os, "ideal", u.m);
  return 0;
}

int cmd_trajectories(Context& ctx, const TrajectoryArgs& t, const std::string& out) {
  const double window = parse_window(t.window);
  std::optional<std::array<double, 4>> per_nv;
  if (!t.per_nv.empty()) {
    const auto v = parse_list(t.per_nv);
    if (v.size() != 4) throw Error(ErrorKind::Config, "--per-nv takes four amplitudes");
    per_nv = std::array<double, 4>{v[0], v[1], v[2], v[3]};
  }
  const InputState in = parse_input(t.input);
  const GateModel model =
      make_model(ctx.phys, t.scheme, in, t.eta, {t.two_detectors, t.leakage}, per_nv, nullptr);
  TrajectoryConfig cfg{window, t.n, t.seed, t.threads};
  const auto runs = run_trajectories(model, cfg);
  const EnsembleResult r = summarize(runs);
  {
    Sink s(ctx, out, t.seed);
    s.out() << ensemble_header;
    write_ensemble_row(s.out(), t.scheme, name(in), t.eta, window, r);
  }
  if (!t.dump.empty()) {
    Sink d(ctx, t.dump, t.seed);
    d.out() << "index,detected,leaked,time,lost_jumps,detector,fidelity\n";
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& o = runs[k];
      d.out() << k << ',' << o.detected << ',' << o.leaked << ',' << num(o.time) << ',' << o.lost_jumps << ','
              << name(o.detector) << ',' << num(o.fidelity) << "\n";
    }
  }
  return 0;
}

int cmd_table3(Context& ctx, std::size_t n, std::uint64_t seed, double eta, double window, unsigned threads,
               const std::string& out) {
  const WorkingPoints w = working_points(ctx.phys);
  Sink s(ctx, out, seed);
  std::ostream& os = s.out();
  os << "# window=instant rows: heralded gate applied once with perfect collection\n";
  os << ensemble_header;
  for (SchemeName sn : {SchemeName::M1, SchemeName::M2, SchemeName::M3, SchemeName::B1}) {
    const SchemeConfig sc = scheme_config(sn);
    const AmplitudeSet& a = w.for_rule(sc.rule);
    for (InputState in : {InputState::Psi1, InputState::Psi2, InputState::Psi3}) {
      const GateModel model = scheme_model(sc, a, eta, input_state(in));
      EnsembleResult perfect;
      perfect.mean_fidelity = instant_fidelity(scheme_gate(sc, a, Detector::Right), model.input, model.target[0]);
      perfect.fidelity_stderr = 0.0;
      perfect.success_probability = 1.0;
      os << name(sn) << ',' << name(in) << ",1,instant,0,0," << num(perfect.mean_fidelity) << ",0,1\n";
      for (double win : {std::numeric_limits<double>::infinity(), window}) {
        const EnsembleResult r = ensemble(model, {win, n, seed, threads});
        write_ensemble_row(os, name(sn), name(in), eta, win, r);
      }
    }
  }
  return 0;
}

int cmd_table4(Context& ctx, const std::string& out) {
  const WorkingPoints w = working_points(ctx.phys);
  const Table4 t = table4(ctx.phys, w);
  const Table4 t2 = table4(ctx.phys, w, 2.0);
  Sink s(ctx, out, std::nullopt);
  std::ostream& os = s.out();
  kv(os, "gamma0_mhz", t.gamma0_mhz);
  kv(os, "gamma_nr_mhz", t.gamma_nr_mhz);
  kv(os, "gamma_t_mhz", t.gamma_t_mhz);
  kv(os, "rabi_ghz", t.rabi_ghz);
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    const auto& r = t.rows[k];
    kv(os, r.label + "_delta_ghz", r.reference_delta_ghz);
    kv(os, r.label + "_ratio", r.reference_ratio);
    kv(os, r.label + "_scheme_delta_ghz", r.scheme_delta_ghz);
    kv(os, r.label + "_scheme_ratio", r.scheme_ratio);
    kv(os, r.label + "_ratio_at_double_field", t2.rows[k].reference_ratio);
  }
  return 0;
}

void write_shift(std::ostream& os, const std::vector<LevelShiftRow>& rows, bool header) {
  if (header) os << "level,shift_ghz,magic_ghz,magic_shift_ghz,abs_Ap2,abs_Ap3,abs_Af2,abs_Af3,F_M1,F_M2,F_M3,P_M2\n";
  for (const auto& r : rows)
    os << r.level << ',' << num(r.shift_ghz) << ',' << num(r.magic_ghz) << ',' << num(r.magic_shift_ghz) << ','
       << num(r.abs_ap2) << ',' << num(r.abs_ap3) << ',' << num(r.abs_af2) << ',' << num(r.abs_af3) << ','
       << num(r.fid.m1) << ',' << num(r.fid.m2) << ',' << num(r.fid.m3) << ',' << num(r.fid.m2_success) << "\n";
}

void write_mismatch(std::ostream& os, const std::vector<MismatchRow>& rows) {
  os << "o_x,abs_Ap2x,abs_Af2x,abs_Af3x,preserving_angle_deg,orthogonality,F_M1,F_M2,F_M3,P_M2\n";
  for (const auto& r : rows)
    os << num(r.o_x) << ',' << num(r.abs_ap2x) << ',' << num(r.abs_af2x) << ',' << num(r.abs_af3x) << ','
       << num(r.preserving_angle_deg) << ',' << num(r.orthogonality) << ',' << num(r.fid.m1) << ','
       << num(r.fid.m2) << ',' << num(r.fid.m3) << ',' << num(r.fid.m2_success) << "\n";
}

void write_strain(std::ostream& os, const std::vector<StrainRow>& rows) {
  os << "strain_ghz,e1_ghz,e2_ghz,e3_ghz,e4_ghz,e5_ghz,e6_ghz,magic_ghz,abs_Ap2,abs_Ap3,abs_Af2,abs_Af3,"
        "preserving_angle_deg,preserving_ellipticity_deg,orthogonality,F_M1,F_M2,F_M3\n";
  for (const auto& r : rows) {
    os << num(r.strength_ghz);
    for (double e : r.energies) os << ',' << num(e);
    os << ',' << num(r.magic_ghz) << ',' << num(r.abs_ap2) << ',' << num(r.abs_ap3) << ',' << num(r.abs_af2) << ','
       << num(r.abs_af3) << ',' << num(r.preserving_angle_deg) << ',' << num(r.preserving_ellipticity_deg) << ','
       << num(r.orthogonality) << ',' << num(r.fid.m1) << ',' << num(r.fid.m2) << ',' << num(r.fid.m3) << "\n";
  }
}

struct PerturbArgs {
  int shift_level = 0;
  std::string shifts;
  bool mismatch = false;
  std::string factors;
  std::string strain;
  std::string values;
  bool unbalanced = false;
  std::string ratios;
};

int cmd_perturb(Context& ctx, const PerturbArgs& p, const std::string& out) {
  const int modes = (p.shift_level != 0) + p.mismatch + !p.strain.empty() + p.unbalanced;
  if (modes != 1)
    throw Error(ErrorKind::Config, "choose exactly one of --shift-level, --dipole-mismatch, --strain, --unbalanced");
  const PhysicsConfig& c = ctx.phys;
  Sink s(ctx, out, std::nullopt);
  std::ostream& os = s.out();
  if (p.shift_level != 0) {
    const auto shifts = p.shifts.empty() ? grid(-1.0, 1.0, 0.1) : parse_list(p.shifts);
    write_shift(os, level_shift_scan(c.levels, c.dipole(), p.shift_level, shifts, c.finder()), true);
  } else if (p.mismatch) {
    const auto factors = p.factors.empty() ? grid(0.8, 1.2, 0.02) : parse_list(p.factors);
    const double nu = find_magic(c.levels, c.dipole(), c.finder());
    write_mismatch(os, mismatch_scan(c.levels, c.dipole(), nu, factors, c.scattering));
  } else if (!p.strain.empty()) {
    if (p.strain != "x" && p.strain != "y") throw Error(ErrorKind::Config, "--strain takes x or y");
    const auto values = p.values.empty() ? grid(-1.0, 1.0, 0.1) : parse_list(p.values);
    write_strain(os, strain_scan(c, p.strain == "x" ? Axis::X : Axis::Y, values));
  } else {
    const auto ratios = p.ratios.empty() ? grid(0.0, 0.2, 0.02) : parse_list(p.ratios);
    os << "pattern,delta_over_A,exact_F,expansion_F\n";
    for (const auto& r : unbalanced_scan(ratios))
      os << r.pattern << ',' << num(r.ratio) << ',' << num(r.exact) << ',' << num(r.expansion) << "\n";
  }
  return 0;
}

struct CollectionArgs {
  std::string modes;
  double x = 0.0, y = 0.0;
  std::string dipole = "x";
  std::string write_synthetic;
};

int cmd_collection(Context& ctx, const CollectionArgs& a, const std::string& out) {
  if (!a.write_synthetic.empty()) {
    std::ofstream f(a.write_synthetic);
    if (!f) throw Error(ErrorKind::Config, "cannot write " + a.write_synthetic);
    f << "# synthetic Gaussian mode set: two guided modes over a triangular core, one non-guided mode\n";
    write_modes(f, synthetic_modes());
    return 0;
  }
  const std::string path = a.modes.empty() ? std::string(NVGATE_DATA_DIR) + "/synthetic_modes.txt" : a.modes;
  const ModeProfile p = load_modes(path);
  Eigen::Vector3d d;
  if (a.dipole == "x") d = Eigen::Vector3d::UnitX();
  else if (a.dipole == "y") d = Eigen::Vector3d::UnitY();
  else if (a.dipole == "z") d = Eigen::Vector3d::UnitZ();
  else {
    const auto v = parse_list(a.dipole);
    if (v.size() != 3) throw Error(ErrorKind::Config, "--dipole takes x, y, z or three components");
    d = Eigen::Vector3d(v[0], v[1], v[2]);
  }
  const CollectionResult r = collection_efficiency(p, a.x, a.y, d);
  Sink s(ctx, out, std::nullopt);
  std::ostream& os = s.out();
  kv(os, "modes_file", std::filesystem::path(path).filename().string());
  kv(os, "mode_count", double(p.modes.size()));
  kv(os, "guided_modes", double(p.guided_count()));
  for (const auto& m : p.modes)
    if (m.guided) kv(os, "mode" + std::to_string(m.index) + "_neff", m.n_eff);
  kv(os, "normalization_residual", normalization_residual(p));
  kv(os, "collection_efficiency", r.eta);
  kv(os, "relative_to_supplied_set", r.relative_to_supplied_set ? "1" : "0");
  if (r.relative_to_supplied_set) std::cerr << "warning: no non-guided modes supplied; efficiency is relative\n";
  if (p.guided_count() >= 2) {
    try {
      const BalancedCoupling b = find_balanced_coupling(p);
      kv(os, "balanced_x_um", b.x_um);
      kv(os, "balanced_y_um", b.y_um);
      kv(os, "balanced_u_per_um", b.u_per_um);
    } catch (const Error& e) {
      kv(os, "balanced_coupling", std::string("none: ") + e.what());
    }
  }
  return 0;
}

int emit_figure_data(Context& ctx, const std::string& dir, std::size_t n, std::uint64_t seed, unsigned threads) {
  std::filesystem::create_directories(dir);
  auto file = [&](const std::string& f) { return (std::filesystem::path(dir) / f).string(); };
  const PhysicsConfig& c = ctx.phys;
  const WorkingPoints w = working_points(c);
  const auto [mn, mx] = std::minmax_element(c.levels.excited_ghz.begin(), c.levels.excited_ghz.end());
  for (Axis a : {Axis::X, Axis::Y}) {
    Sink s(ctx, file(std::string("sweep_") + name(a) + ".csv"), std::nullopt);
    write_sweep(s.out(), sweep(c.levels, c.dipole(), *mn - 5.0, *mx + 5.0, 0.01, a, c.scattering));
  }
  {
    Sink s(ctx, file("points.txt"), std::nullopt);
    write_points(s.out(), c, w);
  }
  {
    Sink s(ctx, file("fig7a_eta.csv"), seed);
    s.out() << ensemble_header;
    for (double eta : grid(0.4, 1.0, 0.05)) {
      const GateModel m = idealized_model(eta, input_state(InputState::Psi1));
      write_ensemble_row(s.out(), "ideal", "psi1", eta, std::numeric_limits<double>::infinity(),
                         ensemble(m, {std::numeric_limits<double>::infinity(), n, seed, threads}));
    }
  }
  {
    Sink s(ctx, file("fig7bc_window.csv"), seed);
    s.out() << ensemble_header;
    const GateModel m = idealized_model(0.85, input_state(InputState::Psi1));
    for (double win : {0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0})
      write_ensemble_row(s.out(), "ideal", "psi1", 0.85, win, ensemble(m, {win, n, seed, threads}));
  }
  {
    Sink s(ctx, file("fig9_level_shift.csv"), std::nullopt);
    for (int j = 1; j <= 6; ++j)
      write_shift(s.out(), level_shift_scan(c.levels, c.dipole(), j, grid(-1.0, 1.0, 0.05), c.finder()), j == 1);
  }
  {
    Sink s(ctx, file("fig10_mismatch.csv"), std::nullopt);
    write_mismatch(s.out(), mismatch_scan(c.levels, c.dipole(), w.magic_ghz, grid(0.8, 1.2, 0.01), c.scattering));
  }
  for (Axis a : {Axis::X, Axis::Y}) {
    Sink s(ctx, file(std::string("fig11_strain_") + name(a) + ".csv"), std::nullopt);
    write_strain(s.out(), strain_scan(c, a, grid(-1.0, 1.0, 0.05)));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measurement-heralded two-qubit gates between NV centers"};
  app.set_version_flag("--version", std::string(NVGATE_VERSION));
  Context ctx;
  for (int i = 0; i < argc; ++i) ctx.command += (i ? " " : "") + std::string(i ? argv[i] : "nvgate");

  std::string out;
  std::string figure_dir;
  std::size_t figure_n = 2000;
  std::uint64_t figure_seed = 1;
  unsigned threads = 0;
  app.add_option("--config", ctx.config_path, "physics config file")->capture_default_str();
  app.add_option("--set", ctx.overrides, "override a config key (key=value), repeatable");
  app.add_option("--emit-figure-data", figure_dir, "write the CSV set consumed by the figure renderer");
  app.add_option("--figure-n", figure_n, "trajectories per figure point")->capture_default_str();
  app.add_option("--figure-seed", figure_seed, "seed for figure trajectories")->capture_default_str();
  app.add_option("--threads", threads, "worker threads for trajectories (0 = all cores)");

  auto* sw = app.add_subcommand("sweep", "amplitude magnitudes versus drive frequency");
  std::string axis = "x";
  std::optional<double> lo, hi;
  double step = 0.01;
  sw->add_option("--axis", axis, "drive axis x|y")->capture_default_str();
  sw->add_option("--lo", lo, "lower frequency, GHz");
  sw->add_option("--hi", hi, "upper frequency, GHz");
  sw->add_option("--step", step, "grid step, GHz")->capture_default_str();
  sw->add_option("--out", out, "output file (default stdout)");

  auto* fp = app.add_subcommand("find-points", "magic and balance frequencies");
  fp->add_option("--out", out, "output file");

  auto* gr = app.add_subcommand("gate-report", "conditional gate, fidelity, success probability");
  std::string scheme = "M1", detector = "right";
  gr->add_option("scheme", scheme, "M1|M2|M3|B1")->required();
  gr->add_option("--detector", detector, "left|right")->capture_default_str();
  gr->add_option("--out", out, "output file");

  auto* tr = app.add_subcommand("trajectories", "Monte Carlo ensemble for one scheme and input");
  TrajectoryArgs ta;
  tr->add_option("--scheme", ta.scheme, "M1|M2|M3|B1|ideal")->capture_default_str();
  tr->add_option("--input", ta.input, "psi1|psi2|psi3")->capture_default_str();
  tr->add_option("--eta", ta.eta, "detection efficiency")->capture_default_str();
  tr->add_option("--window", ta.window, "collection window in 1/Gamma_f, or inf")->capture_default_str();
  tr->add_option("--n", ta.n, "trajectories")->capture_default_str();
  tr->add_option("--seed", ta.seed, "64-bit seed")->capture_default_str();
  tr->add_flag("--two-detectors", ta.two_detectors, "split photons between left and right detectors");
  tr->add_flag("--leakage", ta.leakage, "include leakage to g1 as absorbing loss");
  tr->add_option("--per-nv", ta.per_nv, "A(1)_1,A(1)_2,A(2)_1,A(2)_2 flip-only amplitudes (ideal scheme)");
  tr->add_option("--dump", ta.dump, "per-trajectory CSV");
  tr->add_option("--out", out, "output file");

  auto* t3 = app.add_subcommand("table3", "fidelity and success grid for all schemes and inputs");
  std::size_t t3n = 10000;
  std::uint64_t t3seed = 1;
  double t3eta = 0.85, t3win = 0.1;
  t3->add_option("--n", t3n, "trajectories per cell")->capture_default_str();
  t3->add_option("--seed", t3seed, "seed")->capture_default_str();
  t3->add_option("--eta", t3eta, "detection efficiency")->capture_default_str();
  t3->add_option("--window", t3win, "finite window in 1/Gamma_f")->capture_default_str();
  t3->add_option("--out", out, "output file");

  auto* t4 = app.add_subcommand("table4", "non-radiative loss ratios");
  t4->add_option("--out", out, "output file");

  auto* pt = app.add_subcommand("perturb", "tolerance scans");
  PerturbArgs pa;
  pt->add_option("--shift-level", pa.shift_level, "excited level 1..6 to shift");
  pt->add_option("--shifts", pa.shifts, "comma-separated shifts, GHz");
  pt->add_flag("--dipole-mismatch", pa.mismatch, "scan the x dipole scale factor");
  pt->add_option("--factors", pa.factors, "comma-separated mismatch factors");
  pt->add_option("--strain", pa.strain, "strain axis x|y");
  pt->add_option("--values", pa.values, "comma-separated strain strengths, GHz");
  pt->add_flag("--unbalanced", pa.unbalanced, "exact versus second-order fidelity of unbalanced gates");
  pt->add_option("--ratios", pa.ratios, "comma-separated delta/A values");
  pt->add_option("--out", out, "output file");

  auto* co = app.add_subcommand("collection", "waveguide mode analysis");
  CollectionArgs ca;
  co->add_option("--modes", ca.modes, "mode file (default: bundled synthetic set)");
  co->add_option("--x", ca.x, "position x, um");
  co->add_option("--y", ca.y, "position y, um");
  co->add_option("--dipole", ca.dipole, "x|y|z or three components");
  co->add_option("--write-synthetic", ca.write_synthetic, "write the synthetic mode set and exit");
  co->add_option("--out", out, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    ctx.load();
    if (!figure_dir.empty()) emit_figure_data(ctx, figure_dir, figure_n, figure_seed, threads);
    ta.threads = threads;
    if (*sw) return cmd_sweep(ctx, axis, lo, hi, step, out);
    if (*fp) return cmd_find_points(ctx, out);
    if (*gr) return cmd_gate_report(ctx, scheme, detector, out);
    if (*tr) return cmd_trajectories(ctx, ta, out);
    if (*t3) return cmd_table3(ctx, t3n, t3seed, t3eta, t3win, threads, out);
    if (*t4) return cmd_table4(ctx, out);
    if (*pt) return cmd_perturb(ctx, pa, out);
    if (*co) return cmd_collection(ctx, ca, out);
    if (figure_dir.empty()) {
      std::cerr << app.help();
      return 2;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_input_error() ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
