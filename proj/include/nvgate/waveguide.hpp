#pragma once

#include "nvgate/types.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace nvgate {

struct Mode {
  int index = 0;
  bool guided = false;
  double n_eff = 0.0;
  std::vector<Vec3c> field;  // [iy * nx + ix], units um^-1
};

struct ModeProfile {
  std::vector<double> xs, ys;  // um, ascending
  std::vector<double> eps;     // relative permittivity per point
  std::vector<Mode> modes;

  std::size_t nx() const { return xs.size(); }
  std::size_t ny() const { return ys.size(); }
  std::size_t at(std::size_t ix, std::size_t iy) const { return iy * xs.size() + ix; }

  std::size_t guided_count() const {
    return static_cast<std::size_t>(std::count_if(modes.begin(), modes.end(), [](const Mode& m) { return m.guided; }));
  }
};

namespace detail {

inline std::vector<double> trapezoid_weights(const std::vector<double>& g) {
  std::vector<double> w(g.size(), 0.0);
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const double h = g[i + 1] - g[i];
    w[i] += 0.5 * h;
    w[i + 1] += 0.5 * h;
  }
  return w;
}

}  // namespace detail

// Gram matrix of the modes under the permittivity-weighted overlap.
inline Eigen::MatrixXcd mode_overlaps(const ModeProfile& p) {
  const auto wx = detail::trapezoid_weights(p.xs);
  const auto wy = detail::trapezoid_weights(p.ys);
  const auto n = static_cast<Eigen::Index>(p.modes.size());
  Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t iy = 0; iy < p.ny(); ++iy)
    for (std::size_t ix = 0; ix < p.nx(); ++ix) {
      const std::size_t k = p.at(ix, iy);
      const double w = wx[ix] * wy[iy] * p.eps[k];
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = a; b < n; ++b) g(a, b) += w * p.modes[a].field[k].dot(p.modes[b].field[k]);
    }
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < a; ++b) g(a, b) = std::conj(g(b, a));
  return g;
}

inline double normalization_residual(const ModeProfile& p) {
  const Eigen::MatrixXcd g = mode_overlaps(p);
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

inline void validate_modes(const ModeProfile& p, double tol = 0.01) {
  const double r = normalization_residual(p);
  if (!(r < tol)) {
    std::ostringstream os;
    os << "mode normalization residual " << r << " exceeds " << tol;
    throw Error(ErrorKind::Validation, os.str());
  }
}

inline ModeProfile renormalize(ModeProfile p) {
  const Eigen::MatrixXcd g = mode_overlaps(p);
  for (std::size_t m = 0; m < p.modes.size(); ++m) {
    const double n = std::sqrt(g(m, m).real());
    if (!(n > 0.0)) throw Error(ErrorKind::Validation, "mode with zero norm");
    for (auto& e : p.modes[m].field) e /= n;
  }
  return p;
}

// Plain-text mode export: "# mode <k> guided <0|1> neff <val>" headers, each
// followed by rows "x y eps Ex_re Ex_im Ey_re Ey_im Ez_re Ez_im". Row order
// is irrelevant.
inline ModeProfile parse_modes(std::istream& in, bool validate = true) {
  struct Row {
    double x, y, eps;
    Vec3c e;
  };
  struct Block {
    Mode mode;
    std::vector<Row> rows;
  };
  std::vector<Block> blocks;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      std::istringstream hs(line.substr(first + 1));
      std::string kw;
      hs >> kw;
      if (kw != "mode") continue;
      Block b;
      std::string g, ne;
      int guided = 0;
      if (!(hs >> b.mode.index >> g >> guided >> ne >> b.mode.n_eff) || g != "guided" || ne != "neff" ||
          (guided != 0 && guided != 1))
        throw Error(ErrorKind::Parse, "malformed mode header at line " + std::to_string(lineno));
      b.mode.guided = guided == 1;
      blocks.push_back(std::move(b));
      continue;
    }
    if (blocks.empty()) throw Error(ErrorKind::Parse, "data row before any mode header at line " + std::to_string(lineno));
    std::istringstream rs(line);
    double v[9];
    for (double& d : v)
      if (!(rs >> d)) throw Error(ErrorKind::Parse, "malformed data row at line " + std::to_string(lineno));
    std::string extra;
    if (rs >> extra) throw Error(ErrorKind::Parse, "trailing fields at line " + std::to_string(lineno));
    blocks.back().rows.push_back({v[0], v[1], v[2], Vec3c(cplx(v[3], v[4]), cplx(v[5], v[6]), cplx(v[7], v[8]))});
  }
  if (blocks.empty()) throw Error(ErrorKind::Parse, "no modes in file");

  ModeProfile p;
  for (const auto& r : blocks.front().rows) {
    p.xs.push_back(r.x);
    p.ys.push_back(r.y);
  }
  for (auto* g : {&p.xs, &p.ys}) {
    std::sort(g->begin(), g->end());
    g->erase(std::unique(g->begin(), g->end()), g->end());
  }
  const std::size_t npts = p.xs.size() * p.ys.size();
  p.eps.assign(npts, std::nan(""));
  auto locate = [](const std::vector<double>& g, double v) {
    const auto it = std::lower_bound(g.begin(), g.end(), v);
    if (it == g.end() || *it != v) throw Error(ErrorKind::Parse, "grid is not rectangular");
    return static_cast<std::size_t>(it - g.begin());
  };
  std::map<int, bool> seen;
  for (auto& b : blocks) {
    if (seen[b.mode.index]) throw Error(ErrorKind::Parse, "duplicate mode index " + std::to_string(b.mode.index));
    seen[b.mode.index] = true;
    if (b.rows.size() != npts) throw Error(ErrorKind::Parse, "grid is not rectangular");
    b.mode.field.assign(npts, Vec3c::Constant(cplx(std::nan(""), 0.0)));
    std::vector<bool> filled(npts, false);
    for (const auto& r : b.rows) {
      const std::size_t k = p.at(locate(p.xs, r.x), locate(p.ys, r.y));
      if (filled[k]) throw Error(ErrorKind::Parse, "duplicate grid point in mode " + std::to_string(b.mode.index));
      filled[k] = true;
      if (std::isnan(p.eps[k]))
        p.eps[k] = r.eps;
      else if (std::abs(p.eps[k] - r.eps) > 1e-9 * std::max(1.0, std::abs(r.eps)))
        throw Error(ErrorKind::Parse, "permittivity differs between modes at one grid point");
      b.mode.field[k] = r.e;
    }
    p.modes.push_back(std::move(b.mode));
  }
  std::sort(p.modes.begin(), p.modes.end(), [](const Mode& a, const Mode& b) { return a.index < b.index; });
  if (validate) validate_modes(p);
  return p;
}

inline ModeProfile load_modes(const std::string& path, bool validate = true) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot open mode file " + path);
  return parse_modes(in, validate);
}

inline void write_modes(std::ostream& out, const ModeProfile& p) {
  out << std::setprecision(12);
  for (const auto& m : p.modes) {
    out << "# mode " << m.index << " guided " << (m.guided ? 1 : 0) << " neff " << m.n_eff << '\n';
    for (std::size_t iy = 0; iy < p.ny(); ++iy)
      for (std::size_t ix = 0; ix < p.nx(); ++ix) {
        const std::size_t k = p.at(ix, iy);
        const Vec3c& e = m.field[k];
        out << p.xs[ix] << ' ' << p.ys[iy] << ' ' << p.eps[k];
        for (int c = 0; c < 3; ++c) out << ' ' << e(c).real() << ' ' << e(c).imag();
        out << '\n';
      }
  }
}

// Bilinear interpolation of every mode's field at (x, y).
inline std::vector<Vec3c> fields_at(const ModeProfile& p, double x, double y) {
  if (p.nx() < 2 || p.ny() < 2 || x < p.xs.front() || x > p.xs.back() || y < p.ys.front() || y > p.ys.back())
    throw Error(ErrorKind::Domain, "position outside the mode grid");
  auto cell = [](const std::vector<double>& g, double v) {
    std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), v) - g.begin());
    i = std::clamp<std::size_t>(i, 1, g.size() - 1) - 1;
    return std::pair{i, (v - g[i]) / (g[i + 1] - g[i])};
  };
  const auto [ix, tx] = cell(p.xs, x);
  const auto [iy, ty] = cell(p.ys, y);
  std::vector<Vec3c> out;
  for (const auto& m : p.modes)
    out.push_back((1 - tx) * (1 - ty) * m.field[p.at(ix, iy)] + tx * (1 - ty) * m.field[p.at(ix + 1, iy)] +
                  (1 - tx) * ty * m.field[p.at(ix, iy + 1)] + tx * ty * m.field[p.at(ix + 1, iy + 1)]);
  return out;
}

struct CollectionResult {
  double eta = 0.0;
  // No non-guided modes were supplied, so eta is relative to the guided set only.
  bool relative_to_supplied_set = false;
};

inline CollectionResult collection_efficiency(const ModeProfile& p, double x_um, double y_um, const Eigen::Vector3d& dipole_axis) {
  if (!(dipole_axis.norm() > 0.0)) throw Error(ErrorKind::Domain, "dipole axis must be non-zero");
  const Eigen::Vector3cd d = dipole_axis.normalized().cast<cplx>();
  const auto e = fields_at(p, x_um, y_um);
  double num = 0.0, den = 0.0;
  bool any_unguided = false;
  for (std::size_t m = 0; m < p.modes.size(); ++m) {
    const double c = std::norm(e[m].dot(d.conjugate()));
    den += c;
    if (p.modes[m].guided) num += c;
    else any_unguided = true;
  }
  if (!(den > 0.0)) throw Error(ErrorKind::Domain, "no mode couples to this dipole at this position");
  return {num / den, !any_unguided};
}

struct BalancedCoupling {
  double x_um = 0.0;
  double y_um = 0.0;
  double u_per_um = 0.0;
};

// Point on the x = 0 slice where |Ex| of the first guided mode equals |Ey| of
// the second; the crossing with the strongest coupling wins.
inline BalancedCoupling find_balanced_coupling(const ModeProfile& p) {
  std::vector<const Mode*> guided;
  for (const auto& m : p.modes)
    if (m.guided) guided.push_back(&m);
  if (guided.size() < 2) throw Error(ErrorKind::Domain, "balanced coupling needs two guided modes");
  std::size_t m1 = 0, m2 = 0;
  for (std::size_t k = 0; k < p.modes.size(); ++k) {
    if (&p.modes[k] == guided[0]) m1 = k;
    if (&p.modes[k] == guided[1]) m2 = k;
  }
  auto diff = [&](double y) {
    const auto e = fields_at(p, 0.0, y);
    return std::pair{std::abs(e[m1](0)) - std::abs(e[m2](1)), std::abs(e[m1](0))};
  };
  std::optional<BalancedCoupling> best;
  auto consider = [&](double y) {
    const double u = diff(y).second;
    if (u > 0.0 && (!best || u > best->u_per_um)) best = BalancedCoupling{0.0, y, u};
  };
  for (std::size_t i = 0; i + 1 < p.ny(); ++i) {
    double a = p.ys[i], b = p.ys[i + 1];
    double fa = diff(a).first, fb = diff(b).first;
    if (fa == 0.0) consider(a);
    if (fa * fb >= 0.0) continue;
    for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
      const double m = 0.5 * (a + b);
      const double fm = diff(m).first;
      if ((fm < 0.0) == (fa < 0.0)) {
        a = m;
        fa = fm;
      } else {
        b = m;
      }
    }
    consider(0.5 * (a + b));
  }
  if (diff(p.ys.back()).first == 0.0) consider(p.ys.back());
  if (!best) throw Error(ErrorKind::NoBracket, "no balanced-coupling crossing on the x = 0 slice");
  return *best;
}

struct SyntheticModeOptions {
  int n = 41;
  double half_width_um = 1.0;
  double waist_um = 0.25;
  double offset_um = 0.12;  // the two guided modes sit at y = -+offset
  double n_eff = 1.58;
  double eps_core = 2.4 * 2.4;
};

// Gaussian stand-in for a solver export: an x-polarized and a y-polarized
// guided mode over a triangular diamond core, plus one non-guided mode that is
// orthogonal to both by parity.
inline ModeProfile synthetic_modes(const SyntheticModeOptions& o = {}) {
  ModeProfile p;
  for (int i = 0; i < o.n; ++i) {
    const double v = o.half_width_um * (2 * i - (o.n - 1)) / (o.n - 1);
    p.xs.push_back(v);
    p.ys.push_back(v);
  }
  const std::size_t npts = p.xs.size() * p.ys.size();
  p.eps.resize(npts);
  const double apex = 0.5, base = -0.4, half_base = 0.45;
  for (std::size_t iy = 0; iy < p.ny(); ++iy)
    for (std::size_t ix = 0; ix < p.nx(); ++ix) {
      const double x = p.xs[ix], y = p.ys[iy];
      const bool inside = y >= base && y <= apex && std::abs(x) <= half_base * (apex - y) / (apex - base);
      p.eps[p.at(ix, iy)] = inside ? o.eps_core : 1.0;
    }
  auto gauss = [&](double x, double y, double y0, double w) {
    return std::exp(-(x * x + (y - y0) * (y - y0)) / (w * w));
  };
  Mode a{1, true, o.n_eff, {}}, b{2, true, o.n_eff, {}}, c{3, false, 1.0, {}};
  for (std::size_t iy = 0; iy < p.ny(); ++iy)
    for (std::size_t ix = 0; ix < p.nx(); ++ix) {
      const double x = p.xs[ix], y = p.ys[iy];
      a.field.emplace_back(gauss(x, y, o.offset_um, o.waist_um), 0.0, 0.0);
      b.field.emplace_back(0.0, gauss(x, y, -o.offset_um, o.waist_um), 0.0);
      const double w = 2.0 * o.waist_um;
      c.field.emplace_back(x / w * gauss(x, y, 0.0, w), 0.0, cplx(0.0, 0.5 * gauss(x, y, 0.0, w)));
    }
  p.modes = {a, b, c};
  return renormalize(p);
}

}  // namespace nvgate
