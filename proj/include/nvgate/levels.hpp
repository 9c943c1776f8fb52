#pragma once

#include "nvgate/types.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace nvgate {

inline constexpr double zero_field_splitting_ghz = 2.87;

struct LevelScheme {
  // g1, g2, g3; the qubit pair g2/g3 sits at the origin of the ground manifold
  std::array<double, 3> ground_ghz{-zero_field_splitting_ghz, 0.0, 0.0};
  // e1..e6 in the spin-spin eigenbasis, relative to the optical origin
  std::array<double, 6> excited_ghz{};
  double optical_gap_thz = 470.4;

  // Detuning of excited level j (0-based) for a drive at nu_ghz starting from `from`.
  double detuning(int j, double nu_ghz, Ground from = Ground::G2) const {
    return excited_ghz[j] - ground_ghz[index(from)] - nu_ghz;
  }

  double min_abs_detuning(double nu_ghz) const {
    double m = std::abs(detuning(0, nu_ghz));
    for (int j = 1; j < 6; ++j) m = std::min(m, std::abs(detuning(j, nu_ghz)));
    return m;
  }

  LevelScheme with_shift(int j, double delta_ghz) const {
    LevelScheme s = *this;
    s.excited_ghz[j] += delta_ghz;
    return s;
  }

  LevelScheme with_offset(double delta_ghz) const {
    LevelScheme s = *this;
    for (auto& e : s.excited_ghz) e += delta_ghz;
    return s;
  }

  void validate() const {
    if (ground_ghz[1] != ground_ghz[2])
      throw Error(ErrorKind::Validation, "ground levels g2 and g3 must be degenerate");
    for (double e : excited_ghz)
      if (!std::isfinite(e)) throw Error(ErrorKind::Validation, "non-finite excited energy");
  }

  bool pairs_degenerate(double tol = 1e-12) const {
    return std::abs(excited_ghz[0] - excited_ghz[1]) <= tol && std::abs(excited_ghz[2] - excited_ghz[3]) <= tol;
  }
};

// Entry (i, j) is <g_i| p |e_j> in units of p0.
struct DipoleMatrix {
  std::array<std::array<Vec3c, 6>, 3> entries;
  double p0_debye = 5.2;

  DipoleMatrix() {
    for (auto& row : entries)
      for (auto& v : row) v.setZero();
  }

  Vec3c& at(Ground g, int j) { return entries[index(g)][j]; }
  const Vec3c& at(Ground g, int j) const { return entries[index(g)][j]; }

  // Largest |<g2|p|e_j>^* . <g3|p|e_j>| over j.
  double orthogonality_residual() const {
    double r = 0.0;
    for (int j = 0; j < 6; ++j) r = std::max(r, std::abs(at(Ground::G2, j).dot(at(Ground::G3, j))));
    return r;
  }

  double max_abs_difference(const DipoleMatrix& o) const {
    double r = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 6; ++j) r = std::max(r, (entries[i][j] - o.entries[i][j]).cwiseAbs().maxCoeff());
    return r;
  }
};

struct FCoefficients {
  double f11 = 0.0513;
  double f12 = 0.9987;
  double f21 = 0.7062;
  double f22 = 0.0363;
  double f23 = 1.0 / std::sqrt(2.0);
};

namespace detail {
inline Vec3c vx(double a) { return Vec3c(a, 0.0, 0.0); }
inline Vec3c vy(double a) { return Vec3c(0.0, a, 0.0); }
}  // namespace detail

inline DipoleMatrix build_so_dipole() {
  using detail::vx;
  using detail::vy;
  const double h = 1.0 / std::sqrt(2.0);
  DipoleMatrix d;
  d.at(Ground::G1, 2) = vx(1.0);
  d.at(Ground::G1, 3) = vy(1.0);

  d.at(Ground::G2, 0) = vx(-h);
  d.at(Ground::G2, 1) = vy(h);
  d.at(Ground::G2, 4) = vy(-h);
  d.at(Ground::G2, 5) = vx(h);

  d.at(Ground::G3, 0) = vy(h);
  d.at(Ground::G3, 1) = vx(h);
  d.at(Ground::G3, 4) = vx(h);
  d.at(Ground::G3, 5) = vy(h);
  return d;
}

inline DipoleMatrix build_ss_dipole(const FCoefficients& f = {}) {
  using detail::vx;
  using detail::vy;
  DipoleMatrix d;
  d.at(Ground::G1, 0) = vx(-f.f11);
  d.at(Ground::G1, 1) = vy(-f.f11);
  d.at(Ground::G1, 2) = vx(f.f12);
  d.at(Ground::G1, 3) = vy(f.f12);

  d.at(Ground::G2, 0) = vx(-f.f21);
  d.at(Ground::G2, 1) = vy(f.f21);
  d.at(Ground::G2, 2) = vx(-f.f22);
  d.at(Ground::G2, 3) = vy(f.f22);
  d.at(Ground::G2, 4) = vy(-f.f23);
  d.at(Ground::G2, 5) = vx(f.f23);

  d.at(Ground::G3, 0) = vy(f.f21);
  d.at(Ground::G3, 1) = vx(f.f21);
  d.at(Ground::G3, 2) = vy(f.f22);
  d.at(Ground::G3, 3) = vx(f.f22);
  d.at(Ground::G3, 4) = vx(f.f23);
  d.at(Ground::G3, 5) = vy(f.f23);
  return d;
}

// Real rotation between the spin-orbit and spin-spin excited bases.
// u_dag(k, j) is the SO component k of spin-spin state j.
struct UnitaryMixing {
  Mat6 u_dag = Mat6::Identity();
  double theta = 0.0;

  Mat6 u() const { return u_dag.transpose(); }
};

inline UnitaryMixing reconstruct_excited_mixing(double f11, double f12) {
  if (std::abs(f11 * f11 + f12 * f12 - 1.0) > 1e-3)
    throw Error(ErrorKind::Domain, "f11^2 + f12^2 must equal 1 within 1e-3");
  if (std::abs(f11) > 1.0) throw Error(ErrorKind::Domain, "|f11| must not exceed 1");
  UnitaryMixing m;
  m.theta = std::asin(f11);
  const double c = std::cos(m.theta), s = std::sin(m.theta);
  m.u_dag.setIdentity();
  m.u_dag(0, 0) = c;
  m.u_dag(1, 1) = c;
  m.u_dag(2, 2) = c;
  m.u_dag(3, 3) = c;
  m.u_dag(0, 2) = s;
  m.u_dag(1, 3) = s;
  m.u_dag(2, 0) = -s;
  m.u_dag(3, 1) = -s;
  return m;
}

// Re-express the dipole matrix on a new excited basis whose states are the
// columns of `basis` (coordinates in the basis `d` is written in).
template <typename Basis>
DipoleMatrix change_excited_basis(const DipoleMatrix& d, const Basis& basis) {
  DipoleMatrix out;
  out.p0_debye = d.p0_debye;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 6; ++j) {
      Vec3c acc = Vec3c::Zero();
      for (int k = 0; k < 6; ++k) acc += d.entries[i][k] * cplx(basis(k, j));
      out.entries[i][j] = acc;
    }
  return out;
}

inline DipoleMatrix apply_dipole_mixing(const DipoleMatrix& so, const UnitaryMixing& mix) {
  return change_excited_basis(so, mix.u_dag);
}

inline DipoleMatrix dipole_mismatch(const DipoleMatrix& d, double o_x) {
  if (!(o_x > 0.0)) throw Error(ErrorKind::Domain, "dipole mismatch factor must be positive");
  DipoleMatrix out = d;
  for (auto& row : out.entries)
    for (auto& v : row) v(0) *= o_x;
  return out;
}

struct StrainConfig {
  Axis axis = Axis::X;
  double strength_ghz = 0.0;
};

// Strain coupling in the spin-orbit excited basis.
inline Mat6 strain_hamiltonian(const StrainConfig& s) {
  const double e = s.strength_ghz;
  Mat6 h = Mat6::Zero();
  if (s.axis == Axis::X) {
    h(0, 5) = h(5, 0) = -e;
    h(1, 4) = h(4, 1) = e;
    h(2, 2) = e;
    h(3, 3) = -e;
  } else {
    h(0, 4) = h(4, 0) = -e;
    h(1, 5) = h(5, 1) = -e;
    h(2, 3) = h(3, 2) = -e;
  }
  return h;
}

struct StrainedScheme {
  LevelScheme levels;
  DipoleMatrix dipole;
  // Column j: perturbed state carrying label e_j, in SO coordinates.
  Mat6 basis = Mat6::Identity();
  Mat6 hamiltonian = Mat6::Zero();
  bool beyond_perturbative = false;
};

inline Mat6 excited_hamiltonian_so(const LevelScheme& levels, const UnitaryMixing& mix, const StrainConfig& strain) {
  Eigen::Matrix<double, 6, 1> eps;
  for (int j = 0; j < 6; ++j) eps(j) = levels.excited_ghz[j];
  return mix.u_dag * eps.asDiagonal() * mix.u() + strain_hamiltonian(strain);
}

namespace detail {

inline void fix_phase(Mat6& v) {
  for (int j = 0; j < 6; ++j) {
    int best = 0;
    for (int k = 1; k < 6; ++k)
      if (std::abs(v(k, j)) > std::abs(v(best, j)) + 1e-12) best = k;
    if (v(best, j) < 0) v.col(j) *= -1.0;
  }
}

// Assign eigenvector columns of `vecs` to reference labels by maximal overlap.
// Degenerate clusters are re-spanned by projecting the reference vectors, so a
// reference already inside a cluster is returned unchanged.
inline Mat6 track_labels(const Mat6& reference, const Eigen::Matrix<double, 6, 1>& vals, const Mat6& vecs,
                         Eigen::Matrix<double, 6, 1>& out_vals) {
  const double scale = std::max(1.0, vals.cwiseAbs().maxCoeff());
  std::array<int, 6> cluster{};
  int nclusters = 0;
  for (int k = 0; k < 6; ++k) {
    if (k > 0 && std::abs(vals(k) - vals(k - 1)) <= 1e-9 * scale)
      cluster[k] = cluster[k - 1];
    else
      cluster[k] = nclusters++;
  }

  std::vector<Mat6> projector(nclusters, Mat6::Zero());
  for (int k = 0; k < 6; ++k) projector[cluster[k]] += vecs.col(k) * vecs.col(k).transpose();

  Eigen::Matrix<double, 6, 6> weight;  // weight(label, slot)
  for (int j = 0; j < 6; ++j)
    for (int k = 0; k < 6; ++k) weight(j, k) = (projector[cluster[k]] * reference.col(j)).squaredNorm();

  std::array<int, 6> perm;
  std::iota(perm.begin(), perm.end(), 0);
  std::array<int, 6> best = perm;
  double best_score = -1.0;
  do {
    double score = 0.0;
    for (int j = 0; j < 6; ++j) score += weight(j, perm[j]);
    if (score > best_score + 1e-12) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  if (best_score < 3.0)
    throw Error(ErrorKind::Tracking, "excited-state labels cannot be tracked from the reference basis");

  Mat6 out = Mat6::Zero();
  std::vector<std::vector<int>> members(nclusters);
  for (int j = 0; j < 6; ++j) members[cluster[best[j]]].push_back(j);
  for (int c = 0; c < nclusters; ++c) {
    const auto& labels = members[c];
    if (labels.size() == 1) {
      for (int k = 0; k < 6; ++k)
        if (cluster[k] == c) out.col(labels[0]) = vecs.col(k);
      continue;
    }
    for (std::size_t a = 0; a < labels.size(); ++a) {
      Eigen::Matrix<double, 6, 1> v = projector[c] * reference.col(labels[a]);
      for (std::size_t b = 0; b < a; ++b) v -= out.col(labels[b]).dot(v) * out.col(labels[b]);
      const double n = v.norm();
      if (n < 1e-8) throw Error(ErrorKind::Tracking, "degenerate excited cluster lost a reference direction");
      out.col(labels[a]) = v / n;
    }
  }
  for (int j = 0; j < 6; ++j) out_vals(j) = vals(best[j]);
  return out;
}

}  // namespace detail

// Diagonalize the strained excited manifold. `reference` holds the label basis
// (SO coordinates) to track against; by default the unperturbed spin-spin states.
inline StrainedScheme apply_strain(const LevelScheme& levels, const DipoleMatrix& dipole_so, const UnitaryMixing& mix,
                                   const StrainConfig& strain, const Mat6* reference = nullptr) {
  if (!(std::abs(strain.strength_ghz) <= 5.0))
    throw Error(ErrorKind::Domain, "strain strength beyond 5 GHz leaves the small-strain regime");
  StrainedScheme out;
  out.beyond_perturbative = std::abs(strain.strength_ghz) > 1.0;
  out.hamiltonian = excited_hamiltonian_so(levels, mix, strain);
  const Mat6 ref = reference ? *reference : mix.u_dag;

  if (strain.strength_ghz == 0.0 && reference == nullptr) {
    out.levels = levels;
    out.basis = mix.u_dag;
    out.dipole = change_excited_basis(dipole_so, out.basis);
    return out;
  }

  Eigen::SelfAdjointEigenSolver<Mat6> es(out.hamiltonian);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "excited Hamiltonian diagonalization failed");
  Eigen::Matrix<double, 6, 1> vals;
  Mat6 basis = detail::track_labels(ref, es.eigenvalues(), es.eigenvectors(), vals);
  detail::fix_phase(basis);

  out.levels = levels;
  for (int j = 0; j < 6; ++j) out.levels.excited_ghz[j] = vals(j);
  out.basis = basis;
  out.dipole = change_excited_basis(dipole_so, basis);
  return out;
}

}  // namespace nvgate
