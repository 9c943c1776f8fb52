#pragma once

#include "nvgate/gates.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace nvgate {

struct JumpChannel {
  Mat4c op = Mat4c::Zero();
  bool detected = false;
  // Population leaves the qubit space (leakage to g1); the run ends as a failure.
  bool absorbing = false;
  Detector detector = Detector::Right;
  std::string label;

  double rate_prefactor() const { return (op.adjoint() * op).trace().real() / 4.0; }
};

struct ChannelSet {
  std::vector<JumpChannel> channels;
  // Average flipping rate used as the time unit.
  double gamma_f = 1.0;
};

struct ChannelOptions {
  bool two_detectors = false;
  bool include_leakage = false;
};

enum class InputState { Psi1, Psi2, Psi3 };

inline Vec4c input_state(InputState s) {
  Vec4c v = Vec4c::Zero();
  switch (s) {
    case InputState::Psi1: v(0) = 1; break;
    case InputState::Psi2: v(1) = 1; break;
    case InputState::Psi3:
      v(0) = 1 / std::sqrt(2.0);
      v(3) = I / std::sqrt(2.0);
      break;
  }
  return v;
}

inline InputState parse_input(std::string_view s) {
  if (s == "psi1" || s == "Psi1") return InputState::Psi1;
  if (s == "psi2" || s == "Psi2") return InputState::Psi2;
  if (s == "psi3" || s == "Psi3") return InputState::Psi3;
  throw Error(ErrorKind::Config, "unknown input state '" + std::string(s) + "'");
}

inline const char* name(InputState s) {
  switch (s) {
    case InputState::Psi1: return "psi1";
    case InputState::Psi2: return "psi2";
    case InputState::Psi3: return "psi3";
  }
  return "?";
}

namespace detail {

inline void check_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorKind::Domain, "detection efficiency must lie in [0, 1]");
}

// Detected light is shared between the detectors; a lost or blocked photon
// keeps the single right-propagating operator, so the no-click dynamics do not
// depend on the detector count.
inline void add_mode(ChannelSet& set, const Mat4c& right, const Mat4c& left, double eta, bool passes,
                     bool two_detectors, const std::string& label) {
  if (right.cwiseAbs().maxCoeff() == 0.0) return;
  if (passes && eta > 0.0) {
    if (two_detectors) {
      const double s = std::sqrt(eta / 2.0);
      set.channels.push_back({s * right, true, false, Detector::Right, label + ":right:detected"});
      set.channels.push_back({s * left, true, false, Detector::Left, label + ":left:detected"});
    } else {
      set.channels.push_back({std::sqrt(eta) * right, true, false, Detector::Right, label + ":detected"});
    }
  }
  if (!passes || eta < 1.0) {
    const double w = passes ? std::sqrt(1.0 - eta) : 1.0;
    set.channels.push_back({w * right, false, false, Detector::Right, label + (passes ? ":lost" : ":blocked")});
  }
}

inline Mat4c nv_local(const Mat2c& a, int nv) {
  return nv == 0 ? ops::kron(a, Mat2c::Identity()) : ops::kron(Mat2c::Identity(), a);
}

}  // namespace detail

// Balanced flip-only channels, unit amplitudes: L = i X(1) + X(2).
inline ChannelSet idealized_channels(double eta, const ChannelOptions& opt = {}) {
  detail::check_eta(eta);
  ChannelSet set;
  detail::add_mode(set, two_nv_gate(ops::X(), Detector::Right).m, two_nv_gate(ops::X(), Detector::Left).m, eta, true,
                   opt.two_detectors, "flip");
  set.gamma_f = 1.0;
  return set;
}

// Scheme channels from the full scattering response. Photons from both NVs
// into the same detector and polarization mode interfere; the polarizer
// passes mode p and blocks p-perp.
inline ChannelSet build_channels(const SchemeConfig& scheme, const AmplitudeSet& amps, double eta,
                                 const std::optional<std::array<double, 4>>& per_nv = std::nullopt,
                                 const ChannelOptions& opt = {}) {
  detail::check_eta(eta);
  const double a1 = std::abs(amps.flipping(Axis::X, Ground::G2));
  const double a2 = std::abs(amps.flipping(Axis::X, Ground::G3));
  ChannelSet set;

  if (per_nv) {
    for (double v : *per_nv)
      if (!(v > 0.0)) throw Error(ErrorKind::Domain, "per-NV amplitudes must be positive");
    Mat2c t1, t2;
    t1 << 0, (*per_nv)[1], (*per_nv)[0], 0;
    t2 << 0, (*per_nv)[3], (*per_nv)[2], 0;
    double g = 0.0;
    for (double v : *per_nv) g += v * v;
    set.gamma_f = g / 4.0;
    const double scale = 1.0 / std::sqrt(set.gamma_f);
    detail::add_mode(set, scale * two_nv_gate(t1, t2, Detector::Right).m, scale * two_nv_gate(t1, t2, Detector::Left).m,
                     eta, true, opt.two_detectors, "flip");
    return set;
  }

  set.gamma_f = 0.5 * (a1 * a1 + a2 * a2);
  if (!(set.gamma_f > 0.0)) throw Error(ErrorKind::Domain, "working frequency has no flipping amplitude");
  const double scale = 1.0 / std::sqrt(set.gamma_f);
  const JonesVector p = scheme.polarizer.normalized();
  const JonesVector q = p.orthogonal();

  for (const auto& [mode, passes] : {std::pair{p, true}, std::pair{q, false}}) {
    Mat2c t;
    for (Ground from : {Ground::G2, Ground::G3})
      for (Ground to : {Ground::G2, Ground::G3})
        t(index(to) - 1, index(from) - 1) = mode.inner(amps.emitted(scheme.drive, from, to));
    detail::add_mode(set, scale * two_nv_gate(t, Detector::Right).m, scale * two_nv_gate(t, Detector::Left).m, eta,
                     passes, opt.two_detectors, passes ? "pass" : "perp");
  }

  if (opt.include_leakage) {
    for (int nv = 0; nv < 2; ++nv)
      for (const JonesVector& mode : {JonesVector::x(), JonesVector::y()}) {
        Mat2c a = Mat2c::Zero();
        for (Ground from : {Ground::G2, Ground::G3})
          a(0, index(from) - 1) = mode.inner(amps.emitted(scheme.drive, from, Ground::G1));
        const Mat4c op = detail::nv_local(a, nv) / std::sqrt(set.gamma_f);
        if (op.cwiseAbs().maxCoeff() == 0.0) continue;
        set.channels.push_back({op, false, true, Detector::Right, "leak:nv" + std::to_string(nv + 1)});
      }
  }
  return set;
}

// Non-Hermitian part of the effective Hamiltonian, K = 1/2 sum C^dag C.
inline Mat4c decay_operator(const ChannelSet& set) {
  Mat4c k = Mat4c::Zero();
  for (const auto& c : set.channels) k += 0.5 * c.op.adjoint() * c.op;
  return 0.5 * (k + k.adjoint());
}

inline Mat4c lindblad_rhs(const Mat4c& rho, const ChannelSet& set, const Mat4c& k) {
  Mat4c d = -(k * rho + rho * k);
  for (const auto& c : set.channels)
    if (!c.absorbing) d += c.op * rho * c.op.adjoint();
  return d;
}

// Fixed-step RK4 integration to time t (units of 1/gamma_f).
inline Mat4c lindblad_evolve(const Mat4c& rho0, const ChannelSet& set, double t, long steps = 0) {
  if (!(t >= 0.0)) throw Error(ErrorKind::Domain, "evolution time must be non-negative");
  if (std::abs(rho0.trace().real() - 1.0) > 1e-9) throw Error(ErrorKind::Domain, "initial density matrix trace != 1");
  const Mat4c k = decay_operator(set);
  if (steps <= 0) {
    const double rate = std::max(1.0, 2.0 * k.cwiseAbs().maxCoeff() * 4.0);
    steps = std::max<long>(64, static_cast<long>(std::ceil(t * rate * 20.0)));
  }
  bool absorbing = false;
  for (const auto& c : set.channels) absorbing = absorbing || c.absorbing;
  const double h = t / static_cast<double>(steps);
  Mat4c rho = rho0;
  for (long s = 0; s < steps; ++s) {
    const Mat4c k1 = lindblad_rhs(rho, set, k);
    const Mat4c k2 = lindblad_rhs(rho + 0.5 * h * k1, set, k);
    const Mat4c k3 = lindblad_rhs(rho + 0.5 * h * k2, set, k);
    const Mat4c k4 = lindblad_rhs(rho + h * k3, set, k);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (!absorbing && std::abs(rho.trace().real() - 1.0) > 1e-9)
    throw Error(ErrorKind::Numerical, "trace drift in Lindblad integration; reduce the step size");
  return rho;
}

// Physics of one experiment: channels plus the per-detector target states.
struct GateModel {
  ChannelSet channels;
  Vec4c input = Vec4c::Zero();
  std::array<Vec4c, 2> target{};  // right, left

  const Vec4c& target_for(Detector d) const { return target[d == Detector::Right ? 0 : 1]; }
};

inline GateModel idealized_model(double eta, const Vec4c& input, const ChannelOptions& opt = {}) {
  GateModel m;
  m.channels = idealized_channels(eta, opt);
  m.input = input.normalized();
  const auto [gr, gl] = ideal_gates();
  m.target = {(gr.m * m.input).normalized(), (gl.m * m.input).normalized()};
  return m;
}

inline GateModel scheme_model(const SchemeConfig& scheme, const AmplitudeSet& amps, double eta, const Vec4c& input,
                              const std::optional<std::array<double, 4>>& per_nv = std::nullopt,
                              const ChannelOptions& opt = {}) {
  GateModel m;
  m.channels = build_channels(scheme, amps, eta, per_nv, opt);
  m.input = input.normalized();
  if (per_nv) {
    const auto [gr, gl] = ideal_gates();
    m.target = {(gr.m * m.input).normalized(), (gl.m * m.input).normalized()};
  } else {
    for (Detector det : {Detector::Right, Detector::Left})
      m.target[det == Detector::Right ? 0 : 1] = (scheme_ideal_gate(scheme, amps, det).m * m.input).normalized();
  }
  return m;
}

struct TrajectoryOutcome {
  bool detected = false;
  bool leaked = false;
  double time = 0.0;
  int lost_jumps = 0;
  Detector detector = Detector::Right;
  Vec4c state = Vec4c::Zero();
  double fidelity = 0.0;
};

// Counter-based substreams: trajectory k of seed s draws from its own
// generator, so results do not depend on scheduling.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t counter) : engine_(mix(seed ^ mix(counter + 0x9e3779b97f4a7c15ULL))) {}
  // Uniform on (0, 1].
  double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

class TrajectoryEngine {
 public:
  TrajectoryEngine(GateModel model, double window) : model_(std::move(model)), window_(window) {
    if (!(window_ > 0.0)) throw Error(ErrorKind::Domain, "collection window must be positive");
    Eigen::SelfAdjointEigenSolver<Mat4c> es(decay_operator(model_.channels));
    if (es.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "decay operator diagonalization failed");
    rates_ = es.eigenvalues().cwiseMax(0.0);
    basis_ = es.eigenvectors();
  }

  const GateModel& model() const { return model_; }

  TrajectoryOutcome run(RngStream& rng, std::size_t max_jumps = 100000) const {
    TrajectoryOutcome out;
    Vec4c psi = model_.input;
    double t = 0.0;
    for (std::size_t n = 0; n < max_jumps; ++n) {
      const Eigen::Vector4cd c = basis_.adjoint() * psi;
      Eigen::Vector4d w;
      for (int i = 0; i < 4; ++i) w(i) = std::norm(c(i));
      w /= w.sum();
      const double remaining = window_ - t;
      const double r = rng.uniform();
      const double tau = waiting_time(w, r, remaining);
      if (!std::isfinite(tau)) {
        out.time = std::isfinite(window_) ? window_ : t;
        out.state = psi;
        return out;
      }
      t += tau;
      Eigen::Vector4cd ct = c;
      for (int i = 0; i < 4; ++i) ct(i) *= std::exp(-rates_(i) * tau);
      psi = (basis_ * ct).normalized();

      std::vector<double> weight(model_.channels.channels.size());
      double total = 0.0;
      for (std::size_t k = 0; k < weight.size(); ++k) {
        weight[k] = (model_.channels.channels[k].op * psi).squaredNorm();
        total += weight[k];
      }
      double pick = rng.uniform() * total;
      std::size_t chosen = weight.size() - 1;
      for (std::size_t k = 0; k < weight.size(); ++k) {
        if (pick <= weight[k] && weight[k] > 0.0) {
          chosen = k;
          break;
        }
        pick -= weight[k];
      }
      const JumpChannel& ch = model_.channels.channels[chosen];
      out.time = t;
      if (ch.absorbing) {
        out.leaked = true;
        out.state = psi;
        return out;
      }
      psi = (ch.op * psi).normalized();
      if (ch.detected) {
        out.detected = true;
        out.detector = ch.detector;
        out.state = psi;
        out.fidelity = std::norm(model_.target_for(ch.detector).dot(psi));
        return out;
      }
      ++out.lost_jumps;
    }
    out.state = psi;
    return out;
  }

 private:
  // Time to the next jump: solves S(t) = r for the survival probability
  // S(t) = sum_i w_i exp(-2 k_i t); infinity if no jump happens before `limit`.
  double waiting_time(const Eigen::Vector4d& w, double r, double limit) const {
    auto survival = [&](double t) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s += w(i) * std::exp(-2.0 * rates_(i) * t);
      return s;
    };
    auto slope = [&](double t) {
      double s = 0.0;
      for (int i = 0; i < 4; ++i) s -= 2.0 * rates_(i) * w(i) * std::exp(-2.0 * rates_(i) * t);
      return s;
    };
    double dark = 0.0;
    for (int i = 0; i < 4; ++i)
      if (rates_(i) <= 1e-14) dark += w(i);
    if (std::isfinite(limit)) {
      if (survival(limit) >= r) return std::numeric_limits<double>::infinity();
    } else if (dark >= r) {
      return std::numeric_limits<double>::infinity();
    }
    double lo = 0.0, hi = 1.0;
    if (std::isfinite(limit)) {
      hi = limit;
    } else {
      while (survival(hi) >= r) hi *= 2.0;
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = survival(t) - r;
      if (f > 0.0) lo = t; else hi = t;
      const double d = slope(t);
      double next = d < 0.0 ? t - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) <= 1e-10 * std::max(1.0, t) || hi - lo <= 1e-12 * std::max(1.0, t)) return next;
      t = next;
    }
    return t;
  }

  GateModel model_;
  double window_;
  Eigen::Vector4d rates_;
  Mat4c basis_;
};

struct TrajectoryConfig {
  double window = std::numeric_limits<double>::infinity();
  std::size_t n_traj = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
};

struct EnsembleResult {
  double mean_fidelity = std::numeric_limits<double>::quiet_NaN();
  double fidelity_stderr = std::numeric_limits<double>::quiet_NaN();
  double success_probability = 0.0;
  std::size_t n_success = 0;
  std::size_t n_traj = 0;

  bool fidelity_defined() const { return n_success > 0; }
};

inline std::vector<TrajectoryOutcome> run_trajectories(const GateModel& model, const TrajectoryConfig& cfg) {
  if (cfg.n_traj < 1) throw Error(ErrorKind::Domain, "at least one trajectory is required");
  const TrajectoryEngine engine(model, cfg.window);
  std::vector<TrajectoryOutcome> out(cfg.n_traj);
  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, cfg.n_traj));
  auto work = [&](unsigned w) {
    for (std::size_t k = w; k < cfg.n_traj; k += threads) {
      RngStream rng(cfg.seed, k);
      out[k] = engine.run(rng);
    }
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
  }
  return out;
}

// Reduction in trajectory order keeps the result independent of thread count.
inline EnsembleResult summarize(const std::vector<TrajectoryOutcome>& runs) {
  EnsembleResult r;
  r.n_traj = runs.size();
  double sum = 0.0;
  for (const auto& o : runs)
    if (o.detected) {
      ++r.n_success;
      sum += o.fidelity;
    }
  r.success_probability = r.n_traj ? static_cast<double>(r.n_success) / r.n_traj : 0.0;
  if (r.n_success == 0) return r;
  r.mean_fidelity = sum / r.n_success;
  double ss = 0.0;
  for (const auto& o : runs)
    if (o.detected) ss += (o.fidelity - r.mean_fidelity) * (o.fidelity - r.mean_fidelity);
  r.fidelity_stderr = r.n_success > 1 ? std::sqrt(ss / (r.n_success - 1)) / std::sqrt(double(r.n_success)) : 0.0;
  return r;
}

inline EnsembleResult ensemble(const GateModel& model, const TrajectoryConfig& cfg) {
  return summarize(run_trajectories(model, cfg));
}

struct OracleResult {
  double fidelity = 0.0;
  double success_probability = 0.0;
  double tail_bound = 0.0;
  int lost_jumps_used = 0;
};

namespace detail {

// Solves K R + R K = X for Hermitian K >= 0; components of X on the
// never-decaying subspace are dropped (they are never followed by a jump).
struct ResolventSolver {
  Eigen::Vector4d k;
  Mat4c v;

  explicit ResolventSolver(const ChannelSet& set) {
    Eigen::SelfAdjointEigenSolver<Mat4c> es(decay_operator(set));
    k = es.eigenvalues().cwiseMax(0.0);
    v = es.eigenvectors();
  }

  Mat4c operator()(const Mat4c& x) const {
    Mat4c y = v.adjoint() * x * v;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double s = k(i) + k(j);
        y(i, j) = s > 1e-14 ? y(i, j) / s : cplx(0.0);
      }
    return v * y * v.adjoint();
  }
};

}  // namespace detail

// Expected fidelity with no collection window, summed over histories of k
// lost jumps followed by one detected jump. tail_bound is the probability
// mass of histories beyond the truncation.
inline OracleResult oracle_conditional_fidelity(const GateModel& model, int max_lost_jumps = 5000,
                                                double tolerance = 1e-12) {
  const detail::ResolventSolver resolve(model.channels);
  Mat4c sigma = model.input * model.input.adjoint();
  double num = 0.0, prob = 0.0;
  OracleResult out;
  for (int k = 0; k <= max_lost_jumps; ++k) {
    const Mat4c tau = resolve(sigma);
    Mat4c next = Mat4c::Zero();
    for (const auto& c : model.channels.channels) {
      if (c.absorbing) continue;
      const Mat4c post = c.op * tau * c.op.adjoint();
      if (c.detected) {
        const Vec4c& t = model.target_for(c.detector);
        num += (t.adjoint() * post * t)(0, 0).real();
        prob += post.trace().real();
      } else {
        next += post;
      }
    }
    sigma = next;
    out.lost_jumps_used = k;
    out.tail_bound = sigma.trace().real();
    if (out.tail_bound <= tolerance) break;
  }
  if (out.tail_bound > tolerance)
    throw Error(ErrorKind::Numerical, "lost-jump enumeration did not converge; tail bound above tolerance");
  out.success_probability = prob;
  out.fidelity = prob > 0.0 ? num / prob : std::numeric_limits<double>::quiet_NaN();
  return out;
}

// Deterministic counterpart for a finite window: integrates the undetected
// branch and accumulates detection flux.
inline OracleResult oracle_window(const GateModel& model, double window, long steps = 20000) {
  if (!(window > 0.0) || !std::isfinite(window)) throw Error(ErrorKind::Domain, "window oracle needs a finite window");
  const Mat4c k = decay_operator(model.channels);
  struct State {
    Mat4c s;
    double num, prob;
  };
  auto rhs = [&](const Mat4c& s) {
    State d{-(k * s + s * k), 0.0, 0.0};
    for (const auto& c : model.channels.channels) {
      if (c.absorbing) continue;
      const Mat4c post = c.op * s * c.op.adjoint();
      if (c.detected) {
        const Vec4c& t = model.target_for(c.detector);
        d.num += (t.adjoint() * post * t)(0, 0).real();
        d.prob += post.trace().real();
      } else {
        d.s += post;
      }
    }
    return d;
  };
  const double h = window / static_cast<double>(steps);
  State y{model.input * model.input.adjoint(), 0.0, 0.0};
  for (long n = 0; n < steps; ++n) {
    const State k1 = rhs(y.s);
    const State k2 = rhs(y.s + 0.5 * h * k1.s);
    const State k3 = rhs(y.s + 0.5 * h * k2.s);
    const State k4 = rhs(y.s + h * k3.s);
    y.s += (h / 6.0) * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
    y.num += (h / 6.0) * (k1.num + 2.0 * k2.num + 2.0 * k3.num + k4.num);
    y.prob += (h / 6.0) * (k1.prob + 2.0 * k2.prob + 2.0 * k3.prob + k4.prob);
  }
  OracleResult out;
  out.success_probability = y.prob;
  out.fidelity = y.prob > 0.0 ? y.num / y.prob : std::numeric_limits<double>::quiet_NaN();
  out.tail_bound = y.s.trace().real();
  return out;
}

// Fidelity of a heralded gate applied at once, without lost photons.
inline double instant_fidelity(const GateMatrix& actual, const Vec4c& input, const Vec4c& target) {
  const Vec4c out = actual.m * input;
  if (!(out.squaredNorm() > 0.0)) throw Error(ErrorKind::Blocked, "gate annihilates the input state");
  return std::norm(target.dot(out)) / out.squaredNorm();
}

// Fidelity of the state left by the first detected photon when the register
// starts in rho, i.e. C rho C^dag summed over detected channels.
inline double conditional_fidelity(const GateModel& model, const Mat4c& rho) {
  double num = 0.0, prob = 0.0;
  for (const auto& c : model.channels.channels) {
    if (!c.detected) continue;
    const Mat4c post = c.op * rho * c.op.adjoint();
    const Vec4c& t = model.target_for(c.detector);
    num += (t.adjoint() * post * t)(0, 0).real();
    prob += post.trace().real();
  }
  if (!(prob > 0.0)) throw Error(ErrorKind::Domain, "no detected channel acts on this state");
  return num / prob;
}

}  // namespace nvgate
