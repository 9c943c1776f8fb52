#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace nvgate {

using cplx = std::complex<double>;
using Vec3c = Eigen::Vector3cd;
using Vec4c = Eigen::Vector4cd;
using Mat2c = Eigen::Matrix2cd;
using Mat4c = Eigen::Matrix4cd;
using Mat6c = Eigen::Matrix<cplx, 6, 6>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// Config/Parse/Domain/Validation are caller mistakes; the rest are numerical.
enum class ErrorKind {
  Config,
  Parse,
  Domain,
  Validation,
  NearResonance,
  NoBracket,
  Tracking,
  Blocked,
  Numerical,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  bool is_input_error() const noexcept {
    return kind_ == ErrorKind::Config || kind_ == ErrorKind::Parse || kind_ == ErrorKind::Domain ||
           kind_ == ErrorKind::Validation;
  }

 private:
  ErrorKind kind_;
};

enum class Axis { X, Y };

inline Axis other(Axis a) { return a == Axis::X ? Axis::Y : Axis::X; }
inline int index(Axis a) { return a == Axis::X ? 0 : 1; }
inline const char* name(Axis a) { return a == Axis::X ? "x" : "y"; }

// Ground-state labels; g2/g3 carry the qubit.
enum class Ground { G1 = 0, G2 = 1, G3 = 2 };

inline int index(Ground g) { return static_cast<int>(g); }
inline Ground flipped(Ground g) { return g == Ground::G2 ? Ground::G3 : Ground::G2; }

}  // namespace nvgate
