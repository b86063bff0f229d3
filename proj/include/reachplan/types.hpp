#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <stdexcept>
#include <string>

namespace reachplan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

/// Angle between two nonzero vectors, in [0, pi]. atan2 form, well
/// conditioned near 0 and pi.
inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

enum class Errc {
  invalid_parameter,
  capacity_exceeded,
  degenerate_input,
  unreachable_target,
  empty_cone,
  no_solution,
  no_path,
  infeasible_timing,
  execution_collision,
  timeout,
  parse_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_parameter: return "invalid-parameter";
    case Errc::capacity_exceeded: return "capacity-exceeded";
    case Errc::degenerate_input: return "degenerate-input";
    case Errc::unreachable_target: return "unreachable-target";
    case Errc::empty_cone: return "empty-cone";
    case Errc::no_solution: return "no-solution";
    case Errc::no_path: return "no-path";
    case Errc::infeasible_timing: return "infeasible-timing";
    case Errc::execution_collision: return "execution-collision";
    case Errc::timeout: return "timeout";
    case Errc::parse_error: return "parse-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool ok, Errc code, const std::string& msg) {
  if (!ok) fail(code, msg);
}

}  // namespace reachplan
