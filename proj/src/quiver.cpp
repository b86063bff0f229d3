#include "reachplan/quiver.hpp"

#include <algorithm>
#include <cmath>

namespace reachplan {

std::pair<int, int> Quiver::ring_azim_of(int index) const {
  require(index >= 0 && index < size(), Errc::invalid_parameter, "quiver index out of range");
  // ring_offsets is ascending; find the last offset <= index.
  auto it = std::upper_bound(ring_offsets.begin(), ring_offsets.end(), index);
  const int ring = static_cast<int>(it - ring_offsets.begin()) - 1;
  return {ring, index - ring_offsets[ring]};
}

Quiver generate_quiver(double elev_step, double equator_azim_step, int min_per_ring) {
  require(elev_step > 0.0 && elev_step <= kPi / 2.0, Errc::invalid_parameter,
          "elev_step must be in (0, pi/2]");
  require(equator_azim_step > 0.0 && equator_azim_step <= kPi / 2.0, Errc::invalid_parameter,
          "equator_azim_step must be in (0, pi/2]");
  require(min_per_ring >= 1, Errc::invalid_parameter, "min_per_ring must be >= 1");

  Quiver q;
  q.elev_step = elev_step;
  q.equator_azim_step = equator_azim_step;
  q.min_per_ring = min_per_ring;

  const double half_pi = kPi / 2.0;
  for (int k = 0;; ++k) {
    const double phi = -half_pi + k * elev_step;
    if (phi >= half_pi - 1e-12) {
      q.ring_elevations.push_back(half_pi);
      break;
    }
    q.ring_elevations.push_back(phi);
  }

  const long n_eq = std::llround(2.0 * kPi / equator_azim_step);
  for (double phi : q.ring_elevations) {
    const long by_circumference = std::llround(static_cast<double>(n_eq) * std::cos(phi));
    const int count = static_cast<int>(std::max<long>(min_per_ring, by_circumference));
    q.ring_offsets.push_back(q.size());
    const double cos_phi = std::cos(phi);
    const double sin_phi = std::sin(phi);
    for (int m = 0; m < count; ++m) {
      const double theta = 2.0 * kPi * m / count;
      q.vectors.emplace_back(cos_phi * std::cos(theta), cos_phi * std::sin(theta), sin_phi);
    }
  }
  return q;
}

std::vector<int> cone_subset(const Quiver& q, const Vec3& axis, double half_angle) {
  require(std::abs(axis.norm() - 1.0) <= 1e-9, Errc::invalid_parameter, "cone axis must be unit");
  require(half_angle >= 0.0 && half_angle <= kPi, Errc::invalid_parameter,
          "half_angle must be in [0, pi]");
  std::vector<int> out;
  const double limit = half_angle + 1e-12;
  for (int i = 0; i < q.size(); ++i) {
    if (angle_between(q.vectors[i], axis) <= limit) out.push_back(i);
  }
  return out;
}

std::vector<int> neighbors(const Quiver& q, int index, double angular_radius) {
  require(index >= 0 && index < q.size(), Errc::invalid_parameter, "quiver index out of range");
  require(angular_radius > 0.0, Errc::invalid_parameter, "angular_radius must be > 0");
  return cone_subset(q, q.vectors[index], std::min(angular_radius, kPi));
}

}  // namespace reachplan
