#pragma once

#include "reachplan/types.hpp"

#include <utility>
#include <vector>

namespace reachplan {

/// Indexed set of unit direction vectors sampling the sphere at
/// approximately constant surface density. Directions are organized in
/// equally spaced elevation rings; each ring is subdivided in azimuth in
/// proportion to its circumference, never below a per-ring minimum.
/// Addressing is [ring index, azimuth index] and is total and bijective
/// onto the flat vector list. Immutable after construction.
struct Quiver {
  std::vector<Vec3> vectors;
  std::vector<int> ring_offsets;        // start index of each ring in `vectors`
  std::vector<double> ring_elevations;  // radians, ascending in [-pi/2, +pi/2]
  double elev_step = 0.0;
  double equator_azim_step = 0.0;
  int min_per_ring = 0;

  int size() const { return static_cast<int>(vectors.size()); }
  int ring_count() const { return static_cast<int>(ring_offsets.size()); }

  int ring_size(int ring) const {
    const int end = (ring + 1 < ring_count()) ? ring_offsets[ring + 1] : size();
    return end - ring_offsets[ring];
  }

  int index_of(int ring, int azim) const { return ring_offsets[ring] + azim; }

  /// Inverse addressing: flat index -> (ring, azimuth).
  std::pair<int, int> ring_azim_of(int index) const;
};

/// Build the quiver. Rings run from -pi/2 upward in steps of `elev_step`;
/// the last ring is clamped to +pi/2 when the step does not divide pi.
/// Ring k holds max(min_per_ring, round(N_eq * cos(phi_k))) directions,
/// N_eq = round(2*pi / equator_azim_step), first azimuth at 0.
Quiver generate_quiver(double elev_step, double equator_azim_step, int min_per_ring);

/// Indices of all quiver vectors within `half_angle` of `axis` (unit),
/// ascending. Tolerance of 1e-12 rad on the boundary.
std::vector<int> cone_subset(const Quiver& q, const Vec3& axis, double half_angle);

/// Indices within `angular_radius` of vectors[index], including `index`.
std::vector<int> neighbors(const Quiver& q, int index, double angular_radius);

}  // namespace reachplan
