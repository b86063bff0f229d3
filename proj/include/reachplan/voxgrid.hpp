#pragma once

#include "reachplan/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace reachplan {

/// One obstacle in a scene: an axis-aligned box or a cloud of voxel
/// sample points (the captured "skin" of a real object).
struct SceneObstacle {
  enum class Shape { box, cloud };
  Shape shape = Shape::box;
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Zero();
  std::vector<Vec3> points;  // cloud shape only
  std::string id;
  bool dynamic = false;
};

/// Dense voxel occupancy over a world-aligned box. true = obstacle.
/// Points outside the grid bounds are treated as free space; planning
/// workspaces are expected to contain the arm's reachable sphere.
struct VoxelGrid {
  Vec3 origin = Vec3::Zero();  // world position of voxel (0,0,0) corner
  double voxel_size = 0.0;     // uniform in all axes, > 0
  std::array<int, 3> dims{0, 0, 0};
  std::vector<uint8_t> occupancy;  // nx*ny*nz cells, x fastest
  double dilation_radius = 0.0;    // cumulative dilation already applied

  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t flat(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(iz) * dims[0] * dims[1] +
           static_cast<std::size_t>(iy) * dims[0] + ix;
  }
  bool in_bounds(int ix, int iy, int iz) const {
    return ix >= 0 && iy >= 0 && iz >= 0 && ix < dims[0] && iy < dims[1] && iz < dims[2];
  }
  /// Exact floor arithmetic per axis: idx_a = floor((p_a - origin_a)/voxel_size).
  std::array<int, 3> world_to_index(const Vec3& p) const {
    return {static_cast<int>(std::floor((p.x() - origin.x()) / voxel_size)),
            static_cast<int>(std::floor((p.y() - origin.y()) / voxel_size)),
            static_cast<int>(std::floor((p.z() - origin.z()) / voxel_size))};
  }
  Vec3 cell_center(int ix, int iy, int iz) const {
    return origin + voxel_size * Vec3(ix + 0.5, iy + 0.5, iz + 0.5);
  }
  std::size_t occupied_count() const;
};

inline constexpr std::size_t kDefaultCellBudget = std::size_t(1) << 27;

/// All-free grid covering [bounds_min, bounds_max], dims = ceil(extent/voxel_size).
VoxelGrid build_grid(const Vec3& bounds_min, const Vec3& bounds_max, double voxel_size,
                     std::size_t cell_budget = kDefaultCellBudget);

/// Occupy every cell whose center lies inside a box (inclusive) or whose
/// cell contains a cloud point. Obstacles outside the bounds are clipped.
void mark_obstacles(VoxelGrid& grid, const std::vector<SceneObstacle>& obstacles);

/// Occupy every cell whose center lies within `radius` (Euclidean,
/// center-to-center) of a currently occupied cell center. Repeated calls
/// dilate further.
void dilate(VoxelGrid& grid, double radius);

/// true iff p maps to a free cell or lies outside the grid.
bool point_clear(const VoxelGrid& grid, const Vec3& p);

struct SegmentProbe {
  bool clear = true;
  std::vector<Vec3> samples;  // k = 1..n: p_start + (k/n)*(p_end - p_start)
};

/// Test a segment by n equispaced points, proximal-exclusive and
/// distal-inclusive. Samples are returned regardless of the verdict so
/// they can double as path waypoints.
SegmentProbe segment_clear(const VoxelGrid& grid, const Vec3& p_start, const Vec3& p_end,
                           int n_samples);

}  // namespace reachplan
