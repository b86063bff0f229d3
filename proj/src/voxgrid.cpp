#include "reachplan/voxgrid.hpp"

#include <algorithm>
#include <cmath>

namespace reachplan {

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), uint8_t(1)));
}

VoxelGrid build_grid(const Vec3& bounds_min, const Vec3& bounds_max, double voxel_size,
                     std::size_t cell_budget) {
  require(voxel_size > 0.0, Errc::invalid_parameter, "voxel_size must be > 0");
  for (int a = 0; a < 3; ++a) {
    require(bounds_min[a] < bounds_max[a], Errc::invalid_parameter,
            "bounds_min must be < bounds_max componentwise");
  }
  VoxelGrid g;
  g.origin = bounds_min;
  g.voxel_size = voxel_size;
  for (int a = 0; a < 3; ++a) {
    const double extent = bounds_max[a] - bounds_min[a];
    // The 1e-9 guard keeps n/voxel-exact extents from picking up a sliver cell.
    g.dims[a] = std::max(1, static_cast<int>(std::ceil(extent / voxel_size - 1e-9)));
  }
  const std::size_t cells =
      static_cast<std::size_t>(g.dims[0]) * g.dims[1] * g.dims[2];
  require(cells <= cell_budget, Errc::capacity_exceeded,
          "grid would exceed the configured cell budget");
  g.occupancy.assign(cells, uint8_t(0));
  return g;
}

void mark_obstacles(VoxelGrid& grid, const std::vector<SceneObstacle>& obstacles) {
  for (const auto& obs : obstacles) {
    if (obs.shape == SceneObstacle::Shape::box) {
      require(obs.box_min.x() <= obs.box_max.x() && obs.box_min.y() <= obs.box_max.y() &&
                  obs.box_min.z() <= obs.box_max.z(),
              Errc::invalid_parameter, "obstacle box min must be <= max: " + obs.id);
      const auto lo = grid.world_to_index(obs.box_min);
      const auto hi = grid.world_to_index(obs.box_max);
      for (int iz = std::max(0, lo[2]); iz <= std::min(grid.dims[2] - 1, hi[2]); ++iz)
        for (int iy = std::max(0, lo[1]); iy <= std::min(grid.dims[1] - 1, hi[1]); ++iy)
          for (int ix = std::max(0, lo[0]); ix <= std::min(grid.dims[0] - 1, hi[0]); ++ix) {
            const Vec3 c = grid.cell_center(ix, iy, iz);
            if (c.x() >= obs.box_min.x() && c.x() <= obs.box_max.x() &&
                c.y() >= obs.box_min.y() && c.y() <= obs.box_max.y() &&
                c.z() >= obs.box_min.z() && c.z() <= obs.box_max.z()) {
              grid.occupancy[grid.flat(ix, iy, iz)] = 1;
            }
          }
    } else {
      for (const Vec3& p : obs.points) {
        const auto idx = grid.world_to_index(p);
        if (grid.in_bounds(idx[0], idx[1], idx[2])) {
          grid.occupancy[grid.flat(idx[0], idx[1], idx[2])] = 1;
        }
      }
    }
  }
}

void dilate(VoxelGrid& grid, double radius) {
  require(radius >= 0.0, Errc::invalid_parameter, "dilation radius must be >= 0");
  if (radius == 0.0 || grid.cell_count() == 0) {
    return;
  }
  // Precompute integer offsets within the radius ball (center-to-center).
  const double r_cells = radius / grid.voxel_size;
  const int reach = static_cast<int>(std::floor(r_cells + 1e-9));
  const double r2 = r_cells * r_cells + 1e-9;
  std::vector<std::array<int, 3>> ball;
  for (int dz = -reach; dz <= reach; ++dz)
    for (int dy = -reach; dy <= reach; ++dy)
      for (int dx = -reach; dx <= reach; ++dx) {
        if (double(dx) * dx + double(dy) * dy + double(dz) * dz <= r2)
          ball.push_back({dx, dy, dz});
      }

  const std::vector<uint8_t> before = grid.occupancy;
  for (int iz = 0; iz < grid.dims[2]; ++iz)
    for (int iy = 0; iy < grid.dims[1]; ++iy)
      for (int ix = 0; ix < grid.dims[0]; ++ix) {
        if (!before[grid.flat(ix, iy, iz)]) continue;
        for (const auto& d : ball) {
          const int x = ix + d[0], y = iy + d[1], z = iz + d[2];
          if (grid.in_bounds(x, y, z)) grid.occupancy[grid.flat(x, y, z)] = 1;
        }
      }
  grid.dilation_radius += radius;
}

bool point_clear(const VoxelGrid& grid, const Vec3& p) {
  const auto idx = grid.world_to_index(p);
  if (!grid.in_bounds(idx[0], idx[1], idx[2])) return true;
  return grid.occupancy[grid.flat(idx[0], idx[1], idx[2])] == 0;
}

SegmentProbe segment_clear(const VoxelGrid& grid, const Vec3& p_start, const Vec3& p_end,
                           int n_samples) {
  require(n_samples >= 1, Errc::invalid_parameter, "n_samples must be >= 1");
  SegmentProbe probe;
  probe.samples.reserve(n_samples);
  const Vec3 diff = p_end - p_start;
  for (int k = 1; k <= n_samples; ++k) {
    const Vec3 s = p_start + (static_cast<double>(k) / n_samples) * diff;
    probe.samples.push_back(s);
    if (!point_clear(grid, s)) probe.clear = false;
  }
  return probe;
}

}  // namespace reachplan
