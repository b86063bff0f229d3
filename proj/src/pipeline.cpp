#include "reachplan/pipeline.hpp"

#include <cmath>
#include <ostream>

namespace reachplan {

double effective_dilation(const Scene& scene, const ArmSpec& arm, const ReachParams& rp) {
  if (scene.grid.dilation_radius >= 0.0) return scene.grid.dilation_radius;
  double max_spacing = 0.0;
  for (int j = 0; j < arm.segment_count(); ++j) {
    max_spacing = std::max(max_spacing, arm.length(j) / rp.n_samples_per_segment);
  }
  return arm.arm_radius + 1.25 * max_spacing;
}

VoxelGrid build_scene_grid(const Scene& scene, const ArmSpec& arm, const ReachParams& rp,
                           std::ostream* warnings) {
  VoxelGrid grid = build_grid(scene.grid.bounds_min, scene.grid.bounds_max, scene.grid.voxel_size);
  mark_obstacles(grid, scene.obstacles);
  dilate(grid, effective_dilation(scene, arm, rp));
  if (warnings) {
    const double reach = arm.total_length();
    for (int a = 0; a < 3; ++a) {
      if (scene.root[a] - reach < scene.grid.bounds_min[a] ||
          scene.root[a] + reach > scene.grid.bounds_max[a]) {
        *warnings << "warning: the arm's reachable sphere exceeds the grid bounds; "
                     "poses outside the grid are treated as collision-free\n";
        break;
      }
    }
  }
  return grid;
}

Quiver quiver_from_config(const QuiverConfig& cfg) {
  return generate_quiver(deg2rad(cfg.elev_step_deg), deg2rad(cfg.equator_azim_step_deg),
                         cfg.min_per_ring);
}

ArmSpec arm_in_scene(const ArmSpec& arm, const Scene& scene) {
  ArmSpec placed = arm;
  placed.root = scene.root;
  return placed;
}

ReachParams reach_params_for_scene(ReachParams rp, const Scene& scene, const ArmSpec& arm) {
  rp.approach_axis = scene.approach_axis.normalized();
  rp.approach_half_angle = scene.approach_half_angle;
  rp.epsilon_gap = rp.resolved_epsilon(arm);
  rp.near_target_radius = rp.resolved_near_radius(arm);
  return rp;
}

}  // namespace reachplan
