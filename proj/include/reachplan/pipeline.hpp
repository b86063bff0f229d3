#pragma once

#include "reachplan/io.hpp"
#include "reachplan/quiver.hpp"

#include <iosfwd>

namespace reachplan {

/// Dilation radius actually applied for a scene: the configured value, or
/// arm_radius + 1.25 x the collision sample spacing when unset.
double effective_dilation(const Scene& scene, const ArmSpec& arm, const ReachParams& rp);

/// Build, mark and dilate the scene's occupancy grid. Warns (if a stream
/// is given) when the arm's reachable sphere exceeds the grid bounds.
VoxelGrid build_scene_grid(const Scene& scene, const ArmSpec& arm, const ReachParams& rp,
                           std::ostream* warnings = nullptr);

Quiver quiver_from_config(const QuiverConfig& cfg);

/// Arm spec placed into the scene (scene root wins) with reach parameters
/// finalized from the scene's approach settings.
ArmSpec arm_in_scene(const ArmSpec& arm, const Scene& scene);
ReachParams reach_params_for_scene(ReachParams rp, const Scene& scene, const ArmSpec& arm);

}  // namespace reachplan
