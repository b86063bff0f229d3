#pragma once

#include "reachplan/reach_solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace reachplan {

struct PathParams {
  double epsilon_waypoint = -1.0;  // <0: derived = d_w
  double d_w = -1.0;               // <0: derived = mean traversal segment length / n
  double slack = -1.0;             // <0: 0.5 * d_w
  double joint1_max_move = -1.0;   // <0: 0.5 * d_w + slack
  double joint2_max_move = -1.0;   // <0: 1.0 * d_w + slack
  std::vector<double> relax_schedule{1.5, 2.0, 3.0};
  int unfold_steps = 16;  // grown automatically until the interpolation is smooth

  /// Copy with every derived field filled in.
  PathParams resolved(const ArmSpec& spec, const ReachParams& rp) const;
};

/// Executable motion sequence: the unfold prefix runs from the rotated
/// folded pose to the root-triangle pose (== poses[0]); one pose per
/// waypoint follows, root-to-target order.
struct PathPlan {
  std::vector<Vec3> waypoints;
  std::vector<PoseChain> poses;
  std::vector<PoseChain> unfold_prefix;

  struct Provenance {
    std::string kind;  // reach-pose | shortcut | virtual-arm | out-and-back | replan
    std::vector<double> relax_per_waypoint;  // 1.0 = no relaxation event
    std::vector<std::string> notes;
    int replan_switch_index = -1;
  } provenance;

  /// Unfold prefix followed by the per-waypoint poses, seam deduplicated.
  std::vector<const PoseChain*> full_sequence() const;
};

bool smoothness_ok(const PoseChain& prev, const PoseChain& cand, const PathParams& params,
                   double relax = 1.0);

/// Best 6DOF solution at a path waypoint: tip within
/// epsilon_waypoint*relax of the waypoint, smooth against `prev` with
/// bounds scaled by relax, minimal joint-1 + joint-2 displacement.
/// For four-segment arms the fourth segment is appended folded along the
/// path (trail context), limit- and collision-checked like the others.
struct TrailContext {
  std::optional<Vec3> back_dir;  // direction toward the previous waypoint
  std::optional<Vec3> fwd_dir;   // direction toward the next waypoint
};

std::optional<PoseChain> waypoint_ik(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                                     const Vec3& waypoint, const PoseChain& prev,
                                     const ReachParams& rp, const PathParams& pp, double relax,
                                     const TrailContext& trail = {},
                                     const PoseChain* junction_bias = nullptr);

/// Failed backward-pass state handed to the fallback cascade.
struct PlanFailure {
  ChosenPath candidate;
  std::vector<Vec3> waypoints;
  int blocked_index = -1;
  std::string reason;
};

PathPlan plan_from_reach(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                         const ChosenPath& chosen, const SolutionSet& all_solutions,
                         const Vec3& target, const ReachParams& rp, const PathParams& pp);

/// Recovery strategies, in order: escalated relaxation at the blocked
/// waypoint, a substituted target cloud advanced down the path, alternate
/// reach solutions (near the failed path first, then far), and a
/// virtual-arm detour from the blocked waypoint to the target.
PathPlan fallback_cascade(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                          const PlanFailure& failure, const SolutionSet& all_solutions,
                          const Vec3& target, const ReachParams& rp, const PathParams& pp);

/// Path from an arbitrary collision-free start pose to a target: a
/// virtual arm rooted at the start tip plans the tip path; the real arm
/// follows it by waypoint IK. Falls back to the out-and-back route
/// (retract to the folded pose, then plan outward) when no direct
/// virtual path works.
PathPlan plan_arbitrary(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                        const PoseChain& start_pose, const Vec3& target, const ReachParams& rp,
                        const PathParams& pp);

struct ReplanTiming {
  double waypoint_period = 0.083;      // seconds per waypoint at the commanded speed
  double replan_per_waypoint = 0.002;  // measured solve cost per remaining waypoint
};

/// Mid-course avoidance of a newly detected obstacle. The returned plan
/// is identical to `active` through the computed switch index; past it,
/// the valid candidate path with the smallest mean deviation from the
/// original polyline takes over.
PathPlan replan_dynamic(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid_static,
                        const PathPlan& active, int current_index,
                        const SceneObstacle& new_obstacle, const ReplanTiming& timing,
                        const ReachParams& rp, const PathParams& pp);

/// Full pipeline for one target: solve, select, plan.
PathPlan plan_reach_then_path(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                              const Vec3& target, const ReachParams& rp, const PathParams& pp);

/// The planar zig-zag starting pose, rooted at spec.root in the plane
/// normal to spec.fold_plane_normal.
PoseChain folded_pose(const ArmSpec& spec);

/// Mean over `pts` of the distance to the polyline through `poly`.
double mean_polyline_deviation(const std::vector<Vec3>& pts, const std::vector<Vec3>& poly);

}  // namespace reachplan
