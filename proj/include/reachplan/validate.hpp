#pragma once

#include "reachplan/path_planner.hpp"

#include <string>
#include <vector>

namespace reachplan {

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> issues;
  int poses_checked = 0;
  int relax_events = 0;

  void add(const std::string& issue) {
    ok = false;
    issues.push_back(issue);
  }
};

/// Collision, joint-limit, segment-length and self-collision re-check of
/// one pose, recomputed from its segment vectors.
void check_pose(const ArmSpec& spec, const VoxelGrid& grid, const PoseChain& pose, int n_samples,
                double s4_tolerance, const std::string& label, ValidationReport& report);

/// Independent re-validation of a delivered plan: every pose (unfold
/// prefix included), smoothness against the recorded relaxation bounds,
/// and tracked-point placement at each waypoint.
ValidationReport validate_plan(const ArmSpec& spec, const VoxelGrid& grid, const PathPlan& plan,
                               const ReachParams& rp, const PathParams& pp);

}  // namespace reachplan
