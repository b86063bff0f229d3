#pragma once

#include "reachplan/reach_solver.hpp"

namespace reachplan {

/// Exhaustive-enumeration reach solver: every (segment-1, segment-2,
/// cone) composition is built and tested directly against the solution
/// definition — joint limits, collision samples, the gap length band and
/// self-collision — with none of the geometric prechecks the pruned
/// search applies. Single-threaded and deliberately naive; intended for
/// equivalence testing at coarse quiver resolutions.
SolutionSet oracle_solve(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                         const Vec3& target, const ReachParams& params);

/// Floor below which the oracle refuses to run (full enumeration cost).
inline constexpr double kOracleMinStepDeg = 5.0;

}  // namespace reachplan
