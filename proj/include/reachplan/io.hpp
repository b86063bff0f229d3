#pragma once

#include "reachplan/motion.hpp"
#include "reachplan/path_planner.hpp"

#include <string>

namespace reachplan {

struct GridConfig {
  Vec3 bounds_min = Vec3::Zero();
  Vec3 bounds_max = Vec3::Zero();
  double voxel_size = 0.025;
  double dilation_radius = -1.0;  // <0: derived = arm_radius + 1.25 * sample spacing
};

struct Scene {
  GridConfig grid;
  std::vector<SceneObstacle> obstacles;
  Vec3 root = Vec3::Zero();
  Vec3 target = Vec3::Zero();
  Vec3 approach_axis = Vec3::UnitX();
  double approach_half_angle = 0.0;  // radians internally; degrees on file
};

struct QuiverConfig {
  double elev_step_deg = 2.0;
  double equator_azim_step_deg = 2.0;
  int min_per_ring = 4;
};

/// Everything a plan file carries: the effective configuration, the arm,
/// the chosen solution, the plan itself and the search counters.
struct PlanFile {
  QuiverConfig quiver;
  ReachParams reach;  // resolved values; `workers` is not serialized
  PathParams path;    // resolved values
  ArmSpec arm;
  ChosenPath chosen;
  PathPlan plan;
  SolveStats stats;
};

// All parsers validate strictly: unknown fields are rejected, numbers are
// serialized at full precision, and emit -> parse -> emit is
// byte-identical. Angles are degrees on the file surface.
Scene parse_scene(const std::string& text);
std::string emit_scene(const Scene& scene);

ArmSpec parse_arm(const std::string& text);
std::string emit_arm(const ArmSpec& arm);

PlanFile parse_plan(const std::string& text);
std::string emit_plan(const PlanFile& plan);

PoseChain parse_pose_file(const std::string& text, const ArmSpec& spec);

std::string emit_trace(const ExecutionTrace& trace, const MotionParams& params);
ExecutionTrace parse_trace(const std::string& text);

SceneObstacle parse_obstacle_file(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace reachplan
