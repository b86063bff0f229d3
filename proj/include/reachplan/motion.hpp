#pragma once

#include "reachplan/path_planner.hpp"

#include <vector>

namespace reachplan {

struct MotionParams {
  double v_w = 0.05;          // desired average tracked-point speed, m/s
  double sample_rate = 100.0;  // Hz
  double max_joint_rate = deg2rad(30.0);  // rad/s
  double arrival_tolerance = 0.01;        // m
  enum class Objective { time_of_arrival, velocity_on_arrival };
  Objective control_objective = Objective::time_of_arrival;

  void validate() const;
};

/// t_w = |p_w - p_e| / v_w.
double waypoint_interval(const Vec3& p_w, const Vec3& p_e, double v_w);

struct JointRates {
  std::vector<double> azimuth_rate;    // rad/s per joint
  std::vector<double> elevation_rate;  // rad/s per joint
  bool clamped = false;
};

/// Componentwise (q_w - q_c) / t_w with azimuth differences wrapped to
/// (-pi, pi]; rates clamped to +-max_rate (flagged).
JointRates joint_velocities(const JointAngles& q_w, const JointAngles& q_c, double t_w,
                            double max_rate);

struct ExecutionTick {
  double time = 0.0;
  JointAngles q;
  Vec3 tracked_point = Vec3::Zero();
  int active_waypoint_index = 0;
  JointRates commanded;
};

struct ExecutionTrace {
  std::vector<ExecutionTick> ticks;
  std::vector<int> overshoot_events;  // tick indices where a waypoint was passed, not hit
  std::vector<int> clamp_events;      // tick indices where a rate was clamped
  bool reached_goal = false;
};

/// Discrete-time velocity-control execution of a plan: each tick the
/// joint rates are recomputed from the actual configuration toward the
/// active waypoint's pose, the active waypoint advancing on arrival or
/// on overshoot. When a grid is supplied every intermediate
/// configuration is re-checked against it (collision is a hard error).
ExecutionTrace simulate_execution(const ArmSpec& spec, const PathPlan& plan,
                                  const MotionParams& params, const VoxelGrid* grid = nullptr);

}  // namespace reachplan
