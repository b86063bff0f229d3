#include "reachplan/motion.hpp"

#include <algorithm>
#include <cmath>

namespace reachplan {

void MotionParams::validate() const {
  require(v_w > 0.0, Errc::invalid_parameter, "v_w must be > 0");
  require(sample_rate > 0.0, Errc::invalid_parameter, "sample_rate must be > 0");
  require(max_joint_rate > 0.0, Errc::invalid_parameter, "max_joint_rate must be > 0");
  require(arrival_tolerance > 0.0, Errc::invalid_parameter, "arrival_tolerance must be > 0");
}

double waypoint_interval(const Vec3& p_w, const Vec3& p_e, double v_w) {
  require(v_w > 0.0, Errc::invalid_parameter, "zero or negative velocity");
  return (p_w - p_e).norm() / v_w;
}

JointRates joint_velocities(const JointAngles& q_w, const JointAngles& q_c, double t_w,
                            double max_rate) {
  require(t_w > 0.0, Errc::invalid_parameter, "zero waypoint interval");
  require(q_w.joint_count() == q_c.joint_count(), Errc::invalid_parameter,
          "configurations have different joint counts");
  JointRates r;
  for (int j = 0; j < q_w.joint_count(); ++j) {
    double wa = wrap_angle(q_w.azimuth[j] - q_c.azimuth[j]) / t_w;
    double we = (q_w.elevation[j] - q_c.elevation[j]) / t_w;
    if (std::abs(wa) > max_rate) {
      wa = std::copysign(max_rate, wa);
      r.clamped = true;
    }
    if (std::abs(we) > max_rate) {
      we = std::copysign(max_rate, we);
      r.clamped = true;
    }
    r.azimuth_rate.push_back(wa);
    r.elevation_rate.push_back(we);
  }
  return r;
}

namespace {

Vec3 tracked_of(const ArmSpec& spec, const JointAngles& q) {
  return joint_angles_to_vectors(spec, q).tracked_point();
}

bool pose_collides(const ArmSpec& spec, const VoxelGrid& grid, const JointAngles& q, int n) {
  const PoseChain pose = joint_angles_to_vectors(spec, q);
  const auto links = chain_links(pose);
  for (const auto& [from, to] : links) {
    const Vec3 diff = to - from;
    for (int k = 1; k <= n; ++k) {
      if (!point_clear(grid, from + (static_cast<double>(k) / n) * diff)) return true;
    }
  }
  return false;
}

}  // namespace

ExecutionTrace simulate_execution(const ArmSpec& spec, const PathPlan& plan,
                                  const MotionParams& params, const VoxelGrid* grid) {
  params.validate();
  const auto sequence = plan.full_sequence();
  require(!sequence.empty(), Errc::invalid_parameter, "empty plan");

  // Pose targets: one per executable pose, tracked by the segment-3 end.
  std::vector<JointAngles> targets;
  std::vector<Vec3> points;
  targets.reserve(sequence.size());
  for (const PoseChain* p : sequence) {
    targets.push_back(vectors_to_joint_angles(spec, *p));
    points.push_back(p->tracked_point());
  }

  ExecutionTrace trace;
  const double dt = 1.0 / params.sample_rate;
  JointAngles q = targets.front();
  int active = (sequence.size() > 1) ? 1 : 0;

  Vec3 tracked = tracked_of(spec, q);
  trace.ticks.push_back({0.0, q, tracked, active, JointRates{}});
  if (sequence.size() == 1 ||
      (points.back() - tracked).norm() <= params.arrival_tolerance) {
    trace.reached_goal = true;
    return trace;
  }

  const double nominal_total = [&] {
    double t = 0.0;
    for (std::size_t k = 1; k < points.size(); ++k) {
      t += waypoint_interval(points[k], points[k - 1], params.v_w);
    }
    return t;
  }();
  const long max_ticks =
      static_cast<long>((nominal_total * 20.0 + 10.0) * params.sample_rate) + 1000;

  for (long tick = 1; tick <= max_ticks; ++tick) {
    const double now = tick * dt;

    // Advance on arrival or when progress along the leg passes the waypoint.
    bool advanced = true;
    while (advanced && active < static_cast<int>(points.size())) {
      advanced = false;
      const Vec3& p_w = points[active];
      const double dist = (p_w - tracked).norm();
      bool arrive = dist <= params.arrival_tolerance;
      bool overshoot = false;
      if (!arrive) {
        const Vec3 leg = p_w - points[active - 1];
        if (leg.norm() > 1e-12 && (tracked - p_w).dot(leg) > 0.0) {
          overshoot = true;
        }
      }
      if (arrive || overshoot) {
        if (overshoot) trace.overshoot_events.push_back(static_cast<int>(trace.ticks.size()) - 1);
        ++active;
        advanced = true;
      }
    }
    if (active >= static_cast<int>(points.size())) {
      trace.reached_goal = true;
      break;
    }

    // Rates are always recomputed from the actual configuration toward
    // the next waypoint's pose.
    double t_w = waypoint_interval(points[active], tracked, params.v_w);
    t_w = std::max(t_w, dt);
    const JointRates rates = joint_velocities(targets[active], q, t_w, params.max_joint_rate);
    if (rates.clamped) trace.clamp_events.push_back(static_cast<int>(trace.ticks.size()));

    for (int j = 0; j < q.joint_count(); ++j) {
      q.azimuth[j] = wrap_angle(q.azimuth[j] + rates.azimuth_rate[j] * dt);
      q.elevation[j] += rates.elevation_rate[j] * dt;
    }
    tracked = tracked_of(spec, q);
    if (grid && pose_collides(spec, *grid, q, 8)) {
      fail(Errc::execution_collision, "arm collided during execution at t=" + std::to_string(now));
    }
    trace.ticks.push_back({now, q, tracked, active, rates});
  }
  require(trace.reached_goal, Errc::timeout, "tick budget exceeded before the final waypoint");
  return trace;
}

}  // namespace reachplan
