#include "reachplan/validate.hpp"

#include <algorithm>
#include <cmath>

namespace reachplan {

namespace {

bool link_samples_clear(const VoxelGrid& grid, const Vec3& from, const Vec3& to, int n) {
  const Vec3 diff = to - from;
  for (int k = 1; k <= n; ++k) {
    if (!point_clear(grid, from + (static_cast<double>(k) / n) * diff)) return false;
  }
  return true;
}

}  // namespace

void check_pose(const ArmSpec& spec, const VoxelGrid& grid, const PoseChain& pose, int n_samples,
                double s4_tolerance, const std::string& label, ValidationReport& report) {
  ++report.poses_checked;
  for (std::size_t j = 0; j < pose.segments.size(); ++j) {
    const double len = pose.segments[j].norm();
    const double expected = spec.length(static_cast<int>(j));
    const double tol = (j == 3) ? s4_tolerance : 1e-9 * std::max(1.0, expected);
    if (std::abs(len - expected) > tol) {
      report.add(label + ": segment " + std::to_string(j + 1) + " length off by " +
                 std::to_string(len - expected));
    }
    Vec3 from = pose.joints[j];
    if (!pose.elbows.empty()) {
      const int n_off = std::max(
          1, static_cast<int>(std::ceil((pose.elbows[j] - pose.joints[j]).norm() /
                                        std::max(1e-12, expected / n_samples))));
      if (!link_samples_clear(grid, pose.joints[j], pose.elbows[j], n_off)) {
        report.add(label + ": offset link " + std::to_string(j + 1) + " collides");
      }
      from = pose.elbows[j];
    }
    if (!link_samples_clear(grid, from, pose.joints[j + 1], n_samples)) {
      report.add(label + ": segment " + std::to_string(j + 1) + " collides");
    }
  }
  if (!joint_limits_ok(spec, pose)) report.add(label + ": joint limits violated");
  if (!self_collision_free(spec, pose)) report.add(label + ": self-collision");
}

ValidationReport validate_plan(const ArmSpec& spec, const VoxelGrid& grid, const PathPlan& plan,
                               const ReachParams& rp, const PathParams& pp) {
  ValidationReport report;
  const PathParams ppr = pp.resolved(spec, rp);
  const int n = rp.n_samples_per_segment;
  const double s4_tol = rp.resolved_epsilon(spec) + 1e-9;

  if (plan.poses.size() != plan.waypoints.size()) {
    report.add("waypoint and pose counts differ");
    return report;
  }
  if (plan.provenance.relax_per_waypoint.size() != plan.waypoints.size()) {
    report.add("relaxation record does not cover every waypoint");
    return report;
  }

  const auto sequence = plan.full_sequence();
  for (std::size_t k = 0; k < sequence.size(); ++k) {
    check_pose(spec, grid, *sequence[k], n, s4_tol, "pose " + std::to_string(k), report);
  }

  // Tracked-point placement at each waypoint, scaled by the recorded
  // relaxation.
  for (std::size_t k = 0; k < plan.waypoints.size(); ++k) {
    const double relax = plan.provenance.relax_per_waypoint[k];
    if (relax > 1.0) ++report.relax_events;
    const double dist = (plan.poses[k].tracked_point() - plan.waypoints[k]).norm();
    if (dist > ppr.epsilon_waypoint * relax + 1e-9) {
      report.add("waypoint " + std::to_string(k) + ": tracked point off by " +
                 std::to_string(dist));
    }
  }

  // Smoothness over the whole executable sequence. A pair spanning two
  // waypoints is held to the larger of the two recorded relaxations.
  const std::size_t unfold_len = plan.unfold_prefix.empty() ? 0 : plan.unfold_prefix.size() - 1;
  for (std::size_t k = 0; k + 1 < sequence.size(); ++k) {
    double relax = 1.0;
    const auto wp_relax = [&](std::size_t seq_idx) -> double {
      if (seq_idx < unfold_len) return 1.0;
      const std::size_t wp = seq_idx - unfold_len;
      return wp < plan.provenance.relax_per_waypoint.size()
                 ? plan.provenance.relax_per_waypoint[wp]
                 : 1.0;
    };
    relax = std::max(wp_relax(k), wp_relax(k + 1));
    if (!smoothness_ok(*sequence[k], *sequence[k + 1], ppr, relax)) {
      report.add("pose pair " + std::to_string(k) + "-" + std::to_string(k + 1) +
                 " exceeds the recorded smoothness bounds");
    }
  }

  if (!plan.unfold_prefix.empty()) {
    const Vec3 d = plan.unfold_prefix.back().joints.back() - plan.poses[0].joints.back();
    if (d.norm() > 1e-9) report.add("unfold prefix does not end at the root-waypoint pose");
  }
  return report;
}

}  // namespace reachplan
