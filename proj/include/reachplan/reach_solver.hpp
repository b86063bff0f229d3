#pragma once

#include "reachplan/arm_model.hpp"
#include "reachplan/quiver.hpp"
#include "reachplan/types.hpp"
#include "reachplan/voxgrid.hpp"

#include <optional>
#include <vector>

namespace reachplan {

enum class SolveMode { six_dof, eight_dof };

struct ReachParams {
  /// Permitted | |v3| - L3 | deviation. Negative = derive 0.5 * L3 / n,
  /// which keeps the exact solution inside collision-cleared space.
  double epsilon_gap = -1.0;
  int n_samples_per_segment = 8;
  Vec3 approach_axis = Vec3::UnitX();  // end-effector travel direction
  double approach_half_angle = 0.0;    // 0 = single attack vector
  /// Near-encounter threshold for shortcut detection. Negative = derive
  /// half the nominal waypoint spacing. Zero disables all but exact hits.
  double near_target_radius = -1.0;
  SolveMode mode = SolveMode::eight_dof;
  bool cone_precheck = false;         // conservative gap-window pre-filter
  bool disable_geom_pruning = false;  // reference mode: skip reach prechecks
  bool refine_triangle_8dof = false;  // exact-triangle variant for segments 3/4
  int workers = 1;

  double resolved_epsilon(const ArmSpec& spec) const;
  double resolved_near_radius(const ArmSpec& spec) const;
  double nominal_spacing(const ArmSpec& spec) const;  // d_w
  void validate() const;
};

/// Candidate end-effector placements generated backward from the target.
/// For 6DOF the single point is the target itself.
struct BackwardEndpoints {
  std::vector<Vec3> points;      // p3 candidates: target - L4 * direction
  std::vector<Vec3> directions;  // end-effector travel direction per point
  std::vector<int> cone_indices; // quiver index per point, -1 = exact axis
};

BackwardEndpoints backward_endpoints(const Vec3& target, double L4, const Quiver& q,
                                     const Vec3& approach_axis, double half_angle,
                                     SolveMode mode);

struct Seg1Hypothesis {
  int quiver_index = -1;
  Vec3 dir = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  std::optional<Vec3> elbow;  // offset flexion pivot, when joint 1 is offset
  Mat3 frame = Mat3::Identity();
  std::vector<Vec3> samples;
};

/// A shortcut path produced by near-encounter of a segment hypothesis
/// with the target: the sublength up to the hit plus an optional bridge.
struct ShortcutPath {
  int segment_index = 1;  // 1 or 2
  int hit_sample_index = 0;
  std::vector<Vec3> prefix_samples;     // segment-1 samples (segment-2 hits only)
  std::vector<Vec3> sublength_samples;  // samples 1..hit along the hit segment
  std::optional<Vec3> bridge;           // bridging vector from the hit point to the target
  bool via_origin_direct = false;       // completed by a direct origin-to-target vector
  PoseChain basis_pose;                 // the hypothesis segments behind the shortcut
  double path_length = 0.0;
  int seg1_index = -1;  // quiver indices, for canonical ordering
  int seg2_index = -1;

  /// Tip path root-to-target, root excluded.
  std::vector<Vec3> tip_waypoints(const Vec3& target) const;
};

struct SolveStats {
  long seg1_candidates = 0;
  long seg1_limit_pass = 0;
  long seg1_reach_pass = 0;
  long seg1_survivors = 0;
  long pair_candidates = 0;
  long seg2_limit_pass = 0;
  long seg2_clear_pass = 0;
  long gap_tested = 0;
  long gap_pass = 0;
  long joint_pass = 0;
  long v3_clear_pass = 0;
  long solutions = 0;
  long shortcuts_found = 0;
  double wall_ms = 0.0;  // informational only; never serialized

  SolveStats& operator+=(const SolveStats& other);
};

struct SolutionSet {
  std::vector<PoseChain> solutions;     // canonical (seg1, seg2, cone) order
  std::vector<ShortcutPath> shortcuts;  // canonical (segment_index, seg1, seg2) order
  SolveStats stats;

  bool empty() const { return solutions.empty() && shortcuts.empty(); }
};

/// Quiver mappings for segment 1 that pass joint-1 limits, the reach
/// precheck against every target point (ANY passes), and collision along
/// the segment. Survivors carry their sample points and azimuth frame.
std::vector<Seg1Hypothesis> prune_segment1(const ArmSpec& spec, const Quiver& q,
                                           const VoxelGrid& grid,
                                           const std::vector<Vec3>& target_points,
                                           const ReachParams& params,
                                           std::vector<ShortcutPath>* shortcut_sink = nullptr,
                                           SolveStats* stats = nullptr,
                                           const Vec3* scan_target = nullptr);

struct GapCandidate {
  Vec3 v3 = Vec3::Zero();
  int backward_index = -1;
};

/// Gap vectors from p2 to each backward endpoint whose length lies within
/// epsilon of L3. The coarse |p2 - b| <= L3 + epsilon test runs first.
std::vector<GapCandidate> span_gap(const Vec3& p2, const std::vector<Vec3>& backward_pts,
                                   double L3, double epsilon);

/// Full reach-pose search: segment 1/2 hypotheses from the quiver, the
/// backward cone for segment 4, a gap-spanning free vector for segment 3,
/// pruned by geometry, obstacles, joint limits and self-collision.
/// Deterministic for any worker count.
SolutionSet solve_reach(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                        const Vec3& target, const ReachParams& params);

/// Input to the near-encounter scan: one segment hypothesis with its
/// ordered samples and per-sample collision verdicts.
struct HypothesisScan {
  int segment_index = 1;
  Vec3 origin = Vec3::Zero();  // proximal end of the scanned segment
  std::vector<Vec3> samples;
  std::vector<uint8_t> sample_clear;
  std::vector<Vec3> prefix_samples;  // already-cleared segment-1 samples (segment-2 scans)
  PoseChain basis_pose;
  int seg1_index = -1;
  int seg2_index = -1;
};

struct ShortReachHit {
  int hit_sample_index = 0;
  ShortcutPath shortcut;
};

/// Returns the first sample within near_target_radius of the target with
/// a collision-free proximal prefix, and the completed shortcut path.
std::optional<ShortReachHit> short_reach_scan(const HypothesisScan& hyp, const Vec3& target,
                                              const VoxelGrid& grid, const ArmSpec& spec,
                                              const ReachParams& params);

struct ChosenPath {
  enum class Kind { reach_pose, shortcut };
  Kind kind = Kind::reach_pose;
  PoseChain pose;         // when kind == reach_pose
  ShortcutPath shortcut;  // when kind == shortcut
  double path_length = 0.0;
};

/// Shortest-path selection: any shortcut beats every reach pose; ties are
/// broken by canonical order. Throws no-solution on an empty set.
ChosenPath select_solution(const SolutionSet& set);

}  // namespace reachplan
