#pragma once

#include "reachplan/types.hpp"

#include <optional>
#include <vector>

namespace reachplan {

/// Allowed angle ranges at one joint. Elevation is the angle between the
/// proximal and distal segment directions (base axis vs segment 1 for the
/// root joint), in [0, pi]. Azimuth is measured about the proximal
/// segment axis from the reference direction propagated up the chain.
struct JointLimit {
  double elev_min = 0.0;
  double elev_max = kPi;
  double azim_min = -kPi;
  double azim_max = kPi;

  bool full_azimuth() const { return azim_min <= -kPi && azim_max >= kPi; }
};

struct ArmSpec {
  std::vector<double> lengths;  // 3 segments (6DOF) or 4 (8DOF), meters
  Vec3 root = Vec3::Zero();
  std::vector<JointLimit> joint_limits;  // one per joint; empty = unrestricted
  double arm_radius = 0.0;
  std::vector<double> offsets;  // flexion-axis offset per joint; empty/0 = coaxial
  Vec3 fold_plane_normal = Vec3::UnitY();
  double fold_flex = deg2rad(170.0);  // flexion angle of the folded zig-zag
  Vec3 base_axis = Vec3::UnitZ();     // joint-1 zero-elevation direction
  Vec3 base_ref = Vec3::UnitX();      // joint-1 zero-azimuth direction

  int segment_count() const { return static_cast<int>(lengths.size()); }
  double total_length() const;
  double length(int seg) const { return lengths[static_cast<std::size_t>(seg)]; }
  JointLimit limit(int joint) const;
  double offset(int joint) const;
  bool has_offsets() const;
  Mat3 base_frame() const;  // columns: ref, axis x ref, axis
  void validate() const;
};

/// Joint angles, one (azimuth, elevation) pair per joint. Azimuth is 0 by
/// convention (and flagged) where the joint is at a flexion singularity.
struct JointAngles {
  std::vector<double> azimuth;
  std::vector<double> elevation;
  std::vector<uint8_t> degenerate;

  int joint_count() const { return static_cast<int>(azimuth.size()); }
};

/// An arm articulation as global-frame segment vectors plus derived joint
/// loci. joints[0] is the root; joints[k] the distal end of segment k.
/// For offset joints the loci include the offset displacement and
/// `elbows` carries the flexion pivot of each joint.
struct PoseChain {
  std::vector<Vec3> segments;
  std::vector<Vec3> joints;
  std::vector<Vec3> elbows;          // empty when the arm is coaxial
  std::vector<Vec3> waypoints;       // collision-test samples, when captured
  std::vector<int> quiver_indices;   // per segment; -1 = free/refined vector
  double s4_length_dev = 0.0;        // | |s4| - L4 | recorded by 8DOF refinement

  int segment_count() const { return static_cast<int>(segments.size()); }
  const Vec3& tip() const { return joints.back(); }
  /// Distal end of segment 3 — the joint that traverses planned paths.
  const Vec3& tracked_point() const {
    return joints[std::min<std::size_t>(3, joints.size() - 1)];
  }
};

/// Pure vector-addition loci: p_k = root + sum_{i<=k} s_i (no offsets).
std::vector<Vec3> forward_points(const ArmSpec& spec, const std::vector<Vec3>& segments);

/// Build a PoseChain from segment vectors, applying joint offsets when the
/// arm has them (loci then differ from the plain cumulative sums).
PoseChain chain_from_segments(const ArmSpec& spec, std::vector<Vec3> segments,
                              std::vector<int> quiver_indices = {});

JointAngles vectors_to_joint_angles(const ArmSpec& spec, const PoseChain& pose);

PoseChain joint_angles_to_vectors(const ArmSpec& spec, const JointAngles& q,
                                  bool check_limits = false);

/// Replace segments 2 and 3 by the exact triangle solution in the plane of
/// the approximate solution: side lengths exactly L2, L3 and the tip at
/// `target`. Segment 1 is never moved. Of the two planar solutions the one
/// nearer the approximate p2 is returned.
PoseChain exact_refine_6dof(const ArmSpec& spec, const PoseChain& approx, const Vec3& target);

/// Renormalize segment 3 to exact length along the approximate gap vector
/// and recompute segment 4 to close the chain on `target` exactly.
/// Segments 1 and 2 stay discretized; | |s4| - L4 | is recorded in the
/// result's s4_length_dev.
PoseChain exact_refine_8dof(const ArmSpec& spec, const PoseChain& approx, const Vec3& target);

/// Variant that solves the segment 3/4 pair as an exact triangle (both
/// lengths exact, tip at target). Not the default refinement.
PoseChain exact_refine_8dof_triangle(const ArmSpec& spec, const PoseChain& approx,
                                     const Vec3& target);

/// Minimum distance between every pair of non-adjacent chain links must be
/// at least twice the arm radius.
bool self_collision_free(const ArmSpec& spec, const PoseChain& pose);

bool joint_limits_ok(const ArmSpec& spec, const PoseChain& pose);

bool angles_within_limits(const ArmSpec& spec, const JointAngles& q);

/// Range test for a single joint. Degenerate joints skip the azimuth test
/// (the angle is physically undefined there).
bool joint_angle_within(double theta, double phi, bool degenerate, const JointLimit& lim);

/// Closest distance between two 3-D line segments [a0,a1] and [b0,b1].
double segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1);

/// One step of the azimuth/elevation frame propagation: the angles of
/// `unit_dir` in `parent`, the frame after the azimuth rotation alone
/// (whose x column is the offset-pivot direction), and the full child
/// frame (whose z column is `unit_dir`).
struct FrameStep {
  double theta = 0.0;
  double phi = 0.0;
  bool degenerate = false;
  Mat3 after_azimuth = Mat3::Identity();
  Mat3 frame = Mat3::Identity();
};
FrameStep advance_frame(const Mat3& parent, const Vec3& unit_dir);

/// Consecutive chain links of a pose (offset links included), as endpoint
/// pairs in root-to-tip order. Used for collision and self-collision tests.
std::vector<std::pair<Vec3, Vec3>> chain_links(const PoseChain& pose);

}  // namespace reachplan
