#include "reachplan/arm_model.hpp"

#include <algorithm>
#include <cmath>

namespace reachplan {

namespace {

constexpr double kDegenerateSin = 1e-12;

Mat3 rot_z(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << c, -s, 0, s, c, 0, 0, 0, 1;
  return m;
}

Mat3 rot_y(double a) {
  Mat3 m;
  const double c = std::cos(a), s = std::sin(a);
  m << c, 0, s, 0, 1, 0, -s, 0, c;
  return m;
}

/// Azimuth/elevation of a direction expressed in the parent frame, with
/// the theta = 0 convention at flexion singularities.
struct LocalAngles {
  double theta = 0.0;
  double phi = 0.0;
  bool degenerate = false;
};

LocalAngles local_angles(const Mat3& parent, const Vec3& dir) {
  const Vec3 local = parent.transpose() * dir;
  LocalAngles a;
  const double planar = std::hypot(local.x(), local.y());
  a.phi = std::atan2(planar, local.z());
  if (planar < kDegenerateSin) {
    a.degenerate = true;
    a.theta = 0.0;
  } else {
    a.theta = std::atan2(local.y(), local.x());
  }
  return a;
}

}  // namespace

FrameStep advance_frame(const Mat3& parent, const Vec3& unit_dir) {
  const LocalAngles a = local_angles(parent, unit_dir);
  FrameStep step;
  step.theta = a.theta;
  step.phi = a.phi;
  step.degenerate = a.degenerate;
  step.after_azimuth = parent * rot_z(a.theta);
  step.frame = step.after_azimuth * rot_y(a.phi);
  return step;
}

namespace {

bool azimuth_in_range(double theta, const JointLimit& lim) {
  if (lim.full_azimuth()) return true;
  const double w = wrap_angle(theta);
  for (double cand : {w, w - 2.0 * kPi, w + 2.0 * kPi}) {
    if (cand >= lim.azim_min - 1e-12 && cand <= lim.azim_max + 1e-12) return true;
  }
  return false;
}

}  // namespace

double ArmSpec::total_length() const {
  double t = 0.0;
  for (double l : lengths) t += l;
  return t;
}

JointLimit ArmSpec::limit(int joint) const {
  if (joint < static_cast<int>(joint_limits.size())) return joint_limits[joint];
  return JointLimit{};
}

double ArmSpec::offset(int joint) const {
  if (joint < static_cast<int>(offsets.size())) return offsets[joint];
  return 0.0;
}

bool ArmSpec::has_offsets() const {
  return std::any_of(offsets.begin(), offsets.end(), [](double d) { return d != 0.0; });
}

Mat3 ArmSpec::base_frame() const {
  Mat3 f;
  f.col(2) = base_axis;
  f.col(0) = base_ref;
  f.col(1) = base_axis.cross(base_ref);
  return f;
}

void ArmSpec::validate() const {
  require(lengths.size() == 3 || lengths.size() == 4, Errc::invalid_parameter,
          "arm must have 3 or 4 segments");
  for (double l : lengths)
    require(l > 0.0, Errc::invalid_parameter, "segment lengths must be > 0");
  require(arm_radius >= 0.0, Errc::invalid_parameter, "arm_radius must be >= 0");
  for (const auto& lim : joint_limits) {
    require(lim.elev_min >= -1e-12 && lim.elev_max <= kPi + 1e-12 && lim.elev_min <= lim.elev_max,
            Errc::invalid_parameter, "elevation limits must satisfy 0 <= min <= max <= pi");
    require(lim.azim_min <= lim.azim_max, Errc::invalid_parameter,
            "azimuth limits must satisfy min <= max");
  }
  for (double d : offsets)
    require(d >= 0.0, Errc::invalid_parameter, "joint offsets must be >= 0");
  require(std::abs(base_axis.norm() - 1.0) <= 1e-9, Errc::invalid_parameter,
          "base_axis must be unit");
  require(std::abs(fold_plane_normal.norm() - 1.0) <= 1e-9, Errc::invalid_parameter,
          "fold_plane_normal must be unit");
  require(std::abs(base_axis.dot(base_ref)) <= 1e-9 && std::abs(base_ref.norm() - 1.0) <= 1e-9,
          Errc::invalid_parameter, "base_ref must be unit and orthogonal to base_axis");
}

std::vector<Vec3> forward_points(const ArmSpec& spec, const std::vector<Vec3>& segments) {
  require(static_cast<int>(segments.size()) == spec.segment_count(), Errc::invalid_parameter,
          "segment count does not match the arm");
  std::vector<Vec3> pts;
  pts.reserve(segments.size() + 1);
  pts.push_back(spec.root);
  for (const Vec3& s : segments) pts.push_back(pts.back() + s);
  return pts;
}

PoseChain chain_from_segments(const ArmSpec& spec, std::vector<Vec3> segments,
                              std::vector<int> quiver_indices) {
  PoseChain pose;
  pose.segments = std::move(segments);
  pose.quiver_indices = std::move(quiver_indices);
  pose.joints.reserve(pose.segments.size() + 1);
  pose.joints.push_back(spec.root);
  if (!spec.has_offsets()) {
    for (const Vec3& s : pose.segments) pose.joints.push_back(pose.joints.back() + s);
    return pose;
  }
  // Offset joints: propagate the azimuth frame up the chain to locate
  // each displaced flexion pivot.
  Mat3 frame = spec.base_frame();
  pose.elbows.reserve(pose.segments.size());
  for (std::size_t j = 0; j < pose.segments.size(); ++j) {
    const Vec3& s = pose.segments[j];
    const double len = s.norm();
    require(len > 0.0, Errc::degenerate_input, "zero-length segment");
    const LocalAngles a = local_angles(frame, s / len);
    const Mat3 after_azim = frame * rot_z(a.theta);
    const Vec3 elbow = pose.joints.back() + spec.offset(static_cast<int>(j)) * after_azim.col(0);
    pose.elbows.push_back(elbow);
    pose.joints.push_back(elbow + s);
    frame = after_azim * rot_y(a.phi);
  }
  return pose;
}

JointAngles vectors_to_joint_angles(const ArmSpec& spec, const PoseChain& pose) {
  JointAngles q;
  Mat3 frame = spec.base_frame();
  for (const Vec3& s : pose.segments) {
    const double len = s.norm();
    require(len > 0.0, Errc::degenerate_input, "zero-length segment");
    const LocalAngles a = local_angles(frame, s / len);
    q.azimuth.push_back(a.theta);
    q.elevation.push_back(a.phi);
    q.degenerate.push_back(a.degenerate ? 1 : 0);
    frame = frame * rot_z(a.theta) * rot_y(a.phi);
  }
  return q;
}

PoseChain joint_angles_to_vectors(const ArmSpec& spec, const JointAngles& q, bool check_limits) {
  require(q.joint_count() == spec.segment_count(), Errc::invalid_parameter,
          "joint count does not match the arm");
  if (check_limits) {
    require(angles_within_limits(spec, q), Errc::invalid_parameter,
            "joint angles violate the arm's limits");
  }
  std::vector<Vec3> segments;
  segments.reserve(q.joint_count());
  Mat3 frame = spec.base_frame();
  for (int j = 0; j < q.joint_count(); ++j) {
    frame = frame * rot_z(q.azimuth[j]) * rot_y(q.elevation[j]);
    segments.push_back(spec.length(j) * frame.col(2));
  }
  return chain_from_segments(spec, std::move(segments));
}

bool joint_angle_within(double theta, double phi, bool degenerate, const JointLimit& lim) {
  if (phi < lim.elev_min - 1e-12 || phi > lim.elev_max + 1e-12) return false;
  // Azimuth is physically undefined at a flexion singularity.
  if (!degenerate && !azimuth_in_range(theta, lim)) return false;
  return true;
}

bool angles_within_limits(const ArmSpec& spec, const JointAngles& q) {
  for (int j = 0; j < q.joint_count(); ++j) {
    if (!joint_angle_within(q.azimuth[j], q.elevation[j], q.degenerate[j] != 0, spec.limit(j)))
      return false;
  }
  return true;
}

bool joint_limits_ok(const ArmSpec& spec, const PoseChain& pose) {
  return angles_within_limits(spec, vectors_to_joint_angles(spec, pose));
}

namespace {

/// In-plane two-link solution: returns the point at distance la from `a`
/// and lb from `b`, in the plane with normal `n`, on the side nearer
/// `hint`. Throws when the triangle inequality fails.
Vec3 triangle_vertex(const Vec3& a, const Vec3& b, double la, double lb, const Vec3& n,
                     const Vec3& hint) {
  const Vec3 ab = b - a;
  const double c = ab.norm();
  require(c <= (la + lb) * (1.0 + 1e-12), Errc::unreachable_target,
          "target beyond combined segment lengths");
  require(c >= std::abs(la - lb) * (1.0 - 1e-12) - 1e-15, Errc::unreachable_target,
          "target inside the unreachable inner sphere");
  const Vec3 c_hat = ab / c;
  Vec3 m_hat = n.cross(c_hat);
  const double m_norm = m_hat.norm();
  require(m_norm > 1e-12, Errc::degenerate_input, "solution plane normal parallel to chord");
  m_hat /= m_norm;
  const double along = (c * c + la * la - lb * lb) / (2.0 * c);
  const double h2 = la * la - along * along;
  const double h = std::sqrt(std::max(0.0, h2));
  const Vec3 p_plus = a + along * c_hat + h * m_hat;
  const Vec3 p_minus = a + along * c_hat - h * m_hat;
  return ((p_plus - hint).squaredNorm() <= (p_minus - hint).squaredNorm()) ? p_plus : p_minus;
}

Vec3 plane_normal_for_refine(const PoseChain& approx, const Vec3& anchor, const Vec3& target,
                             int seg_a, int seg_b) {
  Vec3 n = approx.segments[seg_a].cross(approx.segments[seg_b]);
  if (n.norm() > 1e-12 * approx.segments[seg_a].norm() * approx.segments[seg_b].norm()) {
    return n.normalized();
  }
  // Parallel segments: fall back to the plane through the anchor, the
  // target, and the approximate mid vertex.
  n = (target - anchor).cross(approx.joints[seg_a + 1] - anchor);
  if (n.norm() > 1e-12) return n.normalized();
  // Fully collinear: any perpendicular of the chord will do.
  const Vec3 chord = (target - anchor).normalized();
  Vec3 seed = std::abs(chord.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return chord.cross(seed).normalized();
}

}  // namespace

PoseChain exact_refine_6dof(const ArmSpec& spec, const PoseChain& approx, const Vec3& target) {
  require(approx.segment_count() >= 3, Errc::invalid_parameter, "need a 3-segment pose");
  require(spec.offset(1) == 0.0 && spec.offset(2) == 0.0, Errc::invalid_parameter,
          "triangle refinement requires coaxial joints 2 and 3");
  const Vec3 p1 = approx.joints[1];
  const Vec3 n = plane_normal_for_refine(approx, p1, target, 1, 2);
  const Vec3 p2 = triangle_vertex(p1, target, spec.length(1), spec.length(2), n, approx.joints[2]);

  PoseChain out = approx;
  out.segments[1] = p2 - p1;
  out.segments[2] = target - p2;
  out.joints[2] = p2;
  out.joints[3] = target;
  if (out.quiver_indices.size() >= 3) {
    out.quiver_indices[1] = -1;
    out.quiver_indices[2] = -1;
  }
  return out;
}

PoseChain exact_refine_8dof(const ArmSpec& spec, const PoseChain& approx, const Vec3& target) {
  require(approx.segment_count() == 4, Errc::invalid_parameter, "need a 4-segment pose");
  require(spec.offset(2) == 0.0 && spec.offset(3) == 0.0, Errc::invalid_parameter,
          "8DOF refinement requires coaxial joints 3 and 4");
  const Vec3 v3 = approx.segments[2];
  const double v3_len = v3.norm();
  require(v3_len >= 1e-9, Errc::degenerate_input, "gap vector is numerically zero");

  const Vec3 p2 = approx.joints[2];
  const Vec3 d3 = target - p2;
  const Vec3 s3 = v3 * (spec.length(2) / v3_len);
  const Vec3 s4 = d3 - s3;

  PoseChain out = approx;
  out.segments[2] = s3;
  out.segments[3] = s4;
  out.joints[3] = p2 + s3;
  out.joints[4] = out.joints[3] + s4;
  out.s4_length_dev = std::abs(s4.norm() - spec.length(3));
  if (out.quiver_indices.size() == 4) {
    out.quiver_indices[2] = -1;
    out.quiver_indices[3] = -1;
  }
  return out;
}

PoseChain exact_refine_8dof_triangle(const ArmSpec& spec, const PoseChain& approx,
                                     const Vec3& target) {
  require(approx.segment_count() == 4, Errc::invalid_parameter, "need a 4-segment pose");
  require(spec.offset(2) == 0.0 && spec.offset(3) == 0.0, Errc::invalid_parameter,
          "8DOF refinement requires coaxial joints 3 and 4");
  const Vec3 p2 = approx.joints[2];
  const Vec3 n = plane_normal_for_refine(approx, p2, target, 2, 3);
  const Vec3 p3 = triangle_vertex(p2, target, spec.length(2), spec.length(3), n, approx.joints[3]);

  PoseChain out = approx;
  out.segments[2] = p3 - p2;
  out.segments[3] = target - p3;
  out.joints[3] = p3;
  out.joints[4] = target;
  out.s4_length_dev = std::abs(out.segments[3].norm() - spec.length(3));
  if (out.quiver_indices.size() == 4) {
    out.quiver_indices[2] = -1;
    out.quiver_indices[3] = -1;
  }
  return out;
}

double segment_segment_distance(const Vec3& a0, const Vec3& a1, const Vec3& b0, const Vec3& b1) {
  // Closest points between segments, clamped parametric form.
  const Vec3 d1 = a1 - a0;
  const Vec3 d2 = b1 - b0;
  const Vec3 r = a0 - b0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= 1e-30 && e <= 1e-30) {
    return r.norm();
  }
  if (a <= 1e-30) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-30) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      if (denom > 1e-30) {
        s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
      }
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((a0 + s * d1) - (b0 + t * d2)).norm();
}

std::vector<std::pair<Vec3, Vec3>> chain_links(const PoseChain& pose) {
  std::vector<std::pair<Vec3, Vec3>> links;
  for (std::size_t j = 0; j < pose.segments.size(); ++j) {
    if (!pose.elbows.empty() && (pose.elbows[j] - pose.joints[j]).squaredNorm() > 0.0) {
      links.emplace_back(pose.joints[j], pose.elbows[j]);
      links.emplace_back(pose.elbows[j], pose.joints[j + 1]);
    } else {
      links.emplace_back(pose.joints[j], pose.joints[j + 1]);
    }
  }
  return links;
}

bool self_collision_free(const ArmSpec& spec, const PoseChain& pose) {
  const auto links = chain_links(pose);
  const double min_sep = 2.0 * spec.arm_radius;
  for (std::size_t i = 0; i + 2 < links.size(); ++i) {
    for (std::size_t j = i + 2; j < links.size(); ++j) {
      if (segment_segment_distance(links[i].first, links[i].second, links[j].first,
                                   links[j].second) < min_sep) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace reachplan
