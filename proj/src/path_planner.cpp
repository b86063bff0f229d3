#include "reachplan/path_planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace reachplan {

namespace {

double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 1e-30) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

double chord_to_angle(double chord) {
  return 2.0 * std::asin(std::clamp(chord / 2.0, 0.0, 1.0));
}

struct Walk {
  std::vector<Vec3> samples;
  bool clear = true;
};

Walk walk_points(const VoxelGrid& grid, const Vec3& from, const Vec3& to, int n) {
  Walk w;
  w.samples.reserve(n);
  const Vec3 diff = to - from;
  for (int k = 1; k <= n; ++k) {
    const Vec3 s = from + (static_cast<double>(k) / n) * diff;
    w.samples.push_back(s);
    if (!point_clear(grid, s)) w.clear = false;
  }
  return w;
}

bool link_clear_scaled(const VoxelGrid& grid, const Vec3& from, const Vec3& to, double spacing) {
  const double len = (to - from).norm();
  if (len == 0.0) return true;
  const int n = std::max(1, static_cast<int>(std::ceil(len / std::max(spacing, 1e-12))));
  return walk_points(grid, from, to, n).clear;
}

/// Collision check of a whole pose: n samples per segment, spacing-scaled
/// samples on offset links.
bool pose_clear(const VoxelGrid& grid, const PoseChain& pose, int n,
                double spacing) {
  for (std::size_t j = 0; j < pose.segments.size(); ++j) {
    Vec3 from = pose.joints[j];
    if (!pose.elbows.empty()) {
      if (!link_clear_scaled(grid, pose.joints[j], pose.elbows[j], spacing)) return false;
      from = pose.elbows[j];
    }
    if (!walk_points(grid, from, pose.joints[j + 1], n).clear) return false;
  }
  return true;
}

bool pose_valid(const ArmSpec& spec, const VoxelGrid& grid, const PoseChain& pose, int n,
                double spacing) {
  return pose_clear(grid, pose, n, spacing) && joint_limits_ok(spec, pose) &&
         self_collision_free(spec, pose);
}

Vec3 perpendicular_of(const Vec3& dir) {
  const Vec3 seed = std::abs(dir.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  return dir.cross(seed).normalized();
}

}  // namespace

double mean_polyline_deviation(const std::vector<Vec3>& pts, const std::vector<Vec3>& poly) {
  require(!pts.empty() && !poly.empty(), Errc::invalid_parameter, "empty polyline");
  double acc = 0.0;
  for (const Vec3& p : pts) {
    double best = (p - poly.front()).norm();
    for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
      best = std::min(best, point_segment_distance(p, poly[i], poly[i + 1]));
    }
    acc += best;
  }
  return acc / static_cast<double>(pts.size());
}

PathParams PathParams::resolved(const ArmSpec& spec, const ReachParams& rp) const {
  PathParams p = *this;
  if (p.d_w < 0.0) p.d_w = rp.nominal_spacing(spec);
  if (p.slack < 0.0) p.slack = 0.5 * p.d_w;
  if (p.joint1_max_move < 0.0) p.joint1_max_move = 0.5 * p.d_w + p.slack;
  if (p.joint2_max_move < 0.0) p.joint2_max_move = 1.0 * p.d_w + p.slack;
  if (p.epsilon_waypoint < 0.0) p.epsilon_waypoint = p.d_w;
  require(p.epsilon_waypoint > 0 && p.d_w > 0 && p.slack >= 0 && p.joint1_max_move > 0 &&
              p.joint2_max_move > 0 && p.unfold_steps >= 1,
          Errc::invalid_parameter, "path parameters must be positive");
  for (double f : p.relax_schedule)
    require(f >= 1.0, Errc::invalid_parameter, "relaxation factors must be >= 1");
  return p;
}

std::vector<const PoseChain*> PathPlan::full_sequence() const {
  std::vector<const PoseChain*> seq;
  for (const auto& p : unfold_prefix) seq.push_back(&p);
  for (std::size_t k = 0; k < poses.size(); ++k) {
    if (k == 0 && !unfold_prefix.empty()) continue;  // seam: poses[0] == unfold_prefix.back()
    seq.push_back(&poses[k]);
  }
  return seq;
}

bool smoothness_ok(const PoseChain& prev, const PoseChain& cand, const PathParams& params,
                   double relax) {
  const double d1 = (cand.joints[1] - prev.joints[1]).norm();
  const double d2 = (cand.joints[2] - prev.joints[2]).norm();
  return d1 <= params.joint1_max_move * relax + 1e-12 &&
         d2 <= params.joint2_max_move * relax + 1e-12;
}

namespace {

/// Append the fourth segment folded along the path: toward the previous
/// waypoint when possible, else forward, else straight on. Every option
/// is limit-, collision- and self-collision-checked.
std::optional<PoseChain> append_trail(const ArmSpec& spec, const VoxelGrid& grid,
                                      const PoseChain& chain3, const TrailContext& trail, int n) {
  const double L4 = spec.length(3);
  std::vector<Vec3> options;
  if (trail.back_dir) options.push_back(*trail.back_dir);
  if (trail.fwd_dir) options.push_back(*trail.fwd_dir);
  options.push_back(chain3.segments[2].normalized());

  for (const Vec3& dir : options) {
    std::vector<Vec3> segs = chain3.segments;
    std::vector<int> idx = chain3.quiver_indices;
    segs.push_back(L4 * dir);
    if (idx.size() == 3) idx.push_back(-1);
    PoseChain cand = chain_from_segments(spec, segs, idx);
    cand.waypoints = chain3.waypoints;
    if (!joint_limits_ok(spec, cand)) continue;
    const Walk w4 = walk_points(grid, cand.joints[3], cand.joints[4], n);
    if (!w4.clear) continue;
    if (!self_collision_free(spec, cand)) continue;
    cand.waypoints.insert(cand.waypoints.end(), w4.samples.begin(), w4.samples.end());
    return cand;
  }
  return std::nullopt;
}

TrailContext trail_context(const std::vector<Vec3>& wps, std::size_t k) {
  TrailContext t;
  if (k > 0) {
    const Vec3 d = wps[k - 1] - wps[k];
    if (d.norm() > 1e-12) t.back_dir = d.normalized();
  }
  if (k + 1 < wps.size()) {
    const Vec3 d = wps[k + 1] - wps[k];
    if (d.norm() > 1e-12) t.fwd_dir = d.normalized();
  }
  return t;
}

}  // namespace

std::optional<PoseChain> waypoint_ik(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                                     const Vec3& waypoint, const PoseChain& prev,
                                     const ReachParams& rp, const PathParams& pp, double relax,
                                     const TrailContext& trail, const PoseChain* junction_bias) {
  const int n = rp.n_samples_per_segment;
  const double eps = pp.epsilon_waypoint * relax + 1e-12;
  const double j1max = pp.joint1_max_move * relax + 1e-12;
  const double j2max = pp.joint2_max_move * relax + 1e-12;
  const double L1 = spec.length(0), L2 = spec.length(1), L3 = spec.length(2);
  const bool four = spec.segment_count() == 4;
  const double spacing = rp.nominal_spacing(spec);
  const Mat3 base = spec.base_frame();
  const JointLimit lim1 = spec.limit(0), lim2 = spec.limit(1), lim3 = spec.limit(2);
  const double d1 = spec.offset(0), d2 = spec.offset(1);

  // The smoothness bounds confine candidates to cones around the previous
  // segment directions; outside them no candidate can qualify.
  std::vector<int> cand_i, cand_j;
  if (spec.has_offsets()) {
    cand_i.resize(q.size());
    std::iota(cand_i.begin(), cand_i.end(), 0);
    cand_j = cand_i;
  } else {
    const double ang1 = chord_to_angle(j1max / L1) + 1e-9;
    const double ang2 = chord_to_angle((j1max + j2max) / L2) + 1e-9;
    cand_i = cone_subset(q, prev.segments[0].normalized(), std::min(kPi, ang1));
    cand_j = cone_subset(q, prev.segments[1].normalized(), std::min(kPi, ang2));
  }

  std::optional<PoseChain> best;
  double best_metric = 0.0;

  for (int i : cand_i) {
    const FrameStep st1 = advance_frame(base, q.vectors[i]);
    if (!joint_angle_within(st1.theta, st1.phi, st1.degenerate, lim1)) continue;
    Vec3 link1_start = spec.root;
    std::optional<Vec3> elbow1;
    if (d1 > 0.0) {
      elbow1 = spec.root + d1 * st1.after_azimuth.col(0);
      link1_start = *elbow1;
    }
    const Vec3 p1 = link1_start + L1 * q.vectors[i];
    const double move1 = (p1 - prev.joints[1]).norm();
    if (move1 > j1max) continue;

    bool walked1 = false;
    Walk walk1;

    for (int j : cand_j) {
      FrameStep st2;
      bool have_st2 = false;
      if (d2 > 0.0 || !lim2.full_azimuth() || lim2.elev_min > 0.0 || lim2.elev_max < kPi) {
        st2 = advance_frame(st1.frame, q.vectors[j]);
        have_st2 = true;
        if (!joint_angle_within(st2.theta, st2.phi, st2.degenerate, lim2)) continue;
      }
      Vec3 link2_start = p1;
      std::optional<Vec3> elbow2;
      if (d2 > 0.0) {
        elbow2 = p1 + d2 * st2.after_azimuth.col(0);
        link2_start = *elbow2;
      }
      const Vec3 p2 = link2_start + L2 * q.vectors[j];
      const double move2 = (p2 - prev.joints[2]).norm();
      if (move2 > j2max) continue;

      const Vec3 v3 = waypoint - p2;
      const double v3_len = v3.norm();
      if (std::abs(v3_len - L3) > eps || v3_len < 1e-12) continue;
      const Vec3 v3_hat = v3 / v3_len;

      if (!lim3.full_azimuth() || lim3.elev_min > 0.0 || lim3.elev_max < kPi) {
        if (!have_st2) {
          st2 = advance_frame(st1.frame, q.vectors[j]);
          have_st2 = true;
        }
        const FrameStep st3 = advance_frame(st2.frame, v3_hat);
        if (!joint_angle_within(st3.theta, st3.phi, st3.degenerate, lim3)) continue;
      }

      double metric = move1 + move2;
      if (junction_bias) {
        metric += (p1 - junction_bias->joints[1]).norm() +
                  (p2 - junction_bias->joints[2]).norm();
      }
      if (best && metric >= best_metric) continue;

      if (!walked1) {
        if (elbow1 && !link_clear_scaled(grid, spec.root, *elbow1, spacing)) break;
        walk1 = walk_points(grid, link1_start, p1, n);
        walked1 = true;
        if (!walk1.clear) break;  // segment 1 blocked for every j
      } else if (!walk1.clear) {
        break;
      }
      if (elbow2 && !link_clear_scaled(grid, p1, *elbow2, spacing)) continue;
      const Walk walk2 = walk_points(grid, link2_start, p2, n);
      if (!walk2.clear) continue;
      const Vec3 s3 = v3_hat * L3;
      const Vec3 p3 = p2 + s3;
      const Walk walk3 = walk_points(grid, p2, p3, n);
      if (!walk3.clear) continue;

      PoseChain chain = chain_from_segments(
          spec, {L1 * q.vectors[i], L2 * q.vectors[j], s3}, {i, j, -1});
      chain.waypoints = walk1.samples;
      chain.waypoints.insert(chain.waypoints.end(), walk2.samples.begin(), walk2.samples.end());
      chain.waypoints.insert(chain.waypoints.end(), walk3.samples.begin(), walk3.samples.end());

      if (four) {
        auto with_trail = append_trail(spec, grid, chain, trail, n);
        if (!with_trail) continue;
        chain = std::move(*with_trail);
      } else {
        if (!self_collision_free(spec, chain)) continue;
      }
      if (!joint_limits_ok(spec, chain)) continue;
      if (!smoothness_ok(prev, chain, pp, relax)) continue;

      best = std::move(chain);
      best_metric = metric;
    }
  }
  return best;
}

namespace {

struct PassOptions {
  std::vector<double> factors{1.0};
  bool cloud = false;
  double cloud_radius = 0.0;
  const PoseChain* fixed_first = nullptr;
  const PoseChain* junction_bias = nullptr;
};

struct PassResult {
  bool ok = false;
  int failed_index = -1;
  std::vector<PoseChain> poses;
  std::vector<double> relax;
  std::vector<Vec3> waypoints;
  std::vector<std::string> notes;
};

std::vector<double> with_unit_first(const std::vector<double>& schedule) {
  std::vector<double> f{1.0};
  f.insert(f.end(), schedule.begin(), schedule.end());
  return f;
}

/// Work backward from the anchor pose, finding at each waypoint the
/// qualifying solution closest in configuration to the previous one,
/// relaxing the filters (and, when enabled, substituting a ring of nearby
/// targets) only after failures.
PassResult backward_pass(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                         const std::vector<Vec3>& waypoints, const PoseChain& anchor,
                         const ReachParams& rp, const PathParams& pp, const PassOptions& opt) {
  PassResult res;
  const std::size_t m = waypoints.size();
  res.poses.assign(m, PoseChain{});
  res.relax.assign(m, 1.0);
  res.waypoints = waypoints;
  res.poses[m - 1] = anchor;

  for (std::size_t k = m - 1; k-- > 0;) {
    const PoseChain& prev = res.poses[k + 1];
    bool found = false;

    if (k == 0 && opt.fixed_first) {
      for (double f : opt.factors) {
        if (smoothness_ok(prev, *opt.fixed_first, pp, f)) {
          res.poses[0] = *opt.fixed_first;
          res.relax[0] = f;
          if (f > 1.0) res.notes.push_back("relaxed junction at waypoint 0");
          found = true;
          break;
        }
      }
      if (!found) {
        res.failed_index = 0;
        return res;
      }
      continue;
    }

    const TrailContext trail = trail_context(res.waypoints, k);
    const PoseChain* bias =
        (opt.fixed_first && k == 1) ? opt.fixed_first : opt.junction_bias;
    for (double f : opt.factors) {
      if (auto pose = waypoint_ik(spec, q, grid, res.waypoints[k], prev, rp, pp, f, trail, bias)) {
        res.poses[k] = std::move(*pose);
        res.relax[k] = f;
        if (f > 1.0)
          res.notes.push_back("relaxed x" + std::to_string(f) + " at waypoint " +
                              std::to_string(k));
        found = true;
        break;
      }
    }

    if (!found && opt.cloud) {
      // Substitute targets on a ring around the blocked waypoint, in the
      // plane normal to the local path direction.
      Vec3 dir = res.waypoints[k + 1] - res.waypoints[k];
      if (dir.norm() < 1e-12 && k > 0) dir = res.waypoints[k] - res.waypoints[k - 1];
      if (dir.norm() < 1e-12) dir = Vec3::UnitZ();
      dir.normalize();
      const Vec3 u = perpendicular_of(dir);
      const Vec3 v = dir.cross(u);
      for (int t = 0; t < 8 && !found; ++t) {
        const double a = 2.0 * kPi * t / 8.0;
        const Vec3 cp = res.waypoints[k] + opt.cloud_radius * (std::cos(a) * u + std::sin(a) * v);
        for (double f : opt.factors) {
          if (auto pose = waypoint_ik(spec, q, grid, cp, prev, rp, pp, f, trail, bias)) {
            res.poses[k] = std::move(*pose);
            res.relax[k] = f;
            res.waypoints[k] = cp;
            res.notes.push_back("cloud target at waypoint " + std::to_string(k));
            found = true;
            break;
          }
        }
      }
    }

    if (!found) {
      res.failed_index = static_cast<int>(k);
      return res;
    }
  }
  res.ok = true;
  return res;
}

/// Joint-space interpolation between two poses of the same arm, grown
/// until every consecutive pair satisfies the unrelaxed smoothness
/// bounds. Returns nullopt if any interpolated pose is invalid.
std::optional<std::vector<PoseChain>> interpolate_poses(const ArmSpec& spec,
                                                        const VoxelGrid& grid,
                                                        const PoseChain& from,
                                                        const PoseChain& to, int base_steps,
                                                        const ReachParams& rp,
                                                        const PathParams& pp) {
  const JointAngles qa = vectors_to_joint_angles(spec, from);
  const JointAngles qb = vectors_to_joint_angles(spec, to);
  const int n = rp.n_samples_per_segment;
  const double spacing = rp.nominal_spacing(spec);

  for (int steps = std::max(1, base_steps); steps <= 4096; steps *= 2) {
    std::vector<PoseChain> seq;
    seq.reserve(steps + 1);
    seq.push_back(from);
    bool invalid = false;
    for (int s = 1; s < steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      JointAngles qt;
      for (int j = 0; j < qa.joint_count(); ++j) {
        qt.azimuth.push_back(qa.azimuth[j] + t * wrap_angle(qb.azimuth[j] - qa.azimuth[j]));
        qt.elevation.push_back(qa.elevation[j] + t * (qb.elevation[j] - qa.elevation[j]));
        qt.degenerate.push_back(0);
      }
      PoseChain pose = joint_angles_to_vectors(spec, qt);
      if (!pose_valid(spec, grid, pose, n, spacing)) {
        invalid = true;
        break;
      }
      seq.push_back(std::move(pose));
    }
    if (invalid) return std::nullopt;
    seq.push_back(to);
    bool smooth = true;
    for (std::size_t s = 0; s + 1 < seq.size(); ++s) {
      if (!smoothness_ok(seq[s], seq[s + 1], pp, 1.0)) {
        smooth = false;
        break;
      }
    }
    if (smooth) return seq;
  }
  return std::nullopt;
}

Vec3 pose_plane_normal(const PoseChain& pose) {
  Vec3 n = pose.segments[0].cross(pose.segments[1]);
  if (n.norm() <= 1e-12) return perpendicular_of(pose.segments[0].normalized());
  return n.normalized();
}

/// Rotate the folded pose so its first segment and fold plane co-align
/// with the root-triangle pose, then unfold by angle interpolation.
std::optional<std::vector<PoseChain>> build_unfold(const ArmSpec& spec, const VoxelGrid& grid,
                                                   const PoseChain& triangle,
                                                   const ReachParams& rp, const PathParams& pp) {
  const PoseChain fold = folded_pose(spec);
  const Vec3 u1f = fold.segments[0].normalized();
  const Vec3 u1t = triangle.segments[0].normalized();
  const Vec3 nf = pose_plane_normal(fold);
  const Vec3 nt = pose_plane_normal(triangle);

  Mat3 a, b;
  a.col(0) = u1f;
  a.col(1) = nf.cross(u1f);
  a.col(2) = nf;
  b.col(0) = u1t;
  b.col(1) = nt.cross(u1t);
  b.col(2) = nt;
  const Mat3 rot = b * a.transpose();

  std::vector<Vec3> segs;
  segs.reserve(fold.segments.size());
  for (const Vec3& s : fold.segments) segs.push_back(rot * s);
  const PoseChain rotated = chain_from_segments(spec, segs);

  const int n = rp.n_samples_per_segment;
  if (!pose_valid(spec, grid, rotated, n, rp.nominal_spacing(spec))) return std::nullopt;
  return interpolate_poses(spec, grid, rotated, triangle, pp.unfold_steps, rp, pp);
}

struct CandidateBuild {
  std::string kind;
  std::vector<Vec3> waypoints;  // root-to-target, waypoints[0] = root
  PoseChain anchor;             // final pose, already refined (and trailed)
  std::string fail_reason;
  bool ok = false;
};

/// Waypoint list and final pose for one chosen path (reach pose or
/// shortcut). The anchor refinement may fail; the caller then moves on to
/// the next candidate.
CandidateBuild make_candidate_build(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                                    const ChosenPath& cand, const Vec3& target,
                                    const ReachParams& rp) {
  CandidateBuild out;
  const int n = rp.n_samples_per_segment;
  try {
    if (cand.kind == ChosenPath::Kind::reach_pose) {
      out.kind = "reach-pose";
      const int traversal_segs = std::min(3, cand.pose.segment_count());
      out.waypoints.push_back(spec.root);
      out.waypoints.insert(out.waypoints.end(), cand.pose.waypoints.begin(),
                           cand.pose.waypoints.begin() + traversal_segs * n);
      if (cand.pose.segment_count() == 4) {
        out.anchor = rp.refine_triangle_8dof
                         ? exact_refine_8dof_triangle(spec, cand.pose, target)
                         : exact_refine_8dof(spec, cand.pose, target);
      } else {
        PoseChain refined = exact_refine_6dof(spec, cand.pose, target);
        if (spec.segment_count() == 4) {
          auto trailed = append_trail(spec, grid, refined,
                                      trail_context(out.waypoints, out.waypoints.size() - 1), n);
          if (!trailed) {
            out.fail_reason = "no valid fourth-segment fold at the final pose";
            return out;
          }
          refined = std::move(*trailed);
        }
        out.anchor = std::move(refined);
      }
    } else {
      out.kind = "shortcut";
      out.waypoints.push_back(spec.root);
      const auto tips = cand.shortcut.tip_waypoints(target);
      out.waypoints.insert(out.waypoints.end(), tips.begin(), tips.end());

      ReachParams rp6 = rp;
      rp6.mode = SolveMode::six_dof;
      rp6.near_target_radius = 0.0;
      const Vec3 final_wp = out.waypoints.back();
      const SolutionSet anchor_set = solve_reach(spec, q, grid, final_wp, rp6);
      if (anchor_set.solutions.empty()) {
        out.fail_reason = "no full pose at the shortcut endpoint";
        return out;
      }
      ChosenPath anchor_choice = select_solution(anchor_set);
      PoseChain refined = exact_refine_6dof(spec, anchor_choice.pose, final_wp);
      if (spec.segment_count() == 4) {
        auto trailed = append_trail(spec, grid, refined,
                                    trail_context(out.waypoints, out.waypoints.size() - 1), n);
        if (!trailed) {
          out.fail_reason = "no valid fourth-segment fold at the shortcut pose";
          return out;
        }
        refined = std::move(*trailed);
      }
      out.anchor = std::move(refined);
    }
  } catch (const Error& e) {
    out.fail_reason = e.what();
    return out;
  }
  out.ok = true;
  return out;
}

PathPlan assemble_plan(PassResult&& pass, std::vector<PoseChain>&& unfold,
                       const std::string& kind) {
  PathPlan plan;
  plan.waypoints = std::move(pass.waypoints);
  plan.poses = std::move(pass.poses);
  plan.unfold_prefix = std::move(unfold);
  plan.provenance.kind = kind;
  plan.provenance.relax_per_waypoint = std::move(pass.relax);
  plan.provenance.notes = std::move(pass.notes);
  return plan;
}

struct AttemptResult {
  bool ok = false;
  PathPlan plan;
  PlanFailure failure;
};

AttemptResult attempt_candidate(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                                const ChosenPath& cand, const Vec3& target, const ReachParams& rp,
                                const PathParams& pp, const PassOptions& opt) {
  AttemptResult res;
  CandidateBuild build = make_candidate_build(spec, q, grid, cand, target, rp);
  if (!build.ok) {
    res.failure = {cand, build.waypoints, -1, build.fail_reason};
    return res;
  }
  PassResult pass = backward_pass(spec, q, grid, build.waypoints, build.anchor, rp, pp, opt);
  if (!pass.ok) {
    res.failure = {cand, build.waypoints, pass.failed_index, "no pose at waypoint"};
    return res;
  }
  auto unfold = build_unfold(spec, grid, pass.poses[0], rp, pp);
  if (!unfold) {
    res.failure = {cand, build.waypoints, 0, "unfold blocked"};
    return res;
  }
  res.ok = true;
  res.plan = assemble_plan(std::move(pass), std::move(*unfold), build.kind);
  return res;
}

std::vector<Vec3> candidate_tip_path(const ChosenPath& cand, const ReachParams& rp,
                                     const Vec3& target) {
  if (cand.kind == ChosenPath::Kind::shortcut) return cand.shortcut.tip_waypoints(target);
  const int n = rp.n_samples_per_segment;
  const int traversal_segs = std::min(3, cand.pose.segment_count());
  return {cand.pose.waypoints.begin(), cand.pose.waypoints.begin() + traversal_segs * n};
}

std::vector<ChosenPath> alternate_candidates(const SolutionSet& all, const ChosenPath& failed,
                                             const ReachParams& rp, const Vec3& target) {
  const std::vector<Vec3> failed_path = candidate_tip_path(failed, rp, target);
  struct Scored {
    double dev;
    std::size_t ordinal;
    ChosenPath cand;
  };
  std::vector<Scored> scored;
  std::size_t ordinal = 0;
  for (const auto& sc : all.shortcuts) {
    ChosenPath c;
    c.kind = ChosenPath::Kind::shortcut;
    c.shortcut = sc;
    c.path_length = sc.path_length;
    if (failed.kind == ChosenPath::Kind::shortcut &&
        sc.seg1_index == failed.shortcut.seg1_index &&
        sc.seg2_index == failed.shortcut.seg2_index &&
        sc.segment_index == failed.shortcut.segment_index) {
      ++ordinal;
      continue;
    }
    scored.push_back(
        {mean_polyline_deviation(sc.tip_waypoints(target), failed_path), ordinal++, c});
  }
  for (const auto& sol : all.solutions) {
    if (failed.kind == ChosenPath::Kind::reach_pose &&
        sol.quiver_indices == failed.pose.quiver_indices) {
      ++ordinal;
      continue;
    }
    ChosenPath c;
    c.kind = ChosenPath::Kind::reach_pose;
    c.pose = sol;
    scored.push_back(
        {mean_polyline_deviation(candidate_tip_path(c, rp, target), failed_path), ordinal++,
         c});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return std::tie(a.dev, a.ordinal) < std::tie(b.dev, b.ordinal);
  });

  // Nearest few first; if those fail, far candidates are more likely to
  // dodge whatever blocked the near ones.
  constexpr std::size_t kNear = 3;
  constexpr std::size_t kCap = 16;
  std::vector<ChosenPath> ordered;
  for (std::size_t k = 0; k < scored.size() && k < kNear; ++k) ordered.push_back(scored[k].cand);
  for (std::size_t k = scored.size(); k-- > kNear && ordered.size() < kCap;)
    ordered.push_back(scored[k].cand);
  return ordered;
}

std::vector<double> escalated_factors(const PathParams& pp) {
  std::vector<double> f = with_unit_first(pp.relax_schedule);
  if (!pp.relax_schedule.empty()) {
    const double last = pp.relax_schedule.back();
    for (double s : pp.relax_schedule) f.push_back(last * s);
  }
  return f;
}

ArmSpec virtual_arm(const Vec3& root, double reach, double clamp_total) {
  ArmSpec v;
  const double lv = std::max(1e-6, std::min(reach, clamp_total) / 3.0);
  v.lengths = {lv, lv, lv};
  v.root = root;
  v.arm_radius = 0.0;
  return v;
}

ReachParams virtual_params(const ReachParams& rp) {
  ReachParams v = rp;
  v.mode = SolveMode::six_dof;
  v.epsilon_gap = -1.0;  // re-derive for the virtual lengths
  v.near_target_radius = 0.0;
  v.approach_half_angle = 0.0;
  return v;
}

bool screen_real_reach(const ArmSpec& spec, const std::vector<Vec3>& wps, int n, double eps) {
  // End and mid waypoint of each virtual segment must be inside the real
  // arm's reachable band before the full set is attempted.
  const double r_max = spec.length(0) + spec.length(1) + spec.length(2) + eps;
  const double lmax = std::max({spec.length(0), spec.length(1), spec.length(2)});
  const double r_min =
      std::max(0.0, 2.0 * lmax - (spec.length(0) + spec.length(1) + spec.length(2))) - eps;
  const std::size_t segs = wps.size() / static_cast<std::size_t>(n);
  for (std::size_t s = 0; s < segs; ++s) {
    for (std::size_t k : {s * n + n / 2, s * n + n - 1}) {
      const double d = (wps[k] - spec.root).norm();
      if (d > r_max || d < std::max(0.0, r_min)) return false;
    }
  }
  return true;
}

}  // namespace

PoseChain folded_pose(const ArmSpec& spec) {
  spec.validate();
  const Vec3 n = spec.fold_plane_normal;
  Vec3 seed = Vec3::UnitX();
  if (std::abs(n.dot(seed)) > std::abs(n.dot(Vec3::UnitZ()))) seed = Vec3::UnitZ();
  if (std::abs(n.dot(seed)) > std::abs(n.dot(Vec3::UnitY()))) seed = Vec3::UnitY();
  Vec3 dir = (seed - seed.dot(n) * n).normalized();

  std::vector<Vec3> segs;
  double sign = 1.0;
  for (int j = 0; j < spec.segment_count(); ++j) {
    segs.push_back(spec.length(j) * dir);
    dir = Eigen::AngleAxisd(sign * spec.fold_flex, n) * dir;
    sign = -sign;
  }
  return chain_from_segments(spec, segs);
}

PathPlan plan_from_reach(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                         const ChosenPath& chosen, const SolutionSet& all_solutions,
                         const Vec3& target, const ReachParams& rp, const PathParams& pp) {
  const PathParams ppr = pp.resolved(spec, rp);
  PassOptions opt;
  opt.factors = with_unit_first(ppr.relax_schedule);
  AttemptResult res = attempt_candidate(spec, q, grid, chosen, target, rp, ppr, opt);
  if (res.ok) return std::move(res.plan);
  return fallback_cascade(spec, q, grid, res.failure, all_solutions, target, rp, ppr);
}

PathPlan fallback_cascade(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                          const PlanFailure& failure, const SolutionSet& all_solutions,
                          const Vec3& target, const ReachParams& rp, const PathParams& pp) {
  const PathParams ppr = pp.resolved(spec, rp);

  // 1a: escalate the relaxation ladder at (and past) the blocked waypoint.
  PassOptions esc;
  esc.factors = escalated_factors(ppr);
  {
    AttemptResult res = attempt_candidate(spec, q, grid, failure.candidate, target, rp, ppr, esc);
    if (res.ok) {
      res.plan.provenance.notes.push_back("fallback: relaxation escalation");
      return std::move(res.plan);
    }
  }

  // 1b: add a cloud of substitute targets around blocked waypoints.
  PassOptions cloud = esc;
  cloud.cloud = true;
  cloud.cloud_radius = 2.0 * ppr.epsilon_waypoint;
  {
    AttemptResult res =
        attempt_candidate(spec, q, grid, failure.candidate, target, rp, ppr, cloud);
    if (res.ok) {
      res.plan.provenance.notes.push_back("fallback: target cloud");
      return std::move(res.plan);
    }
  }

  // 2: alternate reach solutions, near the failed path first, then far.
  for (const ChosenPath& cand :
       alternate_candidates(all_solutions, failure.candidate, rp, target)) {
    AttemptResult res = attempt_candidate(spec, q, grid, cand, target, rp, ppr, cloud);
    if (res.ok) {
      res.plan.provenance.notes.push_back("fallback: alternate solution");
      return std::move(res.plan);
    }
  }

  // 3: virtual-arm detour from the blocked waypoint to the target.
  CandidateBuild build = make_candidate_build(spec, q, grid, failure.candidate, target, rp);
  if (build.ok && failure.blocked_index > 0 && !failure.waypoints.empty()) {
    const Vec3 path_target = build.anchor.tracked_point();
    std::vector<Vec3> work_prefix(failure.waypoints.begin(),
                                  failure.waypoints.begin() + failure.blocked_index + 1);
    for (int depth = 0; depth < 3; ++depth) {
      const Vec3 from = work_prefix.back();
      const ArmSpec vspec = virtual_arm(from, (path_target - from).norm(), spec.total_length());
      SolutionSet vset;
      try {
        vset = solve_reach(vspec, q, grid, path_target, virtual_params(rp));
      } catch (const Error&) {
        break;
      }
      if (vset.solutions.empty()) break;

      bool advanced = false;
      std::size_t tried = 0;
      for (const PoseChain& v : vset.solutions) {
        if (++tried > 8) break;
        std::vector<Vec3> stitched = work_prefix;
        stitched.insert(stitched.end(), v.waypoints.begin(), v.waypoints.end());
        PassResult pass = backward_pass(spec, q, grid, stitched, build.anchor, rp, ppr, cloud);
        if (pass.ok) {
          auto unfold = build_unfold(spec, grid, pass.poses[0], rp, ppr);
          if (!unfold) continue;
          PathPlan plan = assemble_plan(std::move(pass), std::move(*unfold), build.kind);
          plan.provenance.notes.push_back("fallback: virtual-arm detour");
          return plan;
        }
        if (pass.failed_index > static_cast<int>(work_prefix.size())) {
          // Blocked inside the detour: reapply from the new blockage.
          work_prefix.assign(stitched.begin(), stitched.begin() + pass.failed_index + 1);
          advanced = true;
          break;
        }
      }
      if (!advanced) break;
    }
  }

  fail(Errc::no_path, "no motion plan after relaxation, alternate solutions and detours");
}

PathPlan plan_reach_then_path(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                              const Vec3& target, const ReachParams& rp, const PathParams& pp) {
  const SolutionSet set = solve_reach(spec, q, grid, target, rp);
  const ChosenPath chosen = select_solution(set);
  return plan_from_reach(spec, q, grid, chosen, set, target, rp, pp);
}

namespace {

struct ArbitraryAttempt {
  bool ok = false;
  PathPlan plan;
};

/// Plan along a virtual tip path with the start pose pinned. Shared by
/// the arbitrary-pose planner and dynamic replanning.
ArbitraryAttempt plan_virtual_path(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                                   const PoseChain& start_pose, const ReachParams& rp,
                                   const PathParams& pp,
                                   const std::vector<const PoseChain*>& candidate_order,
                                   const PoseChain& anchor, const Vec3& path_target) {
  ArbitraryAttempt out;
  const Vec3 e0 = start_pose.tracked_point();
  PassOptions opt;
  opt.factors = with_unit_first(pp.relax_schedule);
  opt.fixed_first = &start_pose;

  for (const PoseChain* v : candidate_order) {
    if (!screen_real_reach(spec, v->waypoints, rp.n_samples_per_segment, pp.epsilon_waypoint))
      continue;
    std::vector<Vec3> wps{e0};
    wps.insert(wps.end(), v->waypoints.begin(), v->waypoints.end());
    wps.back() = path_target;
    PassResult pass = backward_pass(spec, q, grid, wps, anchor, rp, pp, opt);
    if (!pass.ok) continue;
    out.ok = true;
    out.plan.waypoints = std::move(pass.waypoints);
    out.plan.poses = std::move(pass.poses);
    out.plan.provenance.kind = "virtual-arm";
    out.plan.provenance.relax_per_waypoint = std::move(pass.relax);
    out.plan.provenance.notes = std::move(pass.notes);
    return out;
  }
  return out;
}

/// Final pose at the target for a virtual-path plan, honoring the
/// requested solve mode (and approach cone for 8DOF).
std::optional<PoseChain> build_target_anchor(const ArmSpec& spec, const Quiver& q,
                                             const VoxelGrid& grid, const Vec3& target,
                                             const ReachParams& rp,
                                             const Vec3& approach_hint) {
  ReachParams rpa = rp;
  rpa.near_target_radius = 0.0;
  SolutionSet set;
  try {
    set = solve_reach(spec, q, grid, target, rpa);
  } catch (const Error&) {
    return std::nullopt;
  }
  if (set.solutions.empty()) return std::nullopt;
  ChosenPath choice = select_solution(set);
  try {
    if (choice.pose.segment_count() == 4) {
      return exact_refine_8dof(spec, choice.pose, target);
    }
    PoseChain refined = exact_refine_6dof(spec, choice.pose, target);
    if (spec.segment_count() == 4) {
      TrailContext trail;
      if (approach_hint.norm() > 1e-12) trail.back_dir = -approach_hint.normalized();
      auto trailed = append_trail(spec, grid, refined, trail, rp.n_samples_per_segment);
      if (!trailed) return std::nullopt;
      refined = std::move(*trailed);
    }
    return refined;
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

PathPlan plan_arbitrary(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                        const PoseChain& start_pose, const Vec3& target, const ReachParams& rp,
                        const PathParams& pp) {
  const PathParams ppr = pp.resolved(spec, rp);
  const Vec3 e0 = start_pose.tracked_point();

  if ((e0 - target).norm() <= ppr.epsilon_waypoint &&
      spec.segment_count() == start_pose.segment_count()) {
    PathPlan plan;
    plan.waypoints = {e0};
    plan.poses = {start_pose};
    plan.provenance.kind = "virtual-arm";
    plan.provenance.relax_per_waypoint = {1.0};
    return plan;
  }

  const auto anchor =
      build_target_anchor(spec, q, grid, target, rp, target - e0);
  if (anchor) {
    const Vec3 path_target = anchor->tracked_point();
    const ArmSpec vspec = virtual_arm(e0, (path_target - e0).norm(), spec.total_length());
    const ReachParams vrp = virtual_params(rp);
    SolutionSet vset;
    try {
      vset = solve_reach(vspec, q, grid, path_target, vrp);
    } catch (const Error&) {
      vset = SolutionSet{};
    }
    std::vector<const PoseChain*> order;
    std::size_t cap = 24;
    for (const auto& s : vset.solutions) {
      order.push_back(&s);
      if (order.size() >= cap) break;
    }
    ArbitraryAttempt attempt =
        plan_virtual_path(spec, q, grid, start_pose, rp, ppr, order, *anchor, path_target);
    if (attempt.ok) return std::move(attempt.plan);
  }

  // Out-and-back: retract along a reach path to the start tip, back into
  // the folded pose, then unfold outward to the new target.
  ReachParams rp_back = rp;
  rp_back.mode = SolveMode::six_dof;
  rp_back.approach_half_angle = 0.0;
  PathPlan back = plan_reach_then_path(spec, q, grid, e0, rp_back, ppr);
  PathPlan out = plan_reach_then_path(spec, q, grid, target, rp, ppr);

  double junction_relax = 0.0;
  for (double f : with_unit_first(ppr.relax_schedule)) {
    if (smoothness_ok(start_pose, back.poses.back(), ppr, f)) {
      junction_relax = f;
      break;
    }
  }
  require(junction_relax > 0.0, Errc::no_path,
          "start pose does not join the retraction path smoothly");

  const auto back_seq = back.full_sequence();
  const auto out_seq = out.full_sequence();
  auto bridge = interpolate_poses(spec, grid, *back_seq.front(), *out_seq.front(),
                                  ppr.unfold_steps, rp, ppr);
  require(bridge.has_value(), Errc::no_path, "folded poses of the two legs cannot be joined");

  PathPlan plan;
  plan.provenance.kind = "out-and-back";
  auto push = [&plan](const PoseChain& p, double relax) {
    plan.poses.push_back(p);
    plan.waypoints.push_back(p.tracked_point());
    plan.provenance.relax_per_waypoint.push_back(relax);
  };
  push(start_pose, junction_relax);
  for (std::size_t k = back_seq.size(); k-- > 0;) {
    const std::size_t wp_count = back.poses.size();
    const std::size_t seq_pos = k;
    double relax = 1.0;
    if (seq_pos >= back_seq.size() - wp_count) {
      relax = back.provenance
                  .relax_per_waypoint[seq_pos - (back_seq.size() - wp_count)];
    }
    push(*back_seq[k], relax);
  }
  for (std::size_t k = 1; k + 1 < bridge->size(); ++k) push((*bridge)[k], 1.0);
  for (std::size_t k = 0; k < out_seq.size(); ++k) {
    const std::size_t wp_count = out.poses.size();
    double relax = 1.0;
    if (k >= out_seq.size() - wp_count) {
      relax = out.provenance.relax_per_waypoint[k - (out_seq.size() - wp_count)];
    }
    push(*out_seq[k], relax);
  }
  plan.provenance.notes.push_back("out-and-back via the folded pose");
  return plan;
}

PathPlan replan_dynamic(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid_static,
                        const PathPlan& active, int current_index,
                        const SceneObstacle& new_obstacle, const ReplanTiming& timing,
                        const ReachParams& rp, const PathParams& pp) {
  const PathParams ppr = pp.resolved(spec, rp);
  const int m = static_cast<int>(active.poses.size());
  require(current_index >= 0 && current_index < m, Errc::invalid_parameter,
          "current waypoint index out of range");
  require(timing.waypoint_period > 0.0 && timing.replan_per_waypoint >= 0.0,
          Errc::invalid_parameter, "replan timing must be positive");

  // Overlay the dynamic obstacle with the same dilation as the scene.
  VoxelGrid aug = grid_static;
  VoxelGrid overlay = build_grid(aug.origin, aug.origin + Vec3(aug.dims[0] * aug.voxel_size,
                                                               aug.dims[1] * aug.voxel_size,
                                                               aug.dims[2] * aug.voxel_size),
                                 aug.voxel_size);
  mark_obstacles(overlay, {new_obstacle});
  dilate(overlay, grid_static.dilation_radius);
  for (std::size_t c = 0; c < aug.occupancy.size() && c < overlay.occupancy.size(); ++c) {
    if (overlay.occupancy[c]) aug.occupancy[c] = 1;
  }

  const int n = rp.n_samples_per_segment;
  const double spacing = rp.nominal_spacing(spec);
  int collide_at = -1;
  for (int k = 0; k < m; ++k) {
    if (!pose_clear(aug, active.poses[k], n, spacing)) {
      collide_at = k;
      break;
    }
  }
  if (collide_at < 0) return active;  // obstacle never touches the plan

  require(collide_at - current_index >= 3, Errc::infeasible_timing,
          "collision fewer than three waypoints ahead of the arm");
  const double est = timing.replan_per_waypoint * (m - current_index);
  const int switch_index =
      current_index + std::max(1, static_cast<int>(std::ceil(est / timing.waypoint_period))) + 1;
  require(switch_index <= collide_at - 1, Errc::infeasible_timing,
          "no time to switch paths before the collision point");

  const PoseChain& switch_pose = active.poses[switch_index];
  const Vec3 from = switch_pose.tracked_point();
  const Vec3 target = active.waypoints.back();

  const auto anchor = build_target_anchor(spec, q, aug, target, rp, target - from);
  require(anchor.has_value(), Errc::no_path,
          "target unreachable while the dynamic obstacle is in the way");
  const Vec3 path_target = anchor->tracked_point();

  const ArmSpec vspec = virtual_arm(from, (path_target - from).norm(), spec.total_length());
  SolutionSet vset;
  try {
    vset = solve_reach(vspec, q, aug, path_target, virtual_params(rp));
  } catch (const Error&) {
    vset = SolutionSet{};
  }
  require(!vset.solutions.empty(), Errc::no_path,
          "no avoidance path around the dynamic obstacle");

  // Least direction change from the original route: candidates ordered by
  // mean deviation from the original waypoint polyline, first valid wins.
  struct Scored {
    double dev;
    std::size_t ordinal;
    const PoseChain* pose;
  };
  std::vector<Scored> scored;
  for (std::size_t c = 0; c < vset.solutions.size(); ++c) {
    std::vector<Vec3> tip{from};
    tip.insert(tip.end(), vset.solutions[c].waypoints.begin(),
               vset.solutions[c].waypoints.end());
    scored.push_back({mean_polyline_deviation(tip, active.waypoints), c, &vset.solutions[c]});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    return std::tie(a.dev, a.ordinal) < std::tie(b.dev, b.ordinal);
  });
  std::vector<const PoseChain*> order;
  for (const auto& s : scored) order.push_back(s.pose);

  ArbitraryAttempt attempt =
      plan_virtual_path(spec, q, aug, switch_pose, rp, ppr, order, *anchor, path_target);
  require(attempt.ok, Errc::no_path, "no valid pose sequence along any avoidance path");

  PathPlan plan;
  plan.provenance.kind = "replan";
  plan.provenance.replan_switch_index = switch_index;
  plan.unfold_prefix = active.unfold_prefix;
  plan.waypoints.assign(active.waypoints.begin(), active.waypoints.begin() + switch_index + 1);
  plan.poses.assign(active.poses.begin(), active.poses.begin() + switch_index + 1);
  plan.provenance.relax_per_waypoint.assign(
      active.provenance.relax_per_waypoint.begin(),
      active.provenance.relax_per_waypoint.begin() + switch_index + 1);
  for (std::size_t k = 1; k < attempt.plan.poses.size(); ++k) {
    plan.poses.push_back(attempt.plan.poses[k]);
    plan.waypoints.push_back(attempt.plan.waypoints[k]);
    plan.provenance.relax_per_waypoint.push_back(attempt.plan.provenance.relax_per_waypoint[k]);
  }
  plan.provenance.notes = attempt.plan.provenance.notes;
  plan.provenance.notes.push_back("replanned around dynamic obstacle " + new_obstacle.id);
  return plan;
}

}  // namespace reachplan
