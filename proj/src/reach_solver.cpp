#include "reachplan/reach_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>
#include <tuple>

namespace reachplan {

SolveStats& SolveStats::operator+=(const SolveStats& o) {
  seg1_candidates += o.seg1_candidates;
  seg1_limit_pass += o.seg1_limit_pass;
  seg1_reach_pass += o.seg1_reach_pass;
  seg1_survivors += o.seg1_survivors;
  pair_candidates += o.pair_candidates;
  seg2_limit_pass += o.seg2_limit_pass;
  seg2_clear_pass += o.seg2_clear_pass;
  gap_tested += o.gap_tested;
  gap_pass += o.gap_pass;
  joint_pass += o.joint_pass;
  v3_clear_pass += o.v3_clear_pass;
  solutions += o.solutions;
  shortcuts_found += o.shortcuts_found;
  return *this;
}

double ReachParams::nominal_spacing(const ArmSpec& spec) const {
  const int segs = (mode == SolveMode::six_dof) ? 3 : spec.segment_count();
  double sum = 0.0;
  for (int j = 0; j < std::min(segs, 3); ++j) sum += spec.length(j);
  return sum / (3.0 * n_samples_per_segment);
}

double ReachParams::resolved_epsilon(const ArmSpec& spec) const {
  if (epsilon_gap >= 0.0) return epsilon_gap;
  return 0.5 * spec.length(2) / n_samples_per_segment;
}

double ReachParams::resolved_near_radius(const ArmSpec& spec) const {
  if (near_target_radius >= 0.0) return near_target_radius;
  return 0.5 * nominal_spacing(spec);
}

void ReachParams::validate() const {
  require(n_samples_per_segment >= 1, Errc::invalid_parameter, "n_samples must be >= 1");
  require(approach_half_angle >= 0.0 && approach_half_angle <= kPi, Errc::invalid_parameter,
          "approach_half_angle must be in [0, pi]");
  require(std::abs(approach_axis.norm() - 1.0) <= 1e-9, Errc::invalid_parameter,
          "approach_axis must be unit");
  require(workers >= 1, Errc::invalid_parameter, "workers must be >= 1");
}

BackwardEndpoints backward_endpoints(const Vec3& target, double L4, const Quiver& q,
                                     const Vec3& approach_axis, double half_angle,
                                     SolveMode mode) {
  require(half_angle >= 0.0, Errc::invalid_parameter, "half_angle must be >= 0");
  BackwardEndpoints b;
  if (mode == SolveMode::six_dof) {
    b.points.push_back(target);
    b.directions.push_back(Vec3::Zero());
    b.cone_indices.push_back(-1);
    return b;
  }
  if (half_angle == 0.0) {
    require(std::abs(approach_axis.norm() - 1.0) <= 1e-9, Errc::invalid_parameter,
            "approach_axis must be unit");
    b.points.push_back(target - L4 * approach_axis);
    b.directions.push_back(approach_axis);
    b.cone_indices.push_back(-1);
    return b;
  }
  const std::vector<int> cone = cone_subset(q, approach_axis, half_angle);
  require(!cone.empty(), Errc::empty_cone,
          "no quiver vector inside the approach cone; widen the cone or refine the quiver");
  for (int idx : cone) {
    const Vec3& dir = q.vectors[idx];
    b.points.push_back(target - L4 * dir);
    b.directions.push_back(dir);
    b.cone_indices.push_back(idx);
  }
  return b;
}

std::vector<GapCandidate> span_gap(const Vec3& p2, const std::vector<Vec3>& backward_pts,
                                   double L3, double epsilon) {
  require(epsilon >= 0.0, Errc::invalid_parameter, "epsilon must be >= 0");
  std::vector<GapCandidate> out;
  const double coarse2 = (L3 + epsilon) * (L3 + epsilon) * (1.0 + 1e-12);
  for (std::size_t bi = 0; bi < backward_pts.size(); ++bi) {
    const Vec3 v3 = backward_pts[bi] - p2;
    if (v3.squaredNorm() > coarse2) continue;  // coarse reach test first
    if (std::abs(v3.norm() - L3) <= epsilon) {
      out.push_back({v3, static_cast<int>(bi)});
    }
  }
  return out;
}

namespace {

struct Walk {
  std::vector<Vec3> samples;  // filled through the first blocked sample
  std::vector<uint8_t> clear;
  bool fully_clear = true;
  int first_blocked = 0;  // 1-based; 0 = none
};

void walk_segment_into(const VoxelGrid& grid, const Vec3& from, const Vec3& to, int n, Walk& w) {
  w.samples.clear();
  w.clear.clear();
  w.fully_clear = true;
  w.first_blocked = 0;
  const Vec3 diff = to - from;
  for (int k = 1; k <= n; ++k) {
    const Vec3 s = from + (static_cast<double>(k) / n) * diff;
    const bool ok = point_clear(grid, s);
    w.samples.push_back(s);
    w.clear.push_back(ok ? 1 : 0);
    if (!ok) {
      w.fully_clear = false;
      w.first_blocked = k;
      break;
    }
  }
}

Walk walk_segment(const VoxelGrid& grid, const Vec3& from, const Vec3& to, int n) {
  Walk w;
  w.samples.reserve(n);
  walk_segment_into(grid, from, to, n, w);
  return w;
}

double point_to_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 1e-30) return (p - a).norm();
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

int scaled_sample_count(double len, double spacing) {
  return std::max(1, static_cast<int>(std::ceil(len / std::max(spacing, 1e-12))));
}

bool offset_link_clear(const VoxelGrid& grid, const Vec3& from, const Vec3& to, double spacing) {
  const double len = (to - from).norm();
  if (len == 0.0) return true;
  return walk_segment(grid, from, to, scaled_sample_count(len, spacing)).fully_clear;
}

bool limit_active(const JointLimit& lim) {
  return lim.elev_min > 1e-12 || lim.elev_max < kPi - 1e-12 || !lim.full_azimuth();
}

double polyline_length(const Vec3& start, const std::vector<Vec3>& pts) {
  double len = 0.0;
  Vec3 prev = start;
  for (const Vec3& p : pts) {
    len += (p - prev).norm();
    prev = p;
  }
  return len;
}

}  // namespace

std::vector<Vec3> ShortcutPath::tip_waypoints(const Vec3& target) const {
  std::vector<Vec3> wps = prefix_samples;
  wps.insert(wps.end(), sublength_samples.begin(), sublength_samples.end());
  if (bridge) wps.push_back(target);
  return wps;
}

std::optional<ShortReachHit> short_reach_scan(const HypothesisScan& hyp, const Vec3& target,
                                              const VoxelGrid& grid, const ArmSpec& spec,
                                              const ReachParams& params) {
  const double radius = params.resolved_near_radius(spec);
  const double spacing = params.nominal_spacing(spec);
  int hit = 0;
  for (std::size_t k = 0; k < hyp.samples.size(); ++k) {
    // Loop invariant: samples proximal to k are collision-free.
    if ((hyp.samples[k] - target).norm() <= radius + 1e-12) {
      hit = static_cast<int>(k) + 1;
      break;
    }
    if (!hyp.sample_clear[k]) break;
  }
  if (hit == 0) return std::nullopt;

  ShortcutPath sc;
  sc.segment_index = hyp.segment_index;
  sc.hit_sample_index = hit;
  sc.prefix_samples = hyp.prefix_samples;
  sc.sublength_samples.assign(hyp.samples.begin(), hyp.samples.begin() + hit);
  sc.basis_pose = hyp.basis_pose;
  sc.seg1_index = hyp.seg1_index;
  sc.seg2_index = hyp.seg2_index;

  const Vec3 hit_point = hyp.samples[hit - 1];
  const double dist = (hit_point - target).norm();
  if (dist > 1e-9) {
    // Complete the path: short bridge from the hit point, else a direct
    // vector from the hypothesis origin. Both are collision-checked.
    const bool bridge_ok =
        segment_clear(grid, hit_point, target, scaled_sample_count(dist, spacing)).clear;
    if (bridge_ok) {
      sc.bridge = target - hit_point;
    } else {
      const double direct_len = (target - hyp.origin).norm();
      auto direct =
          segment_clear(grid, hyp.origin, target, scaled_sample_count(direct_len, spacing));
      if (!direct.clear) return std::nullopt;
      sc.via_origin_direct = true;
      sc.sublength_samples = std::move(direct.samples);
      sc.hit_sample_index = hit;
    }
  }
  sc.path_length = polyline_length(spec.root, sc.tip_waypoints(target));
  return ShortReachHit{hit, std::move(sc)};
}

std::vector<Seg1Hypothesis> prune_segment1(const ArmSpec& spec, const Quiver& q,
                                           const VoxelGrid& grid,
                                           const std::vector<Vec3>& target_points,
                                           const ReachParams& params,
                                           std::vector<ShortcutPath>* shortcut_sink,
                                           SolveStats* stats, const Vec3* scan_target) {
  const int n = params.n_samples_per_segment;
  const double eps = params.resolved_epsilon(spec);
  const double L1 = spec.length(0);
  double budget = spec.length(1) + spec.length(2) + eps;
  if (params.mode == SolveMode::eight_dof) budget += spec.length(3);
  budget += 1e-9;  // keep the precheck sound against rounding
  const double budget2 = budget * budget;

  const Mat3 base = spec.base_frame();
  const JointLimit lim1 = spec.limit(0);
  const bool check_lim1 = limit_active(lim1);
  const double d1 = spec.offset(0);
  const double spacing = params.nominal_spacing(spec);
  const double near_radius = params.resolved_near_radius(spec);

  std::vector<Seg1Hypothesis> survivors;
  for (int i = 0; i < q.size(); ++i) {
    if (stats) ++stats->seg1_candidates;
    const Vec3& dir = q.vectors[i];
    const FrameStep st = advance_frame(base, dir);
    if (check_lim1 && !joint_angle_within(st.theta, st.phi, st.degenerate, lim1)) continue;
    if (stats) ++stats->seg1_limit_pass;

    Seg1Hypothesis h;
    h.quiver_index = i;
    h.dir = dir;
    h.frame = st.frame;
    Vec3 link_start = spec.root;
    if (d1 > 0.0) {
      h.elbow = spec.root + d1 * st.after_azimuth.col(0);
      link_start = *h.elbow;
    }
    h.p1 = link_start + L1 * dir;

    bool reach_ok = params.disable_geom_pruning;
    if (!reach_ok) {
      for (const Vec3& t : target_points) {
        if ((h.p1 - t).squaredNorm() <= budget2) {
          reach_ok = true;
          break;
        }
      }
    }
    const bool scanning = shortcut_sink && scan_target;
    if (!reach_ok && !scanning) continue;
    if (reach_ok && stats) ++stats->seg1_reach_pass;

    if (h.elbow && !offset_link_clear(grid, spec.root, *h.elbow, spacing)) continue;
    Walk walk = walk_segment(grid, link_start, h.p1, n);

    if (scanning &&
        point_to_segment(*scan_target, link_start, h.p1) <= near_radius + 1e-9) {
      HypothesisScan scan;
      scan.segment_index = 1;
      scan.origin = spec.root;
      scan.samples = walk.samples;
      scan.sample_clear = walk.clear;
      scan.basis_pose = chain_from_segments(spec, {L1 * dir}, {i});
      scan.seg1_index = i;
      if (auto hitopt = short_reach_scan(scan, *scan_target, grid, spec, params)) {
        shortcut_sink->push_back(std::move(hitopt->shortcut));
        if (stats) ++stats->shortcuts_found;
      }
    }
    if (!reach_ok || !walk.fully_clear) continue;
    if (stats) ++stats->seg1_survivors;
    h.samples = std::move(walk.samples);
    survivors.push_back(std::move(h));
  }
  return survivors;
}

namespace {

struct KeyedSolution {
  int i = 0, j = 0, l = 0;
  PoseChain pose;
};

struct WorkerOut {
  std::vector<KeyedSolution> sols;
  std::vector<ShortcutPath> shortcuts;
  SolveStats stats;
};

/// Steps 2A/2B for one range of segment-2 quiver indices.
void seg2_worker(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid, const Vec3& target,
                 const ReachParams& params, const BackwardEndpoints& backward,
                 const std::vector<Seg1Hypothesis>& seg1, int j_begin, int j_end, WorkerOut& out) {
  const int n = params.n_samples_per_segment;
  const double eps = params.resolved_epsilon(spec);
  const double L2 = spec.length(1);
  const double L3 = spec.length(2);
  const double L4 = (params.mode == SolveMode::eight_dof) ? spec.length(3) : 0.0;
  const double coarse2 = (L3 + eps) * (L3 + eps) * (1.0 + 1e-12);
  const double d2 = spec.offset(1);
  const double spacing = params.nominal_spacing(spec);

  const double near_radius = params.resolved_near_radius(spec);
  Walk walk2, walk3, walk4;
  const JointLimit lim2 = spec.limit(1);
  const JointLimit lim3 = spec.limit(2);
  const JointLimit lim4 = spec.limit(3);
  const bool check_lim2 = limit_active(lim2) || d2 > 0.0;
  const bool check_lim3 = limit_active(lim3);
  const bool check_lim4 = params.mode == SolveMode::eight_dof && limit_active(lim4);

  for (int j = j_begin; j < j_end; ++j) {
    const Vec3& dir2 = q.vectors[j];
    for (const Seg1Hypothesis& h1 : seg1) {
      ++out.stats.pair_candidates;

      FrameStep st2;
      bool have_st2 = false;
      if (check_lim2) {
        st2 = advance_frame(h1.frame, dir2);
        have_st2 = true;
        if (!joint_angle_within(st2.theta, st2.phi, st2.degenerate, lim2)) continue;
      }
      ++out.stats.seg2_limit_pass;

      Vec3 link_start = h1.p1;
      std::optional<Vec3> elbow2;
      if (d2 > 0.0) {
        elbow2 = h1.p1 + d2 * st2.after_azimuth.col(0);
        link_start = *elbow2;
      }
      const Vec3 p2 = link_start + L2 * dir2;

      if (params.cone_precheck && params.mode == SolveMode::eight_dof &&
          !params.disable_geom_pruning) {
        // Every backward endpoint lies within L4 of the target, so the
        // gap length over the whole cone is bounded by this window.
        const double dist_t = (target - p2).norm();
        if (dist_t - L4 > L3 + eps + 1e-9 || dist_t + L4 < L3 - eps - 1e-9) continue;
      }

      if (elbow2 && !offset_link_clear(grid, h1.p1, *elbow2, spacing)) continue;
      walk_segment_into(grid, link_start, p2, n, walk2);

      if (point_to_segment(target, link_start, p2) <= near_radius + 1e-9) {
        HypothesisScan scan;
        scan.segment_index = 2;
        scan.origin = h1.p1;
        scan.samples = walk2.samples;
        scan.sample_clear = walk2.clear;
        scan.prefix_samples = h1.samples;
        scan.basis_pose = chain_from_segments(spec, {spec.length(0) * h1.dir, L2 * dir2},
                                              {h1.quiver_index, j});
        scan.seg1_index = h1.quiver_index;
        scan.seg2_index = j;
        if (auto hitopt = short_reach_scan(scan, target, grid, spec, params)) {
          out.shortcuts.push_back(std::move(hitopt->shortcut));
          ++out.stats.shortcuts_found;
        }
      }
      if (!walk2.fully_clear) continue;
      ++out.stats.seg2_clear_pass;

      Mat3 frame2;
      bool have_frame2 = false;
      for (std::size_t bi = 0; bi < backward.points.size(); ++bi) {
        ++out.stats.gap_tested;
        const Vec3 v3 = backward.points[bi] - p2;
        if (v3.squaredNorm() > coarse2) continue;
        const double v3_len = v3.norm();
        if (std::abs(v3_len - L3) > eps) continue;
        ++out.stats.gap_pass;
        if (v3_len < 1e-12) continue;
        const Vec3 v3_hat = v3 / v3_len;

        if (check_lim3 || check_lim4) {
          if (!have_frame2) {
            if (!have_st2) {
              st2 = advance_frame(h1.frame, dir2);
              have_st2 = true;
            }
            frame2 = st2.frame;
            have_frame2 = true;
          }
          if (check_lim3) {
            const FrameStep st3 = advance_frame(frame2, v3_hat);
            if (!joint_angle_within(st3.theta, st3.phi, st3.degenerate, lim3)) continue;
            if (check_lim4) {
              const FrameStep st4 = advance_frame(st3.frame, backward.directions[bi]);
              if (!joint_angle_within(st4.theta, st4.phi, st4.degenerate, lim4)) continue;
            }
          } else if (check_lim4) {
            const FrameStep st3 = advance_frame(frame2, v3_hat);
            const FrameStep st4 = advance_frame(st3.frame, backward.directions[bi]);
            if (!joint_angle_within(st4.theta, st4.phi, st4.degenerate, lim4)) continue;
          }
        }
        ++out.stats.joint_pass;

        walk_segment_into(grid, p2, backward.points[bi], n, walk3);
        if (!walk3.fully_clear) continue;
        ++out.stats.v3_clear_pass;

        if (params.mode == SolveMode::eight_dof) {
          walk_segment_into(grid, backward.points[bi], target, n, walk4);
          if (!walk4.fully_clear) continue;
        }

        std::vector<Vec3> segments = {spec.length(0) * h1.dir, L2 * dir2, v3};
        std::vector<int> indices = {h1.quiver_index, j, -1};
        if (params.mode == SolveMode::eight_dof) {
          segments.push_back(L4 * backward.directions[bi]);
          indices.push_back(backward.cone_indices[bi]);
        }
        PoseChain chain = chain_from_segments(spec, std::move(segments), std::move(indices));
        if (!self_collision_free(spec, chain)) continue;

        chain.waypoints = h1.samples;
        chain.waypoints.insert(chain.waypoints.end(), walk2.samples.begin(), walk2.samples.end());
        chain.waypoints.insert(chain.waypoints.end(), walk3.samples.begin(), walk3.samples.end());
        if (params.mode == SolveMode::eight_dof) {
          chain.waypoints.insert(chain.waypoints.end(), walk4.samples.begin(),
                                 walk4.samples.end());
        }
        ++out.stats.solutions;
        out.sols.push_back(
            {h1.quiver_index, j, static_cast<int>(bi), std::move(chain)});
      }
    }
  }
}

/// Independent re-check of a finished solution against the definition.
void revalidate_solution(const ArmSpec& spec, const VoxelGrid& grid, const Vec3& target,
                         const ReachParams& params, const PoseChain& pose) {
  const double eps = params.resolved_epsilon(spec);
  const double L3 = spec.length(2);
  require(std::abs(pose.segments[2].norm() - L3) <= eps + 1e-12, Errc::no_solution,
          "internal: solution violates the gap band");
  require(joint_limits_ok(spec, pose), Errc::no_solution,
          "internal: solution violates joint limits");
  require(self_collision_free(spec, pose), Errc::no_solution,
          "internal: solution self-collides");
  for (const Vec3& s : pose.waypoints) {
    require(point_clear(grid, s), Errc::no_solution,
            "internal: solution sample inside an obstacle");
  }
  const double closure = (pose.joints.back() - target).norm();
  require(closure <= 1e-9 * std::max(1.0, spec.total_length()), Errc::no_solution,
          "internal: solution does not close on the target");
}

}  // namespace

SolutionSet solve_reach(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                        const Vec3& target, const ReachParams& params) {
  spec.validate();
  params.validate();
  if (params.mode == SolveMode::eight_dof) {
    require(spec.segment_count() == 4, Errc::invalid_parameter, "8DOF solve needs 4 segments");
  } else {
    require(spec.segment_count() >= 3, Errc::invalid_parameter, "6DOF solve needs 3 segments");
  }
  require(spec.offset(2) == 0.0 && spec.offset(3) == 0.0, Errc::invalid_parameter,
          "reach solving supports joint offsets at joints 1 and 2 only");

  const auto t0 = std::chrono::steady_clock::now();
  SolutionSet set;

  const BackwardEndpoints backward =
      backward_endpoints(target, (params.mode == SolveMode::eight_dof) ? spec.length(3) : 0.0, q,
                         params.approach_axis, params.approach_half_angle, params.mode);

  std::vector<ShortcutPath> seg1_shortcuts;
  const std::vector<Seg1Hypothesis> seg1 = prune_segment1(
      spec, q, grid, {target}, params, &seg1_shortcuts, &set.stats, &target);

  const int workers = std::max(1, params.workers);
  const int n_j = q.size();
  const int chunk = (n_j + workers - 1) / workers;
  std::vector<WorkerOut> outs(static_cast<std::size_t>(workers));
  if (workers == 1) {
    seg2_worker(spec, q, grid, target, params, backward, seg1, 0, n_j, outs[0]);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      const int b = std::min(n_j, w * chunk);
      const int e = std::min(n_j, b + chunk);
      pool.emplace_back(seg2_worker, std::cref(spec), std::cref(q), std::cref(grid),
                        std::cref(target), std::cref(params), std::cref(backward),
                        std::cref(seg1), b, e, std::ref(outs[static_cast<std::size_t>(w)]));
    }
    for (auto& t : pool) t.join();
  }

  std::vector<KeyedSolution> keyed;
  set.shortcuts = std::move(seg1_shortcuts);
  for (auto& o : outs) {
    set.stats += o.stats;
    std::move(o.sols.begin(), o.sols.end(), std::back_inserter(keyed));
    std::move(o.shortcuts.begin(), o.shortcuts.end(), std::back_inserter(set.shortcuts));
  }
  std::sort(keyed.begin(), keyed.end(), [](const KeyedSolution& a, const KeyedSolution& b) {
    return std::tie(a.i, a.j, a.l) < std::tie(b.i, b.j, b.l);
  });
  std::sort(set.shortcuts.begin(), set.shortcuts.end(),
            [](const ShortcutPath& a, const ShortcutPath& b) {
              return std::tie(a.segment_index, a.seg1_index, a.seg2_index) <
                     std::tie(b.segment_index, b.seg1_index, b.seg2_index);
            });
  set.solutions.reserve(keyed.size());
  for (auto& k : keyed) {
    revalidate_solution(spec, grid, target, params, k.pose);
    set.solutions.push_back(std::move(k.pose));
  }

  set.stats.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
  return set;
}

ChosenPath select_solution(const SolutionSet& set) {
  require(!set.empty(), Errc::no_solution, "no reach solution under the given constraints");
  ChosenPath chosen;
  if (!set.shortcuts.empty()) {
    // Any shortcut beats the reach-pose paths; shortest wins.
    std::size_t best = 0;
    for (std::size_t k = 1; k < set.shortcuts.size(); ++k) {
      if (set.shortcuts[k].path_length < set.shortcuts[best].path_length) best = k;
    }
    chosen.kind = ChosenPath::Kind::shortcut;
    chosen.shortcut = set.shortcuts[best];
    chosen.path_length = set.shortcuts[best].path_length;
    return chosen;
  }
  std::size_t best = 0;
  double best_len = 0.0;
  for (std::size_t k = 0; k < set.solutions.size(); ++k) {
    const PoseChain& p = set.solutions[k];
    const double len =
        p.segments[0].norm() + p.segments[1].norm() + p.segments[2].norm();
    if (k == 0 || len < best_len) {
      best = k;
      best_len = len;
    }
  }
  chosen.kind = ChosenPath::Kind::reach_pose;
  chosen.pose = set.solutions[best];
  chosen.path_length = best_len;
  return chosen;
}

}  // namespace reachplan
