#include "reachplan/oracle.hpp"

#include <cmath>

namespace reachplan {

namespace {

bool all_samples_clear(const VoxelGrid& grid, const Vec3& from, const Vec3& to, int n) {
  bool ok = true;
  const Vec3 diff = to - from;
  for (int k = 1; k <= n; ++k) {
    if (!point_clear(grid, from + (static_cast<double>(k) / n) * diff)) ok = false;
  }
  return ok;
}

bool links_clear(const VoxelGrid& grid, const PoseChain& chain, int n,
                 double spacing) {
  // Segments get n samples each; offset links get spacing-scaled counts.
  std::size_t link = 0;
  const auto links = chain_links(chain);
  for (std::size_t j = 0; j < chain.segments.size(); ++j) {
    const bool has_elbow =
        !chain.elbows.empty() && (chain.elbows[j] - chain.joints[j]).squaredNorm() > 0.0;
    if (has_elbow) {
      const double len = (links[link].second - links[link].first).norm();
      const int cnt = std::max(1, static_cast<int>(std::ceil(len / std::max(spacing, 1e-12))));
      if (!all_samples_clear(grid, links[link].first, links[link].second, cnt)) return false;
      ++link;
    }
    if (!all_samples_clear(grid, links[link].first, links[link].second, n)) return false;
    ++link;
  }
  return true;
}

}  // namespace

SolutionSet oracle_solve(const ArmSpec& spec, const Quiver& q, const VoxelGrid& grid,
                         const Vec3& target, const ReachParams& params) {
  spec.validate();
  params.validate();
  const bool eight = params.mode == SolveMode::eight_dof;
  require(!eight || spec.segment_count() == 4, Errc::invalid_parameter,
          "8DOF solve needs 4 segments");
  require(spec.offset(2) == 0.0 && spec.offset(3) == 0.0, Errc::invalid_parameter,
          "reach solving supports joint offsets at joints 1 and 2 only");

  const int n = params.n_samples_per_segment;
  const double eps = params.resolved_epsilon(spec);
  const double L3 = spec.length(2);
  const double spacing = params.nominal_spacing(spec);

  const BackwardEndpoints backward =
      backward_endpoints(target, eight ? spec.length(3) : 0.0, q, params.approach_axis,
                         params.approach_half_angle, params.mode);

  SolutionSet set;
  for (int i = 0; i < q.size(); ++i) {
    for (int j = 0; j < q.size(); ++j) {
      for (std::size_t bi = 0; bi < backward.points.size(); ++bi) {
        std::vector<Vec3> segments = {spec.length(0) * q.vectors[i],
                                      spec.length(1) * q.vectors[j], Vec3::Zero()};
        std::vector<int> indices = {i, j, -1};
        if (eight) {
          segments.push_back(spec.length(3) * backward.directions[bi]);
          indices.push_back(backward.cone_indices[bi]);
        }
        // The gap vector is determined by the endpoints it must connect.
        {
          PoseChain partial = chain_from_segments(
              spec, {segments[0], segments[1]}, {indices[0], indices[1]});
          segments[2] = backward.points[bi] - partial.joints[2];
        }
        if (std::abs(segments[2].norm() - L3) > eps) continue;
        if (segments[2].norm() < 1e-12) continue;

        PoseChain chain = chain_from_segments(spec, segments, indices);
        if (!joint_limits_ok(spec, chain)) continue;
        if (!links_clear(grid, chain, n, spacing)) continue;
        if (!self_collision_free(spec, chain)) continue;

        chain.waypoints.clear();
        for (std::size_t s = 0; s < chain.segments.size(); ++s) {
          const Vec3 from = chain.elbows.empty() ? chain.joints[s] : chain.elbows[s];
          const Vec3 diff = chain.joints[s + 1] - from;
          for (int k = 1; k <= n; ++k) {
            chain.waypoints.push_back(from + (static_cast<double>(k) / n) * diff);
          }
        }
        ++set.stats.solutions;
        set.solutions.push_back(std::move(chain));
      }
    }
  }
  return set;
}

}  // namespace reachplan
