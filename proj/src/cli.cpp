#include "reachplan/cli.hpp"

#include "reachplan/io.hpp"
#include "reachplan/motion.hpp"
#include "reachplan/oracle.hpp"
#include "reachplan/pipeline.hpp"
#include "reachplan/validate.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

namespace reachplan {

namespace {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::no_solution:
    case Errc::unreachable_target:
    case Errc::empty_cone:
      return kExitNoSolution;
    case Errc::no_path:
      return kExitNoPath;
    case Errc::infeasible_timing:
      return kExitInfeasibleTiming;
    case Errc::execution_collision:
      return kExitExecutionCollision;
    case Errc::timeout:
      return kExitTimeout;
    case Errc::invalid_parameter:
    case Errc::parse_error:
    case Errc::capacity_exceeded:
    case Errc::degenerate_input:
      return kExitUsage;
  }
  return kExitInternal;
}

struct CommonOpts {
  std::string scene_path;
  std::string arm_path;
  std::string out_path;
  std::string mode = "8dof";
  double quiver_deg = 2.0;
  int min_per_ring = 4;
  double epsilon = -1.0;
  int samples = 8;
  double near_radius = -1.0;
  int workers = 1;
  bool cone_precheck = false;
  bool no_prune = false;
  bool refine_triangle = false;
};

void add_quiver_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--quiver-deg", o.quiver_deg, "elevation and equator azimuth step, degrees")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--min-per-ring", o.min_per_ring, "minimum directions per elevation ring")
      ->check(CLI::PositiveNumber);
}

void add_solver_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--mode", o.mode, "6dof or 8dof")->check(CLI::IsMember({"6dof", "8dof"}));
  cmd->add_option("--epsilon", o.epsilon, "gap length tolerance, meters (default derived)");
  cmd->add_option("--waypoints-per-seg,--samples", o.samples,
                  "collision samples / waypoints per segment")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--near-radius", o.near_radius,
                  "short-reach near-encounter radius, meters (default derived)");
  cmd->add_option("--workers", o.workers, "worker threads (1 = reference mode)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--cone-precheck", o.cone_precheck, "enable the fast gap window pre-filter");
  cmd->add_flag("--no-prune", o.no_prune, "disable geometric reach pruning (reference mode)");
  cmd->add_flag("--refine-triangle", o.refine_triangle,
                "use the exact-triangle variant for 8DOF refinement");
}

struct LoadedScene {
  Scene scene;
  ArmSpec arm;
  Quiver quiver;
  VoxelGrid grid;
  ReachParams rp;
  QuiverConfig qcfg;
};

LoadedScene load_everything(const CommonOpts& o) {
  LoadedScene L;
  L.scene = parse_scene(read_file(o.scene_path));
  L.arm = arm_in_scene(parse_arm(read_file(o.arm_path)), L.scene);
  L.qcfg = QuiverConfig{o.quiver_deg, o.quiver_deg, o.min_per_ring};
  L.quiver = quiver_from_config(L.qcfg);
  ReachParams rp;
  rp.mode = (o.mode == "8dof") ? SolveMode::eight_dof : SolveMode::six_dof;
  rp.epsilon_gap = o.epsilon;
  rp.n_samples_per_segment = o.samples;
  rp.near_target_radius = o.near_radius;
  rp.workers = o.workers;
  rp.cone_precheck = o.cone_precheck;
  rp.disable_geom_pruning = o.no_prune;
  rp.refine_triangle_8dof = o.refine_triangle;
  if (rp.mode == SolveMode::eight_dof && L.arm.segment_count() != 4) {
    fail(Errc::invalid_parameter, "8dof mode needs a four-segment arm; use --mode 6dof");
  }
  L.rp = reach_params_for_scene(rp, L.scene, L.arm);
  L.grid = build_scene_grid(L.scene, L.arm, L.rp, &std::cerr);
  return L;
}

void print_stats(const SolveStats& s) {
  std::printf("segment-1: %ld candidates, %ld after limits, %ld after reach, %ld survivors\n",
              s.seg1_candidates, s.seg1_limit_pass, s.seg1_reach_pass, s.seg1_survivors);
  std::printf("segment-2: %ld pairs, %ld limit pass, %ld clear\n", s.pair_candidates,
              s.seg2_limit_pass, s.seg2_clear_pass);
  std::printf("gap: %ld tested, %ld in band; %ld solutions, %ld shortcuts\n", s.gap_tested,
              s.gap_pass, s.solutions, s.shortcuts_found);
  std::printf("wall: %.1f ms\n", s.wall_ms);
}

PlanFile make_plan_file(const LoadedScene& L, const PathParams& pp, const ChosenPath& chosen,
                        PathPlan plan, const SolveStats& stats) {
  PlanFile pf;
  pf.quiver = L.qcfg;
  pf.reach = L.rp;
  pf.path = pp.resolved(L.arm, L.rp);
  pf.arm = L.arm;
  pf.chosen = chosen;
  pf.plan = std::move(plan);
  pf.stats = stats;
  return pf;
}

int cmd_plan_reach(const CommonOpts& o) {
  LoadedScene L = load_everything(o);
  SolutionSet set = solve_reach(L.arm, L.quiver, L.grid, L.scene.target, L.rp);
  print_stats(set.stats);
  ChosenPath chosen = select_solution(set);
  if (chosen.kind == ChosenPath::Kind::reach_pose) {
    PoseChain refined = chosen.pose.segment_count() == 4
                            ? (L.rp.refine_triangle_8dof
                                   ? exact_refine_8dof_triangle(L.arm, chosen.pose, L.scene.target)
                                   : exact_refine_8dof(L.arm, chosen.pose, L.scene.target))
                            : exact_refine_6dof(L.arm, chosen.pose, L.scene.target);
    std::printf("chosen: reach pose (seg1=%d seg2=%d), tip path %.4f m, closure %.3g m\n",
                chosen.pose.quiver_indices[0], chosen.pose.quiver_indices[1], chosen.path_length,
                (refined.joints.back() - L.scene.target).norm());
    chosen.pose = refined;
  } else {
    std::printf("chosen: shortcut on segment %d, path %.4f m\n",
                chosen.shortcut.segment_index, chosen.shortcut.path_length);
  }
  if (!o.out_path.empty()) {
    PathPlan stub;
    stub.provenance.kind =
        chosen.kind == ChosenPath::Kind::reach_pose ? "reach-pose" : "shortcut";
    write_file(o.out_path, emit_plan(make_plan_file(L, PathParams{}, chosen, stub, set.stats)));
  }
  return kExitOk;
}

int cmd_plan_path(const CommonOpts& o) {
  LoadedScene L = load_everything(o);
  SolutionSet set = solve_reach(L.arm, L.quiver, L.grid, L.scene.target, L.rp);
  ChosenPath chosen = select_solution(set);
  const PathParams pp;
  PathPlan plan = plan_from_reach(L.arm, L.quiver, L.grid, chosen, set, L.scene.target, L.rp, pp);
  print_stats(set.stats);
  int relax_events = 0;
  for (double r : plan.provenance.relax_per_waypoint)
    if (r > 1.0) ++relax_events;
  std::printf("plan: %zu waypoints, %zu unfold poses, %d relaxation events, kind %s\n",
              plan.waypoints.size(), plan.unfold_prefix.size(), relax_events,
              plan.provenance.kind.c_str());
  for (const auto& note : plan.provenance.notes) std::printf("note: %s\n", note.c_str());
  if (!o.out_path.empty()) {
    write_file(o.out_path, emit_plan(make_plan_file(L, pp, chosen, std::move(plan), set.stats)));
  }
  return kExitOk;
}

int cmd_plan_arbitrary(const CommonOpts& o, const std::string& start_pose_path) {
  LoadedScene L = load_everything(o);
  const PoseChain start = parse_pose_file(read_file(start_pose_path), L.arm);
  const PathParams pp;
  PathPlan plan = plan_arbitrary(L.arm, L.quiver, L.grid, start, L.scene.target, L.rp, pp);
  std::printf("plan: %zu waypoints, kind %s\n", plan.waypoints.size(),
              plan.provenance.kind.c_str());
  if (!o.out_path.empty()) {
    ChosenPath none;
    none.kind = ChosenPath::Kind::reach_pose;
    none.pose = plan.poses.back();
    write_file(o.out_path, emit_plan(make_plan_file(L, pp, none, std::move(plan), SolveStats{})));
  }
  return kExitOk;
}

int cmd_replan(const std::string& scene_path, const std::string& plan_path,
               const std::string& obstacle_path, int at_index, double period, double replan_cost,
               int workers, const std::string& out_path) {
  const Scene scene = parse_scene(read_file(scene_path));
  PlanFile pf = parse_plan(read_file(plan_path));
  const SceneObstacle obstacle = parse_obstacle_file(read_file(obstacle_path));
  require(obstacle.dynamic, Errc::invalid_parameter,
          "the inserted obstacle must be marked dynamic");

  const Quiver quiver = quiver_from_config(pf.quiver);
  ReachParams rp = pf.reach;
  rp.workers = workers;
  const VoxelGrid grid = build_scene_grid(scene, pf.arm, rp, &std::cerr);
  const ReplanTiming timing{period, replan_cost};
  PathPlan next =
      replan_dynamic(pf.arm, quiver, grid, pf.plan, at_index, obstacle, timing, rp, pf.path);
  std::printf("replan: switch at waypoint %d, %zu waypoints total\n",
              next.provenance.replan_switch_index, next.waypoints.size());
  if (!out_path.empty()) {
    PlanFile out = pf;
    out.plan = std::move(next);
    write_file(out_path, emit_plan(out));
  }
  return kExitOk;
}

int cmd_simulate(const std::string& plan_path, const std::string& arm_path, double vw, double hz,
                 const std::string& scene_path, const std::string& out_path) {
  PlanFile pf = parse_plan(read_file(plan_path));
  ArmSpec arm = pf.arm;
  if (!arm_path.empty()) {
    arm = parse_arm(read_file(arm_path));
    arm.root = pf.arm.root;  // the plan's placement wins
  }
  MotionParams mp;
  if (vw > 0) mp.v_w = vw;
  if (hz > 0) mp.sample_rate = hz;

  VoxelGrid grid;
  const bool have_grid = !scene_path.empty();
  if (have_grid) {
    const Scene scene = parse_scene(read_file(scene_path));
    grid = build_scene_grid(scene, arm, pf.reach, &std::cerr);
  }
  const ExecutionTrace trace =
      simulate_execution(arm, pf.plan, mp, have_grid ? &grid : nullptr);
  std::printf("simulated %zu ticks (%.2f s), %zu overshoots, %zu clamp events, goal %s\n",
              trace.ticks.size(), trace.ticks.empty() ? 0.0 : trace.ticks.back().time,
              trace.overshoot_events.size(), trace.clamp_events.size(),
              trace.reached_goal ? "reached" : "missed");
  if (!out_path.empty()) write_file(out_path, emit_trace(trace, mp));
  return kExitOk;
}

int cmd_oracle(const CommonOpts& o, bool force) {
  if (o.quiver_deg < kOracleMinStepDeg && !force) {
    fail(Errc::invalid_parameter,
         "oracle refuses quiver steps below 5 degrees (full enumeration); pass --force to override");
  }
  LoadedScene L = load_everything(o);
  const SolutionSet set = oracle_solve(L.arm, L.quiver, L.grid, L.scene.target, L.rp);
  std::printf("oracle solutions: %zu\n", set.solutions.size());
  for (const auto& s : set.solutions) {
    std::printf("%d %d %d\n", s.quiver_indices[0], s.quiver_indices[1],
                s.quiver_indices.size() > 3 ? s.quiver_indices[3] : -1);
  }
  return kExitOk;
}

int cmd_bench(const CommonOpts& o, const std::string& deg_list) {
  std::vector<double> degs;
  std::stringstream ss(deg_list);
  std::string item;
  while (std::getline(ss, item, ',')) degs.push_back(std::stod(item));
  require(!degs.empty(), Errc::invalid_parameter, "empty --quiver-deg-list");

  std::printf("%10s %10s %12s %12s %12s %10s\n", "quiver", "vectors", "seg1-ms", "solve-ms",
              "path-ms", "solutions");
  for (double deg : degs) {
    CommonOpts run = o;
    run.quiver_deg = deg;
    LoadedScene L = load_everything(run);

    const auto t0 = std::chrono::steady_clock::now();
    SolveStats s1_stats;
    const auto seg1 = prune_segment1(L.arm, L.quiver, L.grid, {L.scene.target}, L.rp, nullptr,
                                     &s1_stats, nullptr);
    const auto t1 = std::chrono::steady_clock::now();
    SolutionSet set = solve_reach(L.arm, L.quiver, L.grid, L.scene.target, L.rp);
    const auto t2 = std::chrono::steady_clock::now();
    double path_ms = 0.0;
    if (!set.empty()) {
      const ChosenPath chosen = select_solution(set);
      const auto t3 = std::chrono::steady_clock::now();
      plan_from_reach(L.arm, L.quiver, L.grid, chosen, set, L.scene.target, L.rp, PathParams{});
      path_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t3)
                    .count();
    }
    const double seg1_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    const double solve_ms = std::chrono::duration<double, std::milli>(t2 - t1).count();
    std::printf("%9.1f° %10d %12.1f %12.1f %12.1f %10zu\n", deg, L.quiver.size(), seg1_ms,
                solve_ms, path_ms, set.solutions.size());
    (void)seg1;
  }
  return kExitOk;
}

int cmd_validate(const std::string& plan_path, const std::string& scene_path) {
  PlanFile pf = parse_plan(read_file(plan_path));
  const Scene scene = parse_scene(read_file(scene_path));
  const VoxelGrid grid = build_scene_grid(scene, pf.arm, pf.reach, &std::cerr);

  ValidationReport report;
  if (pf.plan.poses.empty()) {
    const PoseChain& pose =
        pf.chosen.kind == ChosenPath::Kind::reach_pose ? pf.chosen.pose
                                                       : pf.chosen.shortcut.basis_pose;
    check_pose(pf.arm, grid, pose, pf.reach.n_samples_per_segment,
               pf.reach.resolved_epsilon(pf.arm) + 1e-9, "chosen pose", report);
  } else {
    report = validate_plan(pf.arm, grid, pf.plan, pf.reach, pf.path);
  }
  if (report.ok) {
    std::printf("valid: %d poses checked, %d relaxation events\n", report.poses_checked,
                report.relax_events);
    return kExitOk;
  }
  for (const auto& issue : report.issues) std::fprintf(stderr, "violation: %s\n", issue.c_str());
  return kExitInvalidPlan;
}

int cmd_export_frames(const std::string& plan_path, const std::string& trace_path,
                      const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  char name[64];
  if (!plan_path.empty()) {
    const PlanFile pf = parse_plan(read_file(plan_path));
    const auto seq = pf.plan.full_sequence();
    int idx = 0;
    for (const PoseChain* pose : seq) {
      std::snprintf(name, sizeof name, "frame_%05d.tsv", idx++);
      std::string rows;
      char line[128];
      for (const Vec3& p : pose->joints) {
        std::snprintf(line, sizeof line, "%.17g\t%.17g\t%.17g\n", p.x(), p.y(), p.z());
        rows += line;
      }
      write_file((fs::path(out_dir) / name).string(), rows);
    }
    std::printf("wrote %d frames to %s\n", idx, out_dir.c_str());
  } else {
    const ExecutionTrace trace = parse_trace(read_file(trace_path));
    std::string rows;
    char line[160];
    for (const auto& t : trace.ticks) {
      std::snprintf(line, sizeof line, "%.17g\t%.17g\t%.17g\t%.17g\t%d\n", t.time,
                    t.tracked_point.x(), t.tracked_point.y(), t.tracked_point.z(),
                    t.active_waypoint_index);
      rows += line;
    }
    write_file((fs::path(out_dir) / "trace.tsv").string(), rows);
    std::printf("wrote %zu ticks to %s/trace.tsv\n", trace.ticks.size(), out_dir.c_str());
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"gap-based inverse kinematics and motion planning for segmented arms"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string start_pose_path, plan_path, obstacle_path, trace_path, deg_list;
  int at_index = 0;
  double period = 0.083, replan_cost = 0.002, vw = -1.0, hz = -1.0;
  bool force = false;

  auto* reach = app.add_subcommand("plan-reach", "solve the reach pose for a scene");
  reach->add_option("--scene", o.scene_path, "scene file")->required();
  reach->add_option("--arm", o.arm_path, "arm file")->required();
  reach->add_option("--out", o.out_path, "output plan file");
  add_quiver_flags(reach, o);
  add_solver_flags(reach, o);

  auto* path = app.add_subcommand("plan-path", "solve the reach pose and plan the full path");
  path->add_option("--scene", o.scene_path, "scene file")->required();
  path->add_option("--arm", o.arm_path, "arm file")->required();
  path->add_option("--out", o.out_path, "output plan file");
  add_quiver_flags(path, o);
  add_solver_flags(path, o);

  auto* arb = app.add_subcommand("plan-arbitrary", "plan from an arbitrary start pose");
  arb->add_option("--scene", o.scene_path, "scene file")->required();
  arb->add_option("--arm", o.arm_path, "arm file")->required();
  arb->add_option("--start-pose", start_pose_path, "start pose file")->required();
  arb->add_option("--out", o.out_path, "output plan file");
  add_quiver_flags(arb, o);
  add_solver_flags(arb, o);

  auto* rep = app.add_subcommand("replan", "avoid a dynamic obstacle mid-course");
  rep->add_option("--scene", o.scene_path, "scene file")->required();
  rep->add_option("--plan", plan_path, "active plan file")->required();
  rep->add_option("--obstacle", obstacle_path, "dynamic obstacle file")->required();
  rep->add_option("--at-index", at_index, "current waypoint index")->required();
  rep->add_option("--period", period, "seconds per waypoint at the commanded speed");
  rep->add_option("--replan-cost", replan_cost, "measured solve seconds per remaining waypoint");
  rep->add_option("--workers", o.workers, "worker threads");
  rep->add_option("--out", o.out_path, "output plan file");

  auto* sim = app.add_subcommand("simulate", "execute a plan under velocity control");
  sim->add_option("--plan", plan_path, "plan file")->required();
  sim->add_option("--arm", o.arm_path, "arm file (defaults to the plan's embedded arm)");
  sim->add_option("--vw", vw, "desired tracked-point speed, m/s");
  sim->add_option("--hz", hz, "control sample rate, Hz");
  sim->add_option("--scene", o.scene_path, "scene file for per-tick collision checks");
  sim->add_option("--out", o.out_path, "output trace file");

  auto* orc = app.add_subcommand("oracle", "exhaustive-enumeration solution set (coarse quivers)");
  orc->add_option("--scene", o.scene_path, "scene file")->required();
  orc->add_option("--arm", o.arm_path, "arm file")->required();
  orc->add_flag("--force", force, "allow fine quivers despite the cost");
  add_quiver_flags(orc, o);
  add_solver_flags(orc, o);

  auto* ben = app.add_subcommand("bench", "stage timing across quiver resolutions");
  ben->add_option("--scene", o.scene_path, "scene file")->required();
  ben->add_option("--arm", o.arm_path, "arm file")->required();
  ben->add_option("--quiver-deg-list", deg_list, "comma-separated quiver steps, degrees")
      ->required();
  add_solver_flags(ben, o);

  auto* val = app.add_subcommand("validate", "re-validate a delivered plan against a scene");
  val->add_option("--plan", plan_path, "plan file")->required();
  val->add_option("--scene", o.scene_path, "scene file")->required();

  auto* exp = app.add_subcommand("export-frames", "dump joint loci as numeric tables");
  exp->add_option("--plan", plan_path, "plan file");
  exp->add_option("--trace", trace_path, "trace file");
  exp->add_option("--out", o.out_path, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (reach->parsed()) return cmd_plan_reach(o);
    if (path->parsed()) return cmd_plan_path(o);
    if (arb->parsed()) return cmd_plan_arbitrary(o, start_pose_path);
    if (rep->parsed())
      return cmd_replan(o.scene_path, plan_path, obstacle_path, at_index, period, replan_cost,
                        o.workers, o.out_path);
    if (sim->parsed())
      return cmd_simulate(plan_path, o.arm_path, vw, hz, o.scene_path, o.out_path);
    if (orc->parsed()) return cmd_oracle(o, force);
    if (ben->parsed()) return cmd_bench(o, deg_list);
    if (val->parsed()) return cmd_validate(plan_path, o.scene_path);
    if (exp->parsed()) {
      require(plan_path.empty() != trace_path.empty(), Errc::invalid_parameter,
              "pass exactly one of --plan or --trace");
      return cmd_export_frames(plan_path, trace_path, o.out_path);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace reachplan
