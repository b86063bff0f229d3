#include "reachplan/io.hpp"

#include <json.hpp>

#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace reachplan {

using json = nlohmann::ordered_json;

namespace {

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(Errc::parse_error, where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : j.items()) {
    if (!ok.count(key)) fail(Errc::parse_error, where + ": unknown field '" + key + "'");
  }
}

const json& field(const json& j, const std::string& where, const char* name) {
  if (!j.contains(name)) fail(Errc::parse_error, where + ": missing field '" + name + "'");
  return j.at(name);
}

double num(const json& j, const std::string& where) {
  if (!j.is_number()) fail(Errc::parse_error, where + ": expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(Errc::parse_error, where + ": expected an integer");
  return j.get<int>();
}

long long_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(Errc::parse_error, where + ": expected an integer");
  return static_cast<long>(j.get<long long>());
}

bool boolean(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(Errc::parse_error, where + ": expected a boolean");
  return j.get<bool>();
}

std::string str(const json& j, const std::string& where) {
  if (!j.is_string()) fail(Errc::parse_error, where + ": expected a string");
  return j.get<std::string>();
}

Vec3 vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) fail(Errc::parse_error, where + ": expected [x, y, z]");
  return {num(j[0], where), num(j[1], where), num(j[2], where)};
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::vector<Vec3> vec3_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(Errc::parse_error, where + ": expected a list of points");
  std::vector<Vec3> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    out.push_back(vec3(j[k], where + "[" + std::to_string(k) + "]"));
  }
  return out;
}

json to_json(const std::vector<Vec3>& v) {
  json arr = json::array();
  for (const auto& p : v) arr.push_back(to_json(p));
  return arr;
}

std::vector<double> num_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(Errc::parse_error, where + ": expected a list of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(num(j[k], where));
  return out;
}

SceneObstacle parse_obstacle(const json& j, const std::string& where) {
  check_keys(j, where, {"id", "dynamic", "box", "points"});
  SceneObstacle obs;
  obs.id = j.contains("id") ? str(j.at("id"), where + ".id") : "";
  obs.dynamic = j.contains("dynamic") && boolean(j.at("dynamic"), where + ".dynamic");
  const bool has_box = j.contains("box");
  const bool has_points = j.contains("points");
  if (has_box == has_points) {
    fail(Errc::parse_error, where + ": exactly one of 'box' or 'points' is required");
  }
  if (has_box) {
    const json& b = j.at("box");
    check_keys(b, where + ".box", {"min", "max"});
    obs.shape = SceneObstacle::Shape::box;
    obs.box_min = vec3(field(b, where + ".box", "min"), where + ".box.min");
    obs.box_max = vec3(field(b, where + ".box", "max"), where + ".box.max");
    for (int a = 0; a < 3; ++a) {
      if (obs.box_min[a] > obs.box_max[a]) {
        fail(Errc::parse_error, where + ".box: min exceeds max on axis " + std::to_string(a));
      }
    }
  } else {
    obs.shape = SceneObstacle::Shape::cloud;
    obs.points = vec3_list(j.at("points"), where + ".points");
  }
  return obs;
}

json emit_obstacle(const SceneObstacle& obs) {
  json j;
  j["id"] = obs.id;
  j["dynamic"] = obs.dynamic;
  if (obs.shape == SceneObstacle::Shape::box) {
    j["box"] = {{"min", to_json(obs.box_min)}, {"max", to_json(obs.box_max)}};
  } else {
    j["points"] = to_json(obs.points);
  }
  return j;
}

json emit_pose(const PoseChain& pose, const ArmSpec& spec) {
  json j;
  j["segments"] = to_json(pose.segments);
  j["quiver_indices"] = pose.quiver_indices.empty()
                            ? json::array()
                            : json(pose.quiver_indices);
  const JointAngles q = vectors_to_joint_angles(spec, pose);
  json az = json::array(), el = json::array();
  for (int k = 0; k < q.joint_count(); ++k) {
    az.push_back(rad2deg(q.azimuth[k]));
    el.push_back(rad2deg(q.elevation[k]));
  }
  j["joint_azimuth_deg"] = az;
  j["joint_elevation_deg"] = el;
  if (pose.s4_length_dev != 0.0) j["s4_length_dev"] = pose.s4_length_dev;
  return j;
}

PoseChain parse_pose(const json& j, const std::string& where, const ArmSpec& spec) {
  check_keys(j, where,
             {"segments", "quiver_indices", "joint_azimuth_deg", "joint_elevation_deg",
              "s4_length_dev"});
  std::vector<Vec3> segments = vec3_list(field(j, where, "segments"), where + ".segments");
  std::vector<int> indices;
  if (j.contains("quiver_indices")) {
    for (const auto& v : j.at("quiver_indices")) indices.push_back(integer(v, where));
  }
  PoseChain pose = chain_from_segments(spec, std::move(segments), std::move(indices));
  if (j.contains("s4_length_dev")) pose.s4_length_dev = num(j.at("s4_length_dev"), where);
  return pose;
}

json emit_joint_limits(const ArmSpec& arm) {
  json arr = json::array();
  for (const auto& lim : arm.joint_limits) {
    arr.push_back({{"elev_min_deg", rad2deg(lim.elev_min)},
                   {"elev_max_deg", rad2deg(lim.elev_max)},
                   {"azim_min_deg", rad2deg(lim.azim_min)},
                   {"azim_max_deg", rad2deg(lim.azim_max)}});
  }
  return arr;
}

json emit_arm_json(const ArmSpec& arm) {
  json j;
  j["lengths"] = arm.lengths;
  j["root"] = to_json(arm.root);
  j["arm_radius"] = arm.arm_radius;
  j["joint_limits"] = emit_joint_limits(arm);
  j["offsets"] = arm.offsets;
  j["fold_plane_normal"] = to_json(arm.fold_plane_normal);
  j["fold_flex_deg"] = rad2deg(arm.fold_flex);
  j["base_axis"] = to_json(arm.base_axis);
  j["base_ref"] = to_json(arm.base_ref);
  return j;
}

ArmSpec parse_arm_json(const json& j, const std::string& where) {
  check_keys(j, where,
             {"lengths", "root", "arm_radius", "joint_limits", "offsets", "fold_plane_normal",
              "fold_flex_deg", "base_axis", "base_ref"});
  ArmSpec arm;
  arm.lengths = num_list(field(j, where, "lengths"), where + ".lengths");
  if (j.contains("root")) arm.root = vec3(j.at("root"), where + ".root");
  if (j.contains("arm_radius")) arm.arm_radius = num(j.at("arm_radius"), where + ".arm_radius");
  if (j.contains("joint_limits")) {
    const json& arr = j.at("joint_limits");
    if (!arr.is_array()) fail(Errc::parse_error, where + ".joint_limits: expected a list");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      const std::string lw = where + ".joint_limits[" + std::to_string(k) + "]";
      check_keys(arr[k], lw, {"elev_min_deg", "elev_max_deg", "azim_min_deg", "azim_max_deg"});
      JointLimit lim;
      if (arr[k].contains("elev_min_deg")) lim.elev_min = deg2rad(num(arr[k]["elev_min_deg"], lw));
      if (arr[k].contains("elev_max_deg")) lim.elev_max = deg2rad(num(arr[k]["elev_max_deg"], lw));
      if (arr[k].contains("azim_min_deg")) lim.azim_min = deg2rad(num(arr[k]["azim_min_deg"], lw));
      if (arr[k].contains("azim_max_deg")) lim.azim_max = deg2rad(num(arr[k]["azim_max_deg"], lw));
      arm.joint_limits.push_back(lim);
    }
  }
  if (j.contains("offsets")) arm.offsets = num_list(j.at("offsets"), where + ".offsets");
  if (j.contains("fold_plane_normal"))
    arm.fold_plane_normal = vec3(j.at("fold_plane_normal"), where + ".fold_plane_normal");
  if (j.contains("fold_flex_deg"))
    arm.fold_flex = deg2rad(num(j.at("fold_flex_deg"), where + ".fold_flex_deg"));
  if (j.contains("base_axis")) arm.base_axis = vec3(j.at("base_axis"), where + ".base_axis");
  if (j.contains("base_ref")) arm.base_ref = vec3(j.at("base_ref"), where + ".base_ref");
  try {
    arm.validate();
  } catch (const Error& e) {
    fail(Errc::parse_error, where + ": " + e.what());
  }
  return arm;
}

json emit_reach_params(const ReachParams& rp) {
  json j;
  j["mode"] = rp.mode == SolveMode::eight_dof ? "8dof" : "6dof";
  j["epsilon_gap"] = rp.epsilon_gap;
  j["n_samples_per_segment"] = rp.n_samples_per_segment;
  j["approach_axis"] = to_json(rp.approach_axis);
  j["approach_half_angle_deg"] = rad2deg(rp.approach_half_angle);
  j["near_target_radius"] = rp.near_target_radius;
  j["cone_precheck"] = rp.cone_precheck;
  j["disable_geom_pruning"] = rp.disable_geom_pruning;
  j["refine_triangle_8dof"] = rp.refine_triangle_8dof;
  return j;
}

ReachParams parse_reach_params(const json& j, const std::string& where) {
  check_keys(j, where,
             {"mode", "epsilon_gap", "n_samples_per_segment", "approach_axis",
              "approach_half_angle_deg", "near_target_radius", "cone_precheck",
              "disable_geom_pruning", "refine_triangle_8dof"});
  ReachParams rp;
  const std::string mode = str(field(j, where, "mode"), where + ".mode");
  if (mode == "8dof") {
    rp.mode = SolveMode::eight_dof;
  } else if (mode == "6dof") {
    rp.mode = SolveMode::six_dof;
  } else {
    fail(Errc::parse_error, where + ".mode: expected '6dof' or '8dof'");
  }
  rp.epsilon_gap = num(field(j, where, "epsilon_gap"), where + ".epsilon_gap");
  rp.n_samples_per_segment =
      integer(field(j, where, "n_samples_per_segment"), where + ".n_samples_per_segment");
  rp.approach_axis = vec3(field(j, where, "approach_axis"), where + ".approach_axis");
  rp.approach_half_angle =
      deg2rad(num(field(j, where, "approach_half_angle_deg"), where + ".approach_half_angle_deg"));
  rp.near_target_radius = num(field(j, where, "near_target_radius"), where);
  rp.cone_precheck = boolean(field(j, where, "cone_precheck"), where);
  rp.disable_geom_pruning = boolean(field(j, where, "disable_geom_pruning"), where);
  rp.refine_triangle_8dof = boolean(field(j, where, "refine_triangle_8dof"), where);
  return rp;
}

json emit_path_params(const PathParams& pp) {
  json j;
  j["epsilon_waypoint"] = pp.epsilon_waypoint;
  j["d_w"] = pp.d_w;
  j["slack"] = pp.slack;
  j["joint1_max_move"] = pp.joint1_max_move;
  j["joint2_max_move"] = pp.joint2_max_move;
  j["relax_schedule"] = pp.relax_schedule;
  j["unfold_steps"] = pp.unfold_steps;
  return j;
}

PathParams parse_path_params(const json& j, const std::string& where) {
  check_keys(j, where,
             {"epsilon_waypoint", "d_w", "slack", "joint1_max_move", "joint2_max_move",
              "relax_schedule", "unfold_steps"});
  PathParams pp;
  pp.epsilon_waypoint = num(field(j, where, "epsilon_waypoint"), where);
  pp.d_w = num(field(j, where, "d_w"), where);
  pp.slack = num(field(j, where, "slack"), where);
  pp.joint1_max_move = num(field(j, where, "joint1_max_move"), where);
  pp.joint2_max_move = num(field(j, where, "joint2_max_move"), where);
  pp.relax_schedule = num_list(field(j, where, "relax_schedule"), where + ".relax_schedule");
  pp.unfold_steps = integer(field(j, where, "unfold_steps"), where + ".unfold_steps");
  return pp;
}

json emit_shortcut(const ShortcutPath& sc) {
  json j;
  j["segment_index"] = sc.segment_index;
  j["hit_sample_index"] = sc.hit_sample_index;
  j["prefix_samples"] = to_json(sc.prefix_samples);
  j["sublength_samples"] = to_json(sc.sublength_samples);
  j["bridge"] = sc.bridge ? to_json(*sc.bridge) : json(nullptr);
  j["via_origin_direct"] = sc.via_origin_direct;
  j["path_length"] = sc.path_length;
  j["seg1_index"] = sc.seg1_index;
  j["seg2_index"] = sc.seg2_index;
  return j;
}

ShortcutPath parse_shortcut(const json& j, const std::string& where, const ArmSpec& spec,
                            const json* basis) {
  check_keys(j, where,
             {"segment_index", "hit_sample_index", "prefix_samples", "sublength_samples",
              "bridge", "via_origin_direct", "path_length", "seg1_index", "seg2_index"});
  ShortcutPath sc;
  sc.segment_index = integer(field(j, where, "segment_index"), where);
  sc.hit_sample_index = integer(field(j, where, "hit_sample_index"), where);
  sc.prefix_samples = vec3_list(field(j, where, "prefix_samples"), where + ".prefix_samples");
  sc.sublength_samples =
      vec3_list(field(j, where, "sublength_samples"), where + ".sublength_samples");
  if (!j.at("bridge").is_null()) sc.bridge = vec3(j.at("bridge"), where + ".bridge");
  sc.via_origin_direct = boolean(field(j, where, "via_origin_direct"), where);
  sc.path_length = num(field(j, where, "path_length"), where);
  sc.seg1_index = integer(field(j, where, "seg1_index"), where);
  sc.seg2_index = integer(field(j, where, "seg2_index"), where);
  if (basis) sc.basis_pose = parse_pose(*basis, where + ".basis_pose", spec);
  return sc;
}

json emit_stats(const SolveStats& s) {
  json j;
  j["seg1_candidates"] = s.seg1_candidates;
  j["seg1_limit_pass"] = s.seg1_limit_pass;
  j["seg1_reach_pass"] = s.seg1_reach_pass;
  j["seg1_survivors"] = s.seg1_survivors;
  j["pair_candidates"] = s.pair_candidates;
  j["seg2_limit_pass"] = s.seg2_limit_pass;
  j["seg2_clear_pass"] = s.seg2_clear_pass;
  j["gap_tested"] = s.gap_tested;
  j["gap_pass"] = s.gap_pass;
  j["joint_pass"] = s.joint_pass;
  j["v3_clear_pass"] = s.v3_clear_pass;
  j["solutions"] = s.solutions;
  j["shortcuts_found"] = s.shortcuts_found;
  return j;
}

SolveStats parse_stats(const json& j, const std::string& where) {
  check_keys(j, where,
             {"seg1_candidates", "seg1_limit_pass", "seg1_reach_pass", "seg1_survivors",
              "pair_candidates", "seg2_limit_pass", "seg2_clear_pass", "gap_tested", "gap_pass",
              "joint_pass", "v3_clear_pass", "solutions", "shortcuts_found"});
  SolveStats s;
  s.seg1_candidates = long_int(field(j, where, "seg1_candidates"), where);
  s.seg1_limit_pass = long_int(field(j, where, "seg1_limit_pass"), where);
  s.seg1_reach_pass = long_int(field(j, where, "seg1_reach_pass"), where);
  s.seg1_survivors = long_int(field(j, where, "seg1_survivors"), where);
  s.pair_candidates = long_int(field(j, where, "pair_candidates"), where);
  s.seg2_limit_pass = long_int(field(j, where, "seg2_limit_pass"), where);
  s.seg2_clear_pass = long_int(field(j, where, "seg2_clear_pass"), where);
  s.gap_tested = long_int(field(j, where, "gap_tested"), where);
  s.gap_pass = long_int(field(j, where, "gap_pass"), where);
  s.joint_pass = long_int(field(j, where, "joint_pass"), where);
  s.v3_clear_pass = long_int(field(j, where, "v3_clear_pass"), where);
  s.solutions = long_int(field(j, where, "solutions"), where);
  s.shortcuts_found = long_int(field(j, where, "shortcuts_found"), where);
  return s;
}

}  // namespace

Scene parse_scene(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("scene: ") + e.what());
  }
  check_keys(j, "scene", {"grid", "obstacles", "root", "target", "approach"});
  Scene s;
  const json& g = field(j, "scene", "grid");
  check_keys(g, "scene.grid", {"bounds_min", "bounds_max", "voxel_size", "dilation_radius"});
  s.grid.bounds_min = vec3(field(g, "scene.grid", "bounds_min"), "scene.grid.bounds_min");
  s.grid.bounds_max = vec3(field(g, "scene.grid", "bounds_max"), "scene.grid.bounds_max");
  s.grid.voxel_size = num(field(g, "scene.grid", "voxel_size"), "scene.grid.voxel_size");
  if (g.contains("dilation_radius")) {
    s.grid.dilation_radius = num(g.at("dilation_radius"), "scene.grid.dilation_radius");
  }
  if (j.contains("obstacles")) {
    const json& arr = j.at("obstacles");
    if (!arr.is_array()) fail(Errc::parse_error, "scene.obstacles: expected a list");
    for (std::size_t k = 0; k < arr.size(); ++k) {
      s.obstacles.push_back(parse_obstacle(arr[k], "scene.obstacles[" + std::to_string(k) + "]"));
    }
  }
  s.root = vec3(field(j, "scene", "root"), "scene.root");
  s.target = vec3(field(j, "scene", "target"), "scene.target");
  if (j.contains("approach")) {
    const json& a = j.at("approach");
    check_keys(a, "scene.approach", {"axis", "half_angle_deg"});
    s.approach_axis = vec3(field(a, "scene.approach", "axis"), "scene.approach.axis");
    s.approach_half_angle =
        deg2rad(num(field(a, "scene.approach", "half_angle_deg"), "scene.approach.half_angle_deg"));
  }
  return s;
}

std::string emit_scene(const Scene& s) {
  json j;
  j["grid"] = {{"bounds_min", to_json(s.grid.bounds_min)},
               {"bounds_max", to_json(s.grid.bounds_max)},
               {"voxel_size", s.grid.voxel_size},
               {"dilation_radius", s.grid.dilation_radius}};
  json obstacles = json::array();
  for (const auto& o : s.obstacles) obstacles.push_back(emit_obstacle(o));
  j["obstacles"] = obstacles;
  j["root"] = to_json(s.root);
  j["target"] = to_json(s.target);
  j["approach"] = {{"axis", to_json(s.approach_axis)},
                   {"half_angle_deg", rad2deg(s.approach_half_angle)}};
  return j.dump(2) + "\n";
}

ArmSpec parse_arm(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("arm: ") + e.what());
  }
  return parse_arm_json(j, "arm");
}

std::string emit_arm(const ArmSpec& arm) { return emit_arm_json(arm).dump(2) + "\n"; }

PlanFile parse_plan(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("plan: ") + e.what());
  }
  check_keys(j, "plan",
             {"format", "quiver", "reach", "path", "arm", "chosen", "waypoints", "poses",
              "unfold_prefix", "provenance", "stats"});
  if (str(field(j, "plan", "format"), "plan.format") != "reachplan-plan-v1") {
    fail(Errc::parse_error, "plan.format: unsupported format");
  }
  PlanFile pf;
  const json& qj = field(j, "plan", "quiver");
  check_keys(qj, "plan.quiver", {"elev_step_deg", "equator_azim_step_deg", "min_per_ring"});
  pf.quiver.elev_step_deg = num(field(qj, "plan.quiver", "elev_step_deg"), "plan.quiver");
  pf.quiver.equator_azim_step_deg =
      num(field(qj, "plan.quiver", "equator_azim_step_deg"), "plan.quiver");
  pf.quiver.min_per_ring = integer(field(qj, "plan.quiver", "min_per_ring"), "plan.quiver");
  pf.reach = parse_reach_params(field(j, "plan", "reach"), "plan.reach");
  pf.path = parse_path_params(field(j, "plan", "path"), "plan.path");
  pf.arm = parse_arm_json(field(j, "plan", "arm"), "plan.arm");

  const json& cj = field(j, "plan", "chosen");
  check_keys(cj, "plan.chosen", {"kind", "pose", "shortcut", "basis_pose", "path_length"});
  const std::string kind = str(field(cj, "plan.chosen", "kind"), "plan.chosen.kind");
  pf.chosen.path_length = num(field(cj, "plan.chosen", "path_length"), "plan.chosen");
  if (kind == "reach-pose") {
    pf.chosen.kind = ChosenPath::Kind::reach_pose;
    pf.chosen.pose = parse_pose(field(cj, "plan.chosen", "pose"), "plan.chosen.pose", pf.arm);
  } else if (kind == "shortcut") {
    pf.chosen.kind = ChosenPath::Kind::shortcut;
    const json* basis = cj.contains("basis_pose") ? &cj.at("basis_pose") : nullptr;
    pf.chosen.shortcut =
        parse_shortcut(field(cj, "plan.chosen", "shortcut"), "plan.chosen.shortcut", pf.arm, basis);
  } else {
    fail(Errc::parse_error, "plan.chosen.kind: expected 'reach-pose' or 'shortcut'");
  }

  pf.plan.waypoints = vec3_list(field(j, "plan", "waypoints"), "plan.waypoints");
  for (std::size_t k = 0; k < j.at("poses").size(); ++k) {
    pf.plan.poses.push_back(
        parse_pose(j.at("poses")[k], "plan.poses[" + std::to_string(k) + "]", pf.arm));
  }
  for (std::size_t k = 0; k < j.at("unfold_prefix").size(); ++k) {
    pf.plan.unfold_prefix.push_back(parse_pose(
        j.at("unfold_prefix")[k], "plan.unfold_prefix[" + std::to_string(k) + "]", pf.arm));
  }
  const json& pv = field(j, "plan", "provenance");
  check_keys(pv, "plan.provenance",
             {"kind", "relax_per_waypoint", "notes", "replan_switch_index"});
  pf.plan.provenance.kind = str(field(pv, "plan.provenance", "kind"), "plan.provenance.kind");
  pf.plan.provenance.relax_per_waypoint =
      num_list(field(pv, "plan.provenance", "relax_per_waypoint"), "plan.provenance");
  for (const auto& n : field(pv, "plan.provenance", "notes")) {
    pf.plan.provenance.notes.push_back(str(n, "plan.provenance.notes"));
  }
  pf.plan.provenance.replan_switch_index =
      integer(field(pv, "plan.provenance", "replan_switch_index"), "plan.provenance");
  pf.stats = parse_stats(field(j, "plan", "stats"), "plan.stats");
  return pf;
}

std::string emit_plan(const PlanFile& pf) {
  json j;
  j["format"] = "reachplan-plan-v1";
  j["quiver"] = {{"elev_step_deg", pf.quiver.elev_step_deg},
                 {"equator_azim_step_deg", pf.quiver.equator_azim_step_deg},
                 {"min_per_ring", pf.quiver.min_per_ring}};
  j["reach"] = emit_reach_params(pf.reach);
  j["path"] = emit_path_params(pf.path);
  j["arm"] = emit_arm_json(pf.arm);
  json chosen;
  chosen["kind"] = pf.chosen.kind == ChosenPath::Kind::reach_pose ? "reach-pose" : "shortcut";
  if (pf.chosen.kind == ChosenPath::Kind::reach_pose) {
    chosen["pose"] = emit_pose(pf.chosen.pose, pf.arm);
  } else {
    chosen["shortcut"] = emit_shortcut(pf.chosen.shortcut);
    if (!pf.chosen.shortcut.basis_pose.segments.empty()) {
      chosen["basis_pose"] = emit_pose(pf.chosen.shortcut.basis_pose, pf.arm);
    }
  }
  chosen["path_length"] = pf.chosen.path_length;
  j["chosen"] = chosen;
  j["waypoints"] = to_json(pf.plan.waypoints);
  json poses = json::array();
  for (const auto& p : pf.plan.poses) poses.push_back(emit_pose(p, pf.arm));
  j["poses"] = poses;
  json unfold = json::array();
  for (const auto& p : pf.plan.unfold_prefix) unfold.push_back(emit_pose(p, pf.arm));
  j["unfold_prefix"] = unfold;
  j["provenance"] = {{"kind", pf.plan.provenance.kind},
                     {"relax_per_waypoint", pf.plan.provenance.relax_per_waypoint},
                     {"notes", pf.plan.provenance.notes},
                     {"replan_switch_index", pf.plan.provenance.replan_switch_index}};
  j["stats"] = emit_stats(pf.stats);
  return j.dump(2) + "\n";
}

PoseChain parse_pose_file(const std::string& text, const ArmSpec& spec) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("pose: ") + e.what());
  }
  return parse_pose(j, "pose", spec);
}

SceneObstacle parse_obstacle_file(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("obstacle: ") + e.what());
  }
  return parse_obstacle(j, "obstacle");
}

std::string emit_trace(const ExecutionTrace& trace, const MotionParams& params) {
  json j;
  j["format"] = "reachplan-trace-v1";
  j["sample_rate"] = params.sample_rate;
  j["v_w"] = params.v_w;
  j["max_joint_rate_deg"] = rad2deg(params.max_joint_rate);
  j["arrival_tolerance"] = params.arrival_tolerance;
  j["reached_goal"] = trace.reached_goal;
  json ticks = json::array();
  for (const auto& t : trace.ticks) {
    json tj;
    tj["t"] = t.time;
    json az = json::array(), el = json::array();
    for (int k = 0; k < t.q.joint_count(); ++k) {
      az.push_back(rad2deg(t.q.azimuth[k]));
      el.push_back(rad2deg(t.q.elevation[k]));
    }
    tj["azimuth_deg"] = az;
    tj["elevation_deg"] = el;
    tj["tracked"] = to_json(t.tracked_point);
    tj["waypoint"] = t.active_waypoint_index;
    ticks.push_back(tj);
  }
  j["ticks"] = ticks;
  j["overshoot_events"] = trace.overshoot_events;
  j["clamp_events"] = trace.clamp_events;
  return j.dump(2) + "\n";
}

ExecutionTrace parse_trace(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(Errc::parse_error, std::string("trace: ") + e.what());
  }
  check_keys(j, "trace",
             {"format", "sample_rate", "v_w", "max_joint_rate_deg", "arrival_tolerance",
              "reached_goal", "ticks", "overshoot_events", "clamp_events"});
  if (str(field(j, "trace", "format"), "trace.format") != "reachplan-trace-v1") {
    fail(Errc::parse_error, "trace.format: unsupported format");
  }
  ExecutionTrace trace;
  trace.reached_goal = boolean(field(j, "trace", "reached_goal"), "trace.reached_goal");
  for (const auto& tj : field(j, "trace", "ticks")) {
    ExecutionTick t;
    t.time = num(field(tj, "trace.tick", "t"), "trace.tick.t");
    for (const auto& a : field(tj, "trace.tick", "azimuth_deg")) {
      t.q.azimuth.push_back(deg2rad(num(a, "trace.tick.azimuth_deg")));
      t.q.degenerate.push_back(0);
    }
    for (const auto& e : field(tj, "trace.tick", "elevation_deg")) {
      t.q.elevation.push_back(deg2rad(num(e, "trace.tick.elevation_deg")));
    }
    t.tracked_point = vec3(field(tj, "trace.tick", "tracked"), "trace.tick.tracked");
    t.active_waypoint_index = integer(field(tj, "trace.tick", "waypoint"), "trace.tick.waypoint");
    trace.ticks.push_back(std::move(t));
  }
  for (const auto& v : field(j, "trace", "overshoot_events")) {
    trace.overshoot_events.push_back(integer(v, "trace.overshoot_events"));
  }
  for (const auto& v : field(j, "trace", "clamp_events")) {
    trace.clamp_events.push_back(integer(v, "trace.clamp_events"));
  }
  return trace;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::parse_error, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::invalid_parameter, "cannot write file: " + path);
  out << content;
}

}  // namespace reachplan
