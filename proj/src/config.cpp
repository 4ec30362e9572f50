#include "rpo/config.hpp"

#include <json.hpp>

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace rpo {

using nlohmann::json;

namespace {

/// Strict view of one JSON object: every key must be claimed.
class Section {
 public:
  Section(const json& j, std::string where, std::set<std::string> allowed) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
    for (const auto& [k, v] : j_.items()) {
      if (!allowed.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

  bool has(const std::string& k) const { return j_.contains(k); }
  const json& raw(const std::string& k) const { return j_.at(k); }
  std::string path(const std::string& k) const { return where_ + "." + k; }

  double number(const std::string& k, double fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_number()) throw ConfigError(path(k) + ": expected a number");
    return j_.at(k).get<double>();
  }
  double positive(const std::string& k, double fallback) const {
    const double v = number(k, fallback);
    if (!(v > 0.0)) throw ConfigError(path(k) + ": must be positive");
    return v;
  }
  long integer(const std::string& k, long fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_number_integer()) throw ConfigError(path(k) + ": expected an integer");
    return j_.at(k).get<long>();
  }
  bool boolean(const std::string& k, bool fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_boolean()) throw ConfigError(path(k) + ": expected true or false");
    return j_.at(k).get<bool>();
  }
  std::string string(const std::string& k, const std::string& fallback) const {
    if (!has(k)) return fallback;
    if (!j_.at(k).is_string()) throw ConfigError(path(k) + ": expected a string");
    return j_.at(k).get<std::string>();
  }
  Vec3 vec3(const std::string& k, const Vec3& fallback) const {
    if (!has(k)) return fallback;
    return to_vec3(j_.at(k), path(k));
  }

  static Vec3 to_vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(where + ": expected [x, y, z]");
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) throw ConfigError(where + ": expected numbers");
      out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    return out;
  }

 private:
  const json& j_;
  std::string where_;
};

Rect parse_rect(const json& j, const std::string& where, const Rect& fallback) {
  Section s(j, where, {"x_min", "x_max", "y_min", "y_max"});
  Rect r{s.number("x_min", fallback.x_min), s.number("x_max", fallback.x_max), s.number("y_min", fallback.y_min),
         s.number("y_max", fallback.y_max)};
  if (!(r.x_max > r.x_min && r.y_max > r.y_min)) throw ConfigError(where + ": extents must be positive");
  return r;
}

void parse_workspace(const json& j, WorkspaceModel& ws) {
  Section s(j, "scene.workspace",
            {"left_shoulder", "right_shoulder", "reach_radius", "ceiling", "palm_half_width", "palm_half_length",
             "penetration_tolerance", "grasp_region"});
  ws.arms[0].shoulder = s.vec3("left_shoulder", ws.arms[0].shoulder);
  ws.arms[1].shoulder = s.vec3("right_shoulder", ws.arms[1].shoulder);
  const double radius = s.positive("reach_radius", ws.arms[0].radius);
  ws.arms[0].radius = ws.arms[1].radius = radius;
  ws.ceiling = s.positive("ceiling", ws.ceiling);
  ws.palm_half_width = s.positive("palm_half_width", ws.palm_half_width);
  ws.palm_half_length = s.positive("palm_half_length", ws.palm_half_length);
  ws.penetration_tolerance = s.positive("penetration_tolerance", ws.penetration_tolerance);
  if (s.has("grasp_region")) ws.grasp_region = parse_rect(s.raw("grasp_region"), s.path("grasp_region"), ws.grasp_region);
}

void parse_scene(const json& j, Scene& scene) {
  Section s(j, "scene", {"table", "shelf", "cameras", "workspace", "support_spacing"});
  if (s.has("table")) {
    Section t(s.raw("table"), "scene.table", {"x_min", "x_max", "y_min", "y_max", "z"});
    Rect r = scene.workspace.table;
    r = Rect{t.number("x_min", r.x_min), t.number("x_max", r.x_max), t.number("y_min", r.y_min),
             t.number("y_max", r.y_max)};
    if (!(r.x_max > r.x_min && r.y_max > r.y_min)) throw ConfigError("scene.table: extents must be positive");
    scene.workspace.table = r;
    scene.workspace.table_z = t.number("z", scene.workspace.table_z);
  }
  if (s.has("workspace")) parse_workspace(s.raw("workspace"), scene.workspace);
  // cameras follow the table unless given explicitly
  if (s.has("table") || s.has("workspace")) scene.cameras = corner_cameras(scene.workspace);
  if (s.has("shelf")) {
    Section sh(s.raw("shelf"), "scene.shelf", {"x_min", "x_max", "y_min", "y_max", "z"});
    Shelf shelf;
    shelf.extent = Rect{sh.number("x_min", -0.2), sh.number("x_max", 0.2), sh.number("y_min", 0.2),
                        sh.number("y_max", 0.35)};
    shelf.z = sh.number("z", 0.3);
    scene.shelf = shelf;
  }
  if (s.has("cameras")) {
    const json& cams = s.raw("cameras");
    if (!cams.is_array() || cams.empty()) throw ConfigError("scene.cameras: expected a non-empty array");
    scene.cameras.clear();
    for (std::size_t i = 0; i < cams.size(); ++i) {
      const std::string where = "scene.cameras[" + std::to_string(i) + "]";
      Section c(cams[i], where, {"position", "focal_point"});
      if (!c.has("position")) throw ConfigError(where + ": missing 'position'");
      scene.cameras.push_back(Camera{c.vec3("position", Vec3::Zero()), c.vec3("focal_point", Vec3::Zero())});
    }
  }
  scene.support_spacing = s.positive("support_spacing", scene.support_spacing);
  try {
    scene.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

void parse_planner(const json& j, PlannerConfig& cfg) {
  Section s(j, "planner",
            {"k_max", "time_budget", "position_tolerance", "orientation_tolerance_deg", "max_samples",
             "waypoints_per_phase"});
  cfg.k_max = static_cast<int>(s.integer("k_max", cfg.k_max));
  cfg.time_budget = s.positive("time_budget", cfg.time_budget);
  cfg.position_tolerance = s.positive("position_tolerance", cfg.position_tolerance);
  cfg.orientation_tolerance =
      s.positive("orientation_tolerance_deg", cfg.orientation_tolerance * 180.0 / std::numbers::pi) *
      std::numbers::pi / 180.0;
  if (s.has("max_samples")) cfg.max_samples = s.integer("max_samples", 0);
  cfg.path.waypoints_per_phase = static_cast<int>(s.integer("waypoints_per_phase", cfg.path.waypoints_per_phase));
  if (cfg.path.waypoints_per_phase < 1) throw ConfigError("planner.waypoints_per_phase: must be positive");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

PlanSkeleton parse_skeleton(const json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError(where + ": expected a string such as \"pgp\"");
  try {
    return PlanSkeleton::Parse(j.get<std::string>());
  } catch (const SkeletonError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Section s(j, "config",
            {"schema", "seed", "skeleton", "skeletons", "sampler", "planner", "scene", "noise", "output_dir",
             "evaluation", "object", "cloud"});
  if (!s.has("schema")) throw ConfigError("config: missing 'schema'");
  if (s.integer("schema", 0) != kConfigSchema) {
    throw ConfigError("config: unsupported schema " + s.raw("schema").dump() + " (expected " +
                      std::to_string(kConfigSchema) + ")");
  }

  ScenarioConfig cfg;
  const long seed = s.integer("seed", 0);
  if (seed < 0) throw ConfigError("config.seed: must be non-negative");
  cfg.seed = Seed{static_cast<std::uint64_t>(seed)};

  if (s.has("skeleton") && s.has("skeletons")) throw ConfigError("config: give either 'skeleton' or 'skeletons'");
  if (s.has("skeleton")) cfg.skeletons = {parse_skeleton(s.raw("skeleton"), "config.skeleton")};
  if (s.has("skeletons")) {
    const json& list = s.raw("skeletons");
    if (!list.is_array() || list.empty()) throw ConfigError("config.skeletons: expected a non-empty array");
    cfg.skeletons.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      cfg.skeletons.push_back(parse_skeleton(list[i], "config.skeletons[" + std::to_string(i) + "]"));
    }
  }

  if (s.has("scene")) parse_scene(s.raw("scene"), cfg.scene);
  if (s.has("planner")) parse_planner(s.raw("planner"), cfg.planner);

  if (s.has("sampler")) {
    Section sm(s.raw("sampler"), "sampler", {"type", "path"});
    const std::string type = sm.string("type", "baseline");
    if (type == "baseline") {
      if (sm.has("path")) throw ConfigError("sampler.path: only valid for the replay sampler");
    } else if (type == "replay") {
      if (!sm.has("path")) throw ConfigError("sampler: replay sampler needs 'path'");
      cfg.sampler.kind = SamplerSpec::Kind::Replay;
      const std::filesystem::path p = sm.string("path", "");
      cfg.sampler.replay_path = p.is_absolute() ? p : base_dir / p;
    } else {
      throw ConfigError("sampler.type: expected 'baseline' or 'replay', got '" + type + "'");
    }
  }

  if (s.has("noise")) {
    Section n(s.raw("noise"), "noise", {"a", "b"});
    cfg.noise = {n.number("a", 0.0), n.number("b", 0.0)};
    if (cfg.noise.a < 0.0 || cfg.noise.b < 0.0) throw ConfigError("noise: a and b must be non-negative");
  }

  if (s.has("output_dir")) {
    const std::filesystem::path p = s.string("output_dir", "out");
    cfg.output_dir = p.is_absolute() ? p : base_dir / p;
  } else {
    cfg.output_dir = base_dir / "out";
  }

  if (s.has("evaluation")) {
    Section e(s.raw("evaluation"), "evaluation",
              {"n_objects", "trials_per_skeleton", "dense_points", "sparse_points", "settle", "cuboid_min", "cuboid_max",
               "witness_attempts"});
    EvaluationSettings& ev = cfg.evaluation;
    ev.n_objects = static_cast<int>(e.integer("n_objects", ev.n_objects));
    ev.trials_per_skeleton = static_cast<int>(e.integer("trials_per_skeleton", ev.trials_per_skeleton));
    ev.options.dense_points = e.integer("dense_points", ev.options.dense_points);
    ev.options.sparse_points = e.integer("sparse_points", ev.options.sparse_points);
    ev.options.execution.settle = e.boolean("settle", ev.options.execution.settle);
    ev.options.cuboid_min = e.positive("cuboid_min", ev.options.cuboid_min);
    ev.options.cuboid_max = e.positive("cuboid_max", ev.options.cuboid_max);
    ev.options.witness_attempts = static_cast<int>(e.integer("witness_attempts", ev.options.witness_attempts));
    if (ev.n_objects < 1 || ev.trials_per_skeleton < 1 || ev.options.witness_attempts < 1) {
      throw ConfigError("evaluation: counts must be positive");
    }
    if (ev.options.dense_points < 100 || ev.options.sparse_points < 1) {
      throw ConfigError("evaluation: dense_points must be >= 100 and sparse_points >= 1");
    }
    if (ev.options.cuboid_max < ev.options.cuboid_min) throw ConfigError("evaluation: cuboid_max < cuboid_min");
  }

  if (s.has("object")) {
    Section o(s.raw("object"), "object", {"half_extents", "face", "yaw_deg", "x", "y"});
    ObjectSpec& ob = cfg.object;
    ob.half_extents = o.vec3("half_extents", ob.half_extents);
    if ((ob.half_extents.array() <= 0.0).any()) throw ConfigError("object.half_extents: must be positive");
    ob.face = static_cast<int>(o.integer("face", ob.face));
    if (ob.face < 0 || ob.face > 5) throw ConfigError("object.face: must be in [0, 5]");
    ob.yaw = o.number("yaw_deg", 0.0) * std::numbers::pi / 180.0;
    ob.x = o.number("x", ob.x);
    ob.y = o.number("y", ob.y);
  }
  if (s.has("cloud")) {
    const std::filesystem::path p = s.string("cloud", "");
    cfg.cloud = p.is_absolute() ? p : base_dir / p;
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

std::unique_ptr<SkillSampler> make_sampler(const SamplerSpec& spec) {
  if (spec.kind == SamplerSpec::Kind::Replay) {
    try {
      return std::make_unique<ReplaySampler>(ReplaySampler::FromFile(spec.replay_path));
    } catch (const std::exception& e) {
      throw ConfigError(std::string("sampler: ") + e.what());
    }
  }
  return std::make_unique<BaselineSampler>();
}

}  // namespace rpo
