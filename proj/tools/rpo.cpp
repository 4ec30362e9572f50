// Command-line front end: plan one task, run batch evaluations, generate
// training tuples and export scene clouds.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "rpo/config.hpp"
#include "rpo/ply.hpp"
#include "rpo/report.hpp"

namespace fs = std::filesystem;
using namespace rpo;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPlannerFailure = 2;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> noise;
  std::optional<double> budget;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario config (JSON)")->required();
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("--out", c.out, "output directory (overrides the config)");
  cmd->add_option("--noise", c.noise, "depth noise 'a,b' in m and 1/m (overrides the config)");
  cmd->add_option("--budget", c.budget, "planning time budget in seconds (overrides the config)");
}

NoiseModel parse_noise(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw ConfigError("--noise expects 'a,b'");
  try {
    std::size_t used_a = 0;
    std::size_t used_b = 0;
    const std::string sa = s.substr(0, comma);
    const std::string sb = s.substr(comma + 1);
    NoiseModel n{std::stod(sa, &used_a), std::stod(sb, &used_b)};
    if (used_a != sa.size() || used_b != sb.size()) throw std::invalid_argument("trailing characters");
    if (n.a < 0.0 || n.b < 0.0) throw ConfigError("--noise: a and b must be non-negative");
    return n;
  } catch (const std::logic_error&) {
    throw ConfigError("--noise expects two numbers 'a,b', got '" + s + "'");
  }
}

ScenarioConfig load(const Common& c) {
  ScenarioConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = Seed{*c.seed};
  if (c.out) cfg.output_dir = *c.out;
  if (c.noise) cfg.noise = parse_noise(*c.noise);
  if (c.budget) {
    if (!(*c.budget > 0.0)) throw ConfigError("--budget must be positive");
    cfg.planner.time_budget = *c.budget;
  }
  cfg.evaluation.options.noise = cfg.noise;
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

Transform transform_from(const std::vector<double>& v, std::size_t offset) {
  return Transform(Quat(v[offset + 3], v[offset + 4], v[offset + 5], v[offset + 6]),
                   Vec3(v[offset], v[offset + 1], v[offset + 2]));
}

Cuboid object_of(const ScenarioConfig& cfg) {
  Cuboid c;
  c.half_extents = cfg.object.half_extents;
  c.pose = stable_pose(c, cfg.object.face, cfg.object.yaw, cfg.object.x, cfg.object.y, cfg.scene.table_z());
  return c;
}

SynthesizedCloud observe(const ScenarioConfig& cfg) {
  const Cuboid obj = object_of(cfg);
  const EvaluationOptions& o = cfg.evaluation.options;
  SynthesizedCloud s = synthesize_cloud(cfg.scene, obj, o.dense_points, cfg.seed.derive("cloud"), o.sparse_points);
  if (cfg.noise.active()) s = add_depth_noise(s, cfg.scene, cfg.noise.a, cfg.noise.b, cfg.seed.derive("noise"));
  return s;
}

int cmd_plan(const Common& common, const std::vector<double>& goal, const std::vector<double>& goal_pair) {
  const ScenarioConfig cfg = load(common);
  if (cfg.skeletons.size() != 1) throw ConfigError("plan needs exactly one skeleton");
  const PlanSkeleton& skeleton = cfg.skeletons.front();
  if (!goal.empty() && !goal_pair.empty()) throw ConfigError("give either --goal or --goal-pair");

  Transform t_des;
  try {
    if (!goal.empty()) t_des = transform_from(goal, 0);
    if (!goal_pair.empty()) t_des = transform_from(goal_pair, 7) * invert(transform_from(goal_pair, 0));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("goal: ") + e.what());
  }

  const Cloud observed = [&] {
    if (!cfg.cloud) return observe(cfg).dense;
    try {
      return read_ply(*cfg.cloud);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cloud: ") + e.what());
    }
  }();

  const auto sampler = make_sampler(cfg.sampler);
  PlannerConfig pc = cfg.planner;
  pc.seed = cfg.seed.derive("planner");
  const PlanResult result = plan(observed, t_des, skeleton, *sampler, cfg.scene, pc);

  fs::create_directories(cfg.output_dir);
  if (!result.plan) {
    nlohmann::json j = {{"skeleton", skeleton.letters()},
                        {"found", false},
                        {"goal", pose_json(t_des)},
                        {"failure_category", result.failure_category},
                        {"stats", stats_json(result.stats)}};
    write_file(cfg.output_dir / "plan.json", j.dump(2) + "\n");
    std::cerr << "no plan found (" << result.failure_category << ") after " << result.stats.samples_drawn
              << " samples\n";
    return kPlannerFailure;
  }
  std::vector<fs::path> clouds;
  for (std::size_t t = 0; t < result.plan->predicted_clouds.size(); ++t) {
    clouds.push_back(cfg.output_dir / ("cloud_" + std::to_string(t) + ".ply"));
    write_ply(clouds.back(), result.plan->predicted_clouds[t]);
  }
  nlohmann::json j = plan_json(*result.plan, skeleton, result.stats, clouds);
  j["found"] = true;
  j["goal"] = pose_json(t_des);
  write_file(cfg.output_dir / "plan.json", j.dump(2) + "\n");
  std::cout << "plan found: " << result.plan->size() << " step(s), " << result.stats.samples_drawn << " samples, "
            << result.stats.elapsed_seconds << " s\n";
  return kOk;
}

void write_report(const fs::path& dir, const EvaluationReport& report) {
  fs::create_directories(dir);
  std::ofstream trials(dir / "trials.jsonl");
  write_trial_records(trials, report);
  std::ofstream timings(dir / "timings.jsonl");
  write_timings(timings, report);
  write_file(dir / "summary.json", summary_json(report).dump(2) + "\n");
}

int cmd_evaluate(const Common& common, std::optional<int> trials, bool compare_noise, bool single_step) {
  ScenarioConfig cfg = load(common);
  if (trials) {
    if (*trials < 1) throw ConfigError("--trials must be positive");
    cfg.evaluation.trials_per_skeleton = *trials;
  }
  const auto sampler = make_sampler(cfg.sampler);
  const EvaluationSettings& ev = cfg.evaluation;

  auto run = [&](const NoiseModel& noise) {
    EvaluationOptions opts = ev.options;
    opts.noise = noise;
    if (single_step) {
      std::vector<SkillType> skills;
      std::set<char> seen;
      for (const PlanSkeleton& s : cfg.skeletons) {
        for (SkillType k : s.steps) {
          if (seen.insert(skill_letter(k)).second) skills.push_back(k);
        }
      }
      PlannerConfig pc = cfg.planner;
      if (!pc.max_samples) pc.max_samples = 15;
      return evaluate_single_step(ev.n_objects, skills, *sampler, pc, cfg.scene, cfg.seed, opts);
    }
    return evaluate_multistep(ev.n_objects, cfg.skeletons, ev.trials_per_skeleton, *sampler, cfg.planner, cfg.scene,
                              cfg.seed, opts);
  };

  const EvaluationReport report = run(cfg.noise);
  write_report(cfg.output_dir, report);
  if (single_step) write_file(cfg.output_dir / "breakdown.md", breakdown_table(report));
  for (const SkeletonSummary& s : report.summaries) {
    std::cout << s.skeleton << ": " << s.successes << "/" << s.trials << " succeeded\n";
  }
  if (compare_noise) {
    if (!cfg.noise.active()) throw ConfigError("--compare-noise needs nonzero noise");
    const EvaluationReport clean = run(NoiseModel{});
    write_report(cfg.output_dir / "clean", clean);
    write_file(cfg.output_dir / "noise_comparison.json", noise_comparison_json(clean, report).dump(2) + "\n");
    const std::string table = noise_comparison_table(clean, report);
    write_file(cfg.output_dir / "noise_comparison.md", table);
    std::cout << table;
  }
  return kOk;
}

int cmd_gen_data(const Common& common, const std::string& letter, int samples) {
  const ScenarioConfig cfg = load(common);
  PlanSkeleton s;
  try {
    s = PlanSkeleton::Parse(letter);
  } catch (const SkeletonError& e) {
    throw ConfigError(std::string("--skill: ") + e.what());
  }
  if (s.size() != 1) throw ConfigError("--skill takes a single letter");
  if (samples < 1) throw ConfigError("--samples must be positive");
  const TrainingData data = generate_training_data(cfg.evaluation.n_objects, samples, s.steps.front(), cfg.scene,
                                                   cfg.seed.derive("gen-data"), cfg.planner.path);
  fs::create_directories(cfg.output_dir);
  const fs::path path = cfg.output_dir / ("data_" + letter + ".txt");
  std::ofstream out(path);
  for (const TrainingSample& t : data.samples) write_skill_params(out, to_skill_params(t));
  std::cout << "yield " << data.samples.size() << "/" << data.attempts << " -> " << path.string() << "\n";
  return kOk;
}

int cmd_export(const Common& common) {
  const ScenarioConfig cfg = load(common);
  fs::create_directories(cfg.output_dir);
  const SynthesizedCloud s = observe(cfg);
  write_ply(cfg.output_dir / "object_dense.ply", s.dense);
  write_ply(cfg.output_dir / "object_observed.ply", s.sparse);
  write_ply(cfg.output_dir / "table.ply", cfg.scene.table_surface().cloud);
  if (cfg.scene.shelf) write_ply(cfg.output_dir / "shelf.ply", cfg.scene.shelf_surface().cloud);
  std::cout << "exported scene clouds to " << cfg.output_dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-step rigid object manipulation planner"};
  app.require_subcommand(1);

  Common plan_opts;
  std::vector<double> goal;
  std::vector<double> goal_pair;
  CLI::App* plan_cmd = app.add_subcommand("plan", "plan a single task");
  add_common(plan_cmd, plan_opts);
  plan_cmd->add_option("--goal", goal, "desired transform: tx ty tz qw qx qy qz")->expected(7);
  plan_cmd->add_option("--goal-pair", goal_pair, "start and goal poses (7 numbers each); goal = b * inv(a)")
      ->expected(14);

  Common eval_opts;
  std::optional<int> trials;
  bool compare_noise = false;
  bool single_step = false;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "run the batch evaluation protocol");
  add_common(eval_cmd, eval_opts);
  eval_cmd->add_option("--trials", trials, "trials per skeleton (overrides the config)");
  eval_cmd->add_flag("--compare-noise", compare_noise, "also run without noise and write a comparison table");
  eval_cmd->add_flag("--single-step", single_step, "single-step protocol over every skill in the skeletons");

  Common gen_opts;
  std::string letter;
  int samples = 0;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate training tuples for one skill");
  add_common(gen_cmd, gen_opts);
  gen_cmd->add_option("--skill", letter, "skill letter: p, g, s or k")->required();
  gen_cmd->add_option("--samples", samples, "number of attempts")->required();

  Common export_opts;
  CLI::App* export_cmd = app.add_subcommand("export", "write scene and object clouds as PLY");
  add_common(export_cmd, export_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*plan_cmd) return cmd_plan(plan_opts, goal, goal_pair);
    if (*eval_cmd) return cmd_evaluate(eval_opts, trials, compare_noise, single_step);
    if (*gen_cmd) return cmd_gen_data(gen_opts, letter, samples);
    if (*export_cmd) return cmd_export(export_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
