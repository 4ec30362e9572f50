// Scenario configuration: a versioned JSON document, parsed strictly.
#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpo/planner.hpp"
#include "rpo/scene.hpp"
#include "rpo/sim.hpp"

namespace rpo {

inline constexpr int kConfigSchema = 1;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplerSpec {
  enum class Kind { Baseline, Replay } kind = Kind::Baseline;
  std::filesystem::path replay_path;
};

/// Object the `plan` command observes when no cloud file is given.
struct ObjectSpec {
  Vec3 half_extents{0.05, 0.04, 0.03};
  int face = 5;
  double yaw = 0.0;
  double x = 0.0;
  double y = -0.15;
};

struct EvaluationSettings {
  int n_objects = 20;
  int trials_per_skeleton = 10;
  EvaluationOptions options;
};

struct ScenarioConfig {
  Scene scene = Scene::Default();
  PlannerConfig planner;
  SamplerSpec sampler;
  std::vector<PlanSkeleton> skeletons{PlanSkeleton::Parse("pg")};
  Seed seed{0};
  NoiseModel noise;
  std::filesystem::path output_dir = "out";
  EvaluationSettings evaluation;
  ObjectSpec object;
  /// Observed cloud (PLY) for `plan`; synthesized from `object` when absent.
  std::optional<std::filesystem::path> cloud;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
/// Relative paths are resolved against `base_dir`.
ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ScenarioConfig load_config(const std::filesystem::path& path);

std::unique_ptr<SkillSampler> make_sampler(const SamplerSpec& spec);

}  // namespace rpo
