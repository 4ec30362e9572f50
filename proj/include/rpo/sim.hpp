// Procedural tabletop simulation: cuboid scenes, synthetic point clouds,
// idealized sticking-contact execution, training tuples and evaluation.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rpo/planner.hpp"
#include "rpo/samplers.hpp"
#include "rpo/scene.hpp"

namespace rpo {

// ---- scene generation ------------------------------------------------------

/// Outward normal of face `face` (0..5: +x, -x, +y, -y, +z, -z) in the body frame.
Vec3 face_normal(int face);

/// Uniform cuboid with half extents in [lo, hi] per axis.
Cuboid random_cuboid(Seed seed, double lo = 0.025, double hi = 0.07);

/// Rotation that puts `face` down (its outward normal along -z).
Quat face_down_rotation(int face);

/// Stable pose with the given face down, yaw and planar position.
Transform stable_pose(const Cuboid& cuboid, int face, double yaw, double x, double y, double table_z);

/// Uniform face, uniform yaw, uniform (x, y) in `region` (defaults to the
/// table shrunk by the cuboid's bounding radius); resting on the table.
Transform sample_stable_pose(const Cuboid& cuboid, const Scene& scene, Seed seed,
                             const std::optional<Rect>& region = std::nullopt);

/// Face whose outward normal points most nearly down, with its tilt from -z.
std::pair<int, double> resting_face(const Transform& pose);

/// World-frame corners of the cuboid.
std::vector<Vec3> cuboid_corners(const Cuboid& cuboid, const Transform& pose);

// ---- point clouds ----------------------------------------------------------

struct SynthesizedCloud {
  Cloud dense;
  /// Camera that observed each dense point.
  std::vector<int> camera;
  Cloud sparse;
  /// Dense index of each sparse point.
  std::vector<Eigen::Index> sparse_indices;
};

/// Area-weighted samples over the camera-visible faces of `object` at its
/// pose; `sparse_points` of them are kept as the learned-sampler input.
SynthesizedCloud synthesize_cloud(const Scene& scene, const Cuboid& object, Eigen::Index points, Seed seed,
                                  Eigen::Index sparse_points = 100);

/// Per-point Gaussian displacement along the generating camera's ray with
/// sigma = a + b * d^2, d the distance to that camera.
Cloud add_depth_noise(const Cloud& cloud, const std::vector<int>& camera, const Scene& scene, double a, double b,
                      Seed seed);
/// Noisy copy of both the dense and sparse clouds.
SynthesizedCloud add_depth_noise(const SynthesizedCloud& cloud, const Scene& scene, double a, double b, Seed seed);

// ---- execution and metrics --------------------------------------------------

struct OrientationError {
  double loss;   // 1 - <qa, qb>^2, in [0, 1]
  double angle;  // radians, in [0, pi]
};

OrientationError orientation_error(const Quat& qa, const Quat& qb);

/// Snaps a pose to the nearest stable pose when the resting face is within
/// `max_tilt` of flat; returns it unchanged otherwise.
Transform settle(const Cuboid& cuboid, const Transform& pose, double table_z, double max_tilt);

struct ExecutionOptions {
  bool settle = false;
  double settle_max_tilt = 5.0 * std::numbers::pi / 180.0;
};

/// Idealized quasi-static execution: each subgoal is applied to the pose in order.
Transform execute_plan(const Plan& plan, const Scene& scene, const Cuboid& object, const ExecutionOptions& options = {});

// ---- training data ------------------------------------------------------------

struct TrainingSample {
  SkillType skill;
  Cloud cloud;
  Transform subgoal;
  ContactPose contact;
  Mask mask;
  double lift = 0.0;
};

struct TrainingData {
  std::vector<TrainingSample> samples;
  long attempts = 0;
};

/// Mask label: points within `threshold` of the table after the subgoal.
Mask contact_mask(const Cloud& cloud, const Transform& subgoal, double table_z, double threshold = 0.01);

TrainingData generate_training_data(int n_objects, int n_samples, SkillType skill, const Scene& scene, Seed seed,
                                    const PathOptions& path = {});

SkillParams to_skill_params(const TrainingSample& s);

// ---- evaluation -----------------------------------------------------------------

struct NoiseModel {
  double a = 0.0;
  double b = 0.0;
  bool active() const { return a > 0.0 || b > 0.0; }
};

struct EvaluationOptions {
  Eigen::Index dense_points = 1500;
  Eigen::Index sparse_points = 100;
  NoiseModel noise;
  ExecutionOptions execution;
  double cuboid_min = 0.025;
  double cuboid_max = 0.07;
  /// Sampler attempts per step while building a task's witness plan.
  int witness_attempts = 400;
};

struct TrialReport {
  std::size_t index = 0;
  std::string skeleton;
  int object = 0;
  int start_face = 0;
  bool found = false;
  bool success = false;
  bool recheck_passed = false;
  double position_error = 0.0;
  double orientation_loss = 0.0;
  double orientation_angle = 0.0;
  long samples_drawn = 0;
  long feasibility_checks = 0;
  std::string failure_category;
  /// Wall-clock planning time; kept out of the deterministic records.
  double planning_time = 0.0;
};

struct SkeletonSummary {
  std::string skeleton;
  long trials = 0;
  long found = 0;
  long successes = 0;
  double success_rate = 0.0;
  double mean_position_error = 0.0;   // over successes
  double mean_orientation_angle = 0.0;
  double mean_orientation_loss = 0.0;
  double mean_planning_time = 0.0;    // over found plans
  double mean_samples = 0.0;
  std::map<std::string, long> failures;
};

struct EvaluationReport {
  std::vector<TrialReport> trials;
  std::vector<SkeletonSummary> summaries;
  NoiseModel noise;
};

/// A generated task: object, start pose, goal transform and the witness
/// plan it was built from (never shown to the planner).
struct Task {
  Cuboid object;
  Transform start;
  Transform t_des;
  std::vector<SkillParams> witness;
};

/// Builds a solvable task for `skeleton` by chaining feasible baseline
/// samples from a stable start pose. Returns nothing if no witness was found.
std::optional<Task> generate_task(const Cuboid& object, const PlanSkeleton& skeleton, const Scene& scene, Seed seed,
                                  const EvaluationOptions& options, std::optional<int> start_face = std::nullopt);

/// Runs the planner on one task and scores it.
TrialReport run_trial(const Task& task, const PlanSkeleton& skeleton, const SkillSampler& sampler,
                      const PlannerConfig& cfg, const Scene& scene, Seed seed, const EvaluationOptions& options);

/// Multi-step protocol: objects are cycled over `trials_per_skeleton`
/// trials of each skeleton; every trial derives its own seed stream.
EvaluationReport evaluate_multistep(int n_objects, const std::vector<PlanSkeleton>& skeletons,
                                    int trials_per_skeleton, const SkillSampler& sampler, const PlannerConfig& cfg,
                                    const Scene& scene, Seed seed, const EvaluationOptions& options = {});

/// Single-step protocol: every object in each of its six stable poses.
EvaluationReport evaluate_single_step(int n_objects, const std::vector<SkillType>& skills,
                                      const SkillSampler& sampler, const PlannerConfig& cfg, const Scene& scene,
                                      Seed seed, const EvaluationOptions& options = {});

std::vector<SkeletonSummary> summarize(const std::vector<TrialReport>& trials);

}  // namespace rpo
