// Buffer-based multi-step sampling planner over a fixed plan skeleton.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rpo/feasibility.hpp"
#include "rpo/samplers.hpp"
#include "rpo/scene.hpp"

namespace rpo {

/// Skeleton letters: p = pull, g = grasp-reorient, s = push, k = pick-place.
struct PlanSkeleton {
  std::vector<SkillType> steps;

  /// Throws SkeletonError naming the first bad character.
  static PlanSkeleton Parse(std::string_view letters);
  std::string letters() const;
  std::size_t size() const { return steps.size(); }
};

struct SkeletonError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

char skill_letter(SkillType s);

struct NodeRef {
  std::size_t step;  // buffer the node lives in (0 holds the root)
  std::size_t index;
};

struct PlanNode {
  Cloud cloud;
  Transform subgoal;
  ContactPose contact;
  SkillType skill = SkillType::PullRight;
  std::optional<Mask> mask;
  double lift = 0.0;
  std::optional<NodeRef> parent;  // empty for the root
  /// Product of the subgoals from the root to this node.
  Transform accumulated;
  std::vector<Plane> planes;
};

using Buffers = std::vector<std::vector<PlanNode>>;

struct Plan {
  std::vector<SkillParams> params;
  /// Observed cloud followed by the predicted cloud after each step.
  std::vector<Cloud> predicted_clouds;
  std::vector<double> lift_heights;
  Transform total_transform;

  std::size_t size() const { return params.size(); }
};

struct PlannerConfig {
  int k_max = 10;
  double time_budget = 300.0;
  double position_tolerance = 0.03;
  double orientation_tolerance = 20.0 * std::numbers::pi / 180.0;
  Seed seed{0};
  /// Optional cap on total sampler draws; failure once reached.
  std::optional<long> max_samples;
  PathOptions path;

  void validate() const;
};

struct Visit {
  int step;
  int draws;
  bool skipped;  // empty buffer or precondition failure
};

struct PlannerStats {
  long samples_drawn = 0;
  long feasibility_checks = 0;
  long sweeps = 0;
  std::vector<std::size_t> buffer_sizes;
  std::map<std::string, long> failures;
  /// Scheduler trace, truncated after kMaxVisits entries.
  std::vector<Visit> visits;
  long visit_count = 0;
  double elapsed_seconds = 0.0;
  bool timed_out = false;
  bool sample_cap_reached = false;

  static constexpr std::size_t kMaxVisits = 100000;
};

struct PlanResult {
  std::optional<Plan> plan;
  PlannerStats stats;
  /// "" on success, otherwise timeout, precondition, feasibility or registration.
  std::string failure_category;

  bool found() const { return plan.has_value(); }
};

/// Final-step subgoal: t_des composed with the inverse of the ancestry product.
Transform required_final_transform(const std::vector<Transform>& ancestry_subgoals, const Transform& t_des);

/// Walks parent links from `final_node` to the root. Throws
/// std::logic_error("corrupt tree") on a broken link.
Plan extract_plan(const NodeRef& final_node, const Buffers& buffers);

/// Observation with normals: PCA normals oriented away from the centroid.
Cloud prepare_observation(const Cloud& observed, const Scene& scene);

/// `dense` (root frame) is used for contact refinement; defaults to `observed`.
PlanResult plan(const Cloud& observed, const Transform& t_des, const PlanSkeleton& skeleton,
                const SkillSampler& sampler, const Scene& scene, const PlannerConfig& cfg,
                const Cloud* dense = nullptr);

/// Re-runs preconditions and motion feasibility on every step of a plan.
bool recheck_plan(const Plan& plan, const WorkspaceModel& ws, const PathOptions& path_options = {});

}  // namespace rpo
