#include "rpo/planner.hpp"

#include <chrono>

namespace rpo {

PlanSkeleton PlanSkeleton::Parse(std::string_view letters) {
  if (letters.empty()) throw SkeletonError("skeleton must have at least one step");
  PlanSkeleton s;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    switch (letters[i]) {
      case 'p': s.steps.push_back(SkillType::PullRight); break;
      case 'g': s.steps.push_back(SkillType::GraspReorient); break;
      case 's': s.steps.push_back(SkillType::PushRight); break;
      case 'k': s.steps.push_back(SkillType::PickPlace); break;
      default:
        throw SkeletonError("invalid skeleton character '" + std::string(1, letters[i]) + "' at position " +
                            std::to_string(i) + " (allowed: p, g, s, k)");
    }
  }
  return s;
}

char skill_letter(SkillType s) {
  if (is_pull(s)) return 'p';
  if (is_push(s)) return 's';
  return s == SkillType::PickPlace ? 'k' : 'g';
}

std::string PlanSkeleton::letters() const {
  std::string out;
  for (SkillType s : steps) out += skill_letter(s);
  return out;
}

void PlannerConfig::validate() const {
  if (k_max < 1) throw std::invalid_argument("planner: k_max must be positive");
  if (!(time_budget > 0.0)) throw std::invalid_argument("planner: time_budget must be positive");
  if (!(position_tolerance > 0.0) || !(orientation_tolerance > 0.0)) {
    throw std::invalid_argument("planner: success tolerances must be positive");
  }
  if (max_samples && *max_samples < 1) throw std::invalid_argument("planner: max_samples must be positive");
}

Transform required_final_transform(const std::vector<Transform>& ancestry_subgoals, const Transform& t_des) {
  Transform product;
  for (const Transform& t : ancestry_subgoals) product = t * product;
  return t_des * invert(product);
}

Plan extract_plan(const NodeRef& final_node, const Buffers& buffers) {
  auto at = [&](const NodeRef& r) -> const PlanNode& {
    if (r.step >= buffers.size() || r.index >= buffers[r.step].size()) throw std::logic_error("corrupt tree");
    return buffers[r.step][r.index];
  };
  std::vector<const PlanNode*> chain;
  NodeRef ref = final_node;
  const PlanNode* node = &at(ref);
  while (node->parent) {
    chain.push_back(node);
    const NodeRef parent = *node->parent;
    if (parent.step + 1 != ref.step) throw std::logic_error("corrupt tree");
    ref = parent;
    node = &at(ref);
  }
  if (ref.step != 0) throw std::logic_error("corrupt tree");

  Plan plan;
  plan.predicted_clouds.push_back(node->cloud);
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
    const PlanNode& n = **it;
    plan.params.push_back({n.skill, n.subgoal, n.contact, n.mask});
    plan.predicted_clouds.push_back(n.cloud);
    plan.lift_heights.push_back(n.lift);
    plan.total_transform = n.subgoal * plan.total_transform;
  }
  return plan;
}

Cloud prepare_observation(const Cloud& observed, const Scene& scene) {
  if (observed.has_normals()) return observed;
  const auto views = scene.camera_positions();
  const Eigen::Index k = std::min(kNormalNeighbors, observed.size());
  return orient_normals_outward(estimate_normals(observed, k, views));
}

namespace {

ContactPose move_contact(const Transform& t, const ContactPose& c) {
  ContactPose out;
  if (c.left) out.left = t * *c.left;
  if (c.right) out.right = t * *c.right;
  return out;
}

std::string category_of(const std::map<std::string, long>& failures) {
  long precondition = 0;
  long registration = 0;
  long feasibility = 0;
  for (const auto& [k, v] : failures) {
    if (k == "precondition") {
      precondition += v;
    } else if (k == "registration") {
      registration += v;
    } else {
      feasibility += v;
    }
  }
  if (precondition > registration && precondition > feasibility) return "precondition";
  if (registration > feasibility) return "registration";
  return "feasibility";
}

}  // namespace

PlanResult plan(const Cloud& observed, const Transform& t_des, const PlanSkeleton& skeleton,
                const SkillSampler& sampler, const Scene& scene, const PlannerConfig& cfg, const Cloud* dense) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };

  if (skeleton.steps.empty()) throw std::invalid_argument("planner: empty skeleton");
  cfg.validate();
  const WorkspaceModel& ws = scene.workspace;
  const std::size_t T = skeleton.size();

  PlanResult result;
  PlannerStats& stats = result.stats;
  Buffers buffers(T + 1);
  {
    PlanNode root{prepare_observation(observed, scene), Transform(), {}, skeleton.steps[0], std::nullopt, 0.0,
                  std::nullopt, Transform(), {}};
    root.planes = sampler.segment(root.cloud, cfg.seed.derive("segment"));
    buffers[0].push_back(std::move(root));
  }
  const KdTree dense_tree(dense ? *dense : observed);
  // Preconditions and admissibility are fixed per node, so a node that fails
  // them once is never expanded; the search ends when no live node is left.
  std::vector<std::vector<char>> dead(T, std::vector<char>{});
  dead[0].push_back(0);
  long live = 1;
  auto kill = [&](std::size_t t, std::size_t idx, const char* why) {
    ++stats.failures[why];
    dead[t][idx] = 1;
    --live;
  };

  auto finish = [&](std::string category) {
    stats.elapsed_seconds = elapsed();
    for (const auto& b : buffers) stats.buffer_sizes.push_back(b.size());
    result.failure_category = std::move(category);
    return result;
  };
  auto out_of_budget = [&] {
    if (elapsed() >= cfg.time_budget) {
      stats.timed_out = true;
      return true;
    }
    if (cfg.max_samples && stats.samples_drawn >= *cfg.max_samples) {
      stats.sample_cap_reached = true;
      return true;
    }
    return false;
  };
  auto record = [&](std::size_t t, int draws, bool skipped) {
    if (stats.visits.size() < PlannerStats::kMaxVisits) stats.visits.push_back({static_cast<int>(t), draws, skipped});
    ++stats.visit_count;
  };

  for (;; ++stats.sweeps) {
    for (std::size_t t = 0; t < T; ++t) {
      if (out_of_budget()) return finish(stats.timed_out ? "timeout" : category_of(stats.failures));
      const Seed visit_seed = cfg.seed.derive("visit", static_cast<std::uint64_t>(stats.visit_count));
      if (buffers[t].empty()) {
        record(t, 0, true);
        continue;
      }
      Rng rng = make_rng(visit_seed);
      const std::size_t idx = std::uniform_int_distribution<std::size_t>(0, buffers[t].size() - 1)(rng);
      const SkillType skill = skeleton.steps[t];
      const bool final_step = t + 1 == T;
      const PlanNode& node = buffers[t][idx];

      if (dead[t][idx]) {
        record(t, 0, true);
        continue;
      }
      if (!satisfies_preconditions(skill, node.cloud, ws)) {
        kill(t, idx, "precondition");
        record(t, 0, true);
        if (live == 0) return finish(category_of(stats.failures));
        continue;
      }
      SampleHints hints;
      hints.planes = &node.planes;
      if (final_step) {
        Transform residual = t_des * invert(node.accumulated);
        if (!skill_admits(skill, residual)) {
          kill(t, idx, "admits");
          record(t, 0, true);
          if (live == 0) return finish(category_of(stats.failures));
          continue;
        }
        if (is_planar(skill)) residual = project_se2(residual);
        hints.fixed_subgoal = residual;
      }

      int draws = 0;
      bool accepted = false;
      for (int k = 0; k < cfg.k_max && !accepted; ++k) {
        if (k > 0 && out_of_budget()) break;
        ++draws;
        ++stats.samples_drawn;
        SkillParams params;
        try {
          params = sampler.draw(skill, node.cloud, scene, visit_seed.derive("draw", static_cast<std::uint64_t>(k)), hints);
        } catch (const RegistrationError&) {
          ++stats.failures["registration"];
          continue;
        } catch (const SamplerError& e) {
          ++stats.failures[std::string("sampler: ") + e.what()];
          continue;
        }
        if (!same_family(params.skill, skill)) throw std::logic_error("sampler returned a different skill");
        if (hints.fixed_subgoal) params.subgoal = *hints.fixed_subgoal;

        const Transform to_root = invert(node.accumulated);
        const RefinedContact refined = refine_contact(move_contact(to_root, params.contact), dense_tree);
        params.contact = move_contact(node.accumulated, refined.contact);

        const double lift = is_bimanual(params.skill)
                                ? required_lift(params.subgoal, node.cloud, object_floor(node.cloud, ws),
                                                cfg.path.waypoints_per_phase, ws.penetration_tolerance)
                                : 0.0;
        PathOptions popts = cfg.path;
        popts.lift_height = lift;
        PalmPath path;
        try {
          path = generate_path(params.skill, params.contact, params.subgoal, popts);
        } catch (const SkillError& e) {
          ++stats.failures[std::string("skill: ") + e.what()];
          continue;
        }
        ++stats.feasibility_checks;
        const FeasibilityReport report = check_motion(path, node.cloud, params.subgoal, ws);
        if (!report.feasible) {
          ++stats.failures[std::string(to_string(report.failure))];
          continue;
        }

        PlanNode child{apply(params.subgoal, node.cloud),
                       params.subgoal,
                       params.contact,
                       params.skill,
                       params.mask,
                       lift,
                       NodeRef{t, idx},
                       params.subgoal * node.accumulated,
                       {}};
        child.planes.reserve(node.planes.size());
        for (const Plane& p : node.planes) child.planes.push_back(transform_plane(params.subgoal, p));
        buffers[t + 1].push_back(std::move(child));
        if (t + 1 < T) {
          dead[t + 1].push_back(0);
          ++live;
        }
        accepted = true;
      }
      record(t, draws, false);
      if (accepted && final_step) {
        result.plan = extract_plan(NodeRef{T, buffers[T].size() - 1}, buffers);
        return finish("");
      }
    }
  }
}

bool recheck_plan(const Plan& plan, const WorkspaceModel& ws, const PathOptions& path_options) {
  if (plan.predicted_clouds.size() != plan.params.size() + 1) return false;
  for (std::size_t t = 0; t < plan.params.size(); ++t) {
    const SkillParams& p = plan.params[t];
    const Cloud& cloud = plan.predicted_clouds[t];
    if (!satisfies_preconditions(p.skill, cloud, ws)) return false;
    PathOptions popts = path_options;
    popts.lift_height = t < plan.lift_heights.size() ? plan.lift_heights[t] : 0.0;
    try {
      if (!feasible_motion(generate_path(p.skill, p.contact, p.subgoal, popts), cloud, p.subgoal, ws)) return false;
    } catch (const SkillError&) {
      return false;
    }
  }
  return true;
}

}  // namespace rpo
