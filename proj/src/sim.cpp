#include "rpo/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rpo {

namespace {

constexpr double kPi = std::numbers::pi;

int axis_of(int face) { return face / 2; }
double sign_of(int face) { return face % 2 == 0 ? 1.0 : -1.0; }

Rect shrink(const Rect& r, double m) {
  Rect out{r.x_min + m, r.x_max - m, r.y_min + m, r.y_max - m};
  if (out.x_min > out.x_max) out.x_min = out.x_max = (r.x_min + r.x_max) / 2;
  if (out.y_min > out.y_max) out.y_min = out.y_max = (r.y_min + r.y_max) / 2;
  return out;
}

std::vector<Eigen::Index> sample_indices(Eigen::Index total, Eigen::Index n, Seed seed) {
  Rng rng = make_rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (total >= n) {
      std::uniform_int_distribution<Eigen::Index> d(i, total - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(d(rng))]);
      out.push_back(idx[static_cast<std::size_t>(i)]);
    } else {
      out.push_back(std::uniform_int_distribution<Eigen::Index>(0, total - 1)(rng));
    }
  }
  return out;
}

/// Palm front in the palm plane with negative world z (horizontal fallback).
Vec3 downward_front(const Vec3& m, Rng& rng) {
  Vec3 t1 = -Vec3::UnitZ() + m.z() * m;
  if (t1.norm() < 1e-6) {
    const double a = uniform(rng, -kPi, kPi);
    return {std::cos(a), std::sin(a), 0.0};
  }
  t1.normalize();
  const double theta = uniform(rng, -kPi / 2, kPi / 2);
  return std::cos(theta) * t1 + std::sin(theta) * m.cross(t1);
}

}  // namespace

Vec3 face_normal(int face) {
  if (face < 0 || face > 5) throw std::invalid_argument("face index must be in [0, 5]");
  Vec3 n = Vec3::Zero();
  n[axis_of(face)] = sign_of(face);
  return n;
}

Cuboid random_cuboid(Seed seed, double lo, double hi) {
  if (!(lo > 0.0 && hi >= lo)) throw std::invalid_argument("random_cuboid: bad extent range");
  Rng rng = make_rng(seed);
  Cuboid c;
  for (int i = 0; i < 3; ++i) c.half_extents[i] = uniform(rng, lo, hi);
  return c;
}

Quat face_down_rotation(int face) {
  switch (face) {
    case 0: return Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitY()));
    case 1: return Quat(Eigen::AngleAxisd(-kPi / 2, Vec3::UnitY()));
    case 2: return Quat(Eigen::AngleAxisd(-kPi / 2, Vec3::UnitX()));
    case 3: return Quat(Eigen::AngleAxisd(kPi / 2, Vec3::UnitX()));
    case 4: return Quat(Eigen::AngleAxisd(kPi, Vec3::UnitX()));
    case 5: return Quat::Identity();
    default: throw std::invalid_argument("face index must be in [0, 5]");
  }
}

Transform stable_pose(const Cuboid& cuboid, int face, double yaw, double x, double y, double table_z) {
  const Quat q = Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())) * face_down_rotation(face);
  return Transform(q, Vec3(x, y, table_z + cuboid.half_extents[axis_of(face)]));
}

Transform sample_stable_pose(const Cuboid& cuboid, const Scene& scene, Seed seed, const std::optional<Rect>& region) {
  Rng rng = make_rng(seed);
  const int face = std::uniform_int_distribution<int>(0, 5)(rng);
  const double yaw = uniform(rng, -kPi, kPi);
  const Rect r = region.value_or(shrink(scene.table(), cuboid.half_extents.norm()));
  const double x = uniform(rng, r.x_min, std::nextafter(r.x_max, r.x_max + 1.0));
  const double y = uniform(rng, r.y_min, std::nextafter(r.y_max, r.y_max + 1.0));
  return stable_pose(cuboid, face, yaw, x, y, scene.table_z());
}

std::pair<int, double> resting_face(const Transform& pose) {
  int best = 0;
  double best_z = 2.0;
  for (int f = 0; f < 6; ++f) {
    const double z = (pose.rotation() * face_normal(f)).z();
    if (z < best_z) {
      best_z = z;
      best = f;
    }
  }
  return {best, std::acos(std::clamp(-best_z, -1.0, 1.0))};
}

std::vector<Vec3> cuboid_corners(const Cuboid& cuboid, const Transform& pose) {
  std::vector<Vec3> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 s((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    out.push_back(pose * Vec3(s.cwiseProduct(cuboid.half_extents)));
  }
  return out;
}

SynthesizedCloud synthesize_cloud(const Scene& scene, const Cuboid& object, Eigen::Index points, Seed seed,
                                  Eigen::Index sparse_points) {
  if (points < 100) throw std::invalid_argument("synthesize_cloud: at least 100 points required");
  if (scene.cameras.empty()) throw std::invalid_argument("synthesize_cloud: scene has no cameras");
  const Mat3 r = object.pose.rotation_matrix();
  const Vec3& h = object.half_extents;

  struct Face {
    int face;
    double area;
    std::vector<int> cameras;
  };
  std::vector<Face> visible;
  for (int f = 0; f < 6; ++f) {
    const int a = axis_of(f);
    const Vec3 n = r * face_normal(f);
    const Vec3 c = object.pose * Vec3(face_normal(f).cwiseProduct(h));
    Face face{f, 4.0 * h[(a + 1) % 3] * h[(a + 2) % 3], {}};
    for (std::size_t k = 0; k < scene.cameras.size(); ++k) {
      if (n.dot(scene.cameras[k].position - c) > 0.0) face.cameras.push_back(static_cast<int>(k));
    }
    if (!face.cameras.empty()) visible.push_back(std::move(face));
  }
  if (visible.empty()) throw std::runtime_error("synthesize_cloud: no face is visible");

  std::vector<double> weights;
  for (const Face& f : visible) weights.push_back(f.area);
  Rng rng = make_rng(seed.derive("surface"));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

  Matrix3X<double> pts(3, points);
  std::vector<int> camera(static_cast<std::size_t>(points));
  for (Eigen::Index i = 0; i < points; ++i) {
    const Face& f = visible[pick(rng)];
    const int a = axis_of(f.face);
    Vec3 local;
    local[a] = sign_of(f.face) * h[a];
    local[(a + 1) % 3] = uniform(rng, -h[(a + 1) % 3], h[(a + 1) % 3]);
    local[(a + 2) % 3] = uniform(rng, -h[(a + 2) % 3], h[(a + 2) % 3]);
    const Vec3 p = object.pose * local;
    pts.col(i) = p;
    int best = f.cameras.front();
    for (int k : f.cameras) {
      if ((scene.cameras[static_cast<std::size_t>(k)].position - p).norm() <
          (scene.cameras[static_cast<std::size_t>(best)].position - p).norm()) {
        best = k;
      }
    }
    camera[static_cast<std::size_t>(i)] = best;
  }
  Cloud dense(std::move(pts));
  auto idx = sample_indices(points, sparse_points, seed.derive("downsample"));
  Cloud sparse = dense.select(idx);
  return {std::move(dense), std::move(camera), std::move(sparse), std::move(idx)};
}

Cloud add_depth_noise(const Cloud& cloud, const std::vector<int>& camera, const Scene& scene, double a, double b,
                      Seed seed) {
  if (a < 0.0 || b < 0.0) throw std::invalid_argument("add_depth_noise: a and b must be non-negative");
  if (static_cast<Eigen::Index>(camera.size()) != cloud.size()) {
    throw std::invalid_argument("add_depth_noise: one camera index per point required");
  }
  if (a == 0.0 && b == 0.0) return cloud;
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix3X<double> pts = cloud.points();
  for (Eigen::Index i = 0; i < pts.cols(); ++i) {
    const Vec3& cam = scene.cameras.at(static_cast<std::size_t>(camera[static_cast<std::size_t>(i)])).position;
    const Vec3 ray = pts.col(i) - cam;
    const double d = ray.norm();
    const double sigma = a + b * d * d;
    pts.col(i) += (sigma * normal(rng)) * (ray / d);
  }
  return Cloud(std::move(pts), std::nullopt, cloud.maybe_mask());
}

SynthesizedCloud add_depth_noise(const SynthesizedCloud& cloud, const Scene& scene, double a, double b, Seed seed) {
  SynthesizedCloud out = cloud;
  out.dense = add_depth_noise(cloud.dense, cloud.camera, scene, a, b, seed);
  out.sparse = out.dense.select(out.sparse_indices);
  return out;
}

OrientationError orientation_error(const Quat& qa, const Quat& qb) {
  const double dot = std::min(1.0, std::abs(qa.coeffs().dot(qb.coeffs())));
  return {1.0 - dot * dot, 2.0 * std::acos(dot)};
}

Transform settle(const Cuboid& cuboid, const Transform& pose, double table_z, double max_tilt) {
  const auto [face, tilt] = resting_face(pose);
  if (tilt > max_tilt) return pose;
  const Vec3 n = pose.rotation() * face_normal(face);
  const Quat q = Quat::FromTwoVectors(n, -Vec3::UnitZ()) * pose.rotation();
  Transform out(q, Vec3(pose.translation().x(), pose.translation().y(), table_z + cuboid.half_extents[axis_of(face)]));
  // remove round-off so the face is exactly flat
  const Vec3 n2 = out.rotation() * face_normal(face);
  if (n2.z() != -1.0) {
    out = Transform(Quat::FromTwoVectors(n2, -Vec3::UnitZ()) * out.rotation(), out.translation());
  }
  return out;
}

Transform execute_plan(const Plan& plan, const Scene& scene, const Cuboid& object, const ExecutionOptions& options) {
  Transform pose = object.pose;
  for (const SkillParams& p : plan.params) pose = p.subgoal * pose;
  if (options.settle) pose = settle(object, pose, scene.table_z(), options.settle_max_tilt);
  return pose;
}

Mask contact_mask(const Cloud& cloud, const Transform& subgoal, double table_z, double threshold) {
  const Cloud moved = apply(subgoal, cloud);
  Mask m(static_cast<std::size_t>(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.size(); ++i) m[static_cast<std::size_t>(i)] = moved.point(i).z() - table_z < threshold;
  return m;
}

namespace {

/// Body-frame point on `face`, uniform over the face.
Vec3 point_on_face(const Cuboid& c, int face, Rng& rng) {
  const int a = axis_of(face);
  Vec3 local;
  local[a] = sign_of(face) * c.half_extents[a];
  local[(a + 1) % 3] = uniform(rng, -c.half_extents[(a + 1) % 3], c.half_extents[(a + 1) % 3]);
  local[(a + 2) % 3] = uniform(rng, -c.half_extents[(a + 2) % 3], c.half_extents[(a + 2) % 3]);
  return local;
}

std::optional<ContactPose> mesh_contact(SkillType skill, const Cuboid& c, int down_face, int goal_down_face,
                                        const WorkspaceModel& ws, Rng& rng) {
  const Transform& pose = c.pose;
  const Mat3 r = pose.rotation_matrix();
  ContactPose out;
  if (is_bimanual(skill)) {
    std::vector<int> axes;
    for (int a = 0; a < 3; ++a) {
      if (a != axis_of(down_face) && a != axis_of(goal_down_face)) axes.push_back(a);
    }
    if (axes.empty()) return std::nullopt;
    const int a = axes[std::uniform_int_distribution<std::size_t>(0, axes.size() - 1)(rng)];
    for (int attempt = 0; attempt < 20; ++attempt) {
      const Vec3 l1 = point_on_face(c, 2 * a, rng);
      Vec3 l2 = l1;
      l2[a] = -l1[a];
      const Vec3 p1 = pose * l1;
      const Vec3 p2 = pose * l2;
      if (std::min(p1.z(), p2.z()) < ws.table_z + 0.015) continue;
      const Vec3 m1 = -(r * face_normal(2 * a));
      const Vec3 m2 = -m1;
      const bool first_left = p1.x() <= p2.x();
      const Transform t1 = palm_frame(p1, m1, downward_front(m1, rng));
      const Transform t2 = palm_frame(p2, m2, downward_front(m2, rng));
      out.left = first_left ? t1 : t2;
      out.right = first_left ? t2 : t1;
      return out;
    }
    return std::nullopt;
  }
  int face = down_face ^ 1;  // top
  if (is_push(skill)) {
    std::vector<int> sides;
    for (int f = 0; f < 6; ++f) {
      if (axis_of(f) != axis_of(down_face)) sides.push_back(f);
    }
    face = sides[std::uniform_int_distribution<std::size_t>(0, sides.size() - 1)(rng)];
  }
  const Vec3 p = pose * point_on_face(c, face, rng);
  const Vec3 m = -(r * face_normal(face));
  Transform palm;
  if (is_pull(skill)) {
    const double ang = uniform(rng, -kPi, kPi);
    palm = palm_frame(p, m, Vec3(std::cos(ang), std::sin(ang), 0.0));
  } else {
    palm = palm_frame(p, m, downward_front(m, rng));
  }
  const double dl = (p - ws.arm(Arm::Left).shoulder).head<2>().norm();
  const double dr = (p - ws.arm(Arm::Right).shoulder).head<2>().norm();
  out.palm(dl < dr ? Arm::Left : Arm::Right) = palm;
  return out;
}

bool within(const Transform& a, const Transform& b, double pos_tol, double ang_tol) {
  return translation_distance(a, b) <= pos_tol && orientation_error(a.rotation(), b.rotation()).angle <= ang_tol;
}

}  // namespace

TrainingData generate_training_data(int n_objects, int n_samples, SkillType skill, const Scene& scene, Seed seed,
                                    const PathOptions& path) {
  if (n_objects < 1 || n_samples < 1) throw std::invalid_argument("generate_training_data: counts must be positive");
  const WorkspaceModel& ws = scene.workspace;
  std::vector<Cuboid> objects;
  for (int i = 0; i < n_objects; ++i) objects.push_back(random_cuboid(seed.derive("object", static_cast<std::uint64_t>(i))));

  TrainingData data;
  for (int j = 0; j < n_samples; ++j) {
    ++data.attempts;
    const Seed s = seed.derive("sample", static_cast<std::uint64_t>(j));
    Rng rng = make_rng(s);
    Cuboid obj = objects[static_cast<std::size_t>(j % n_objects)];
    const Rect& region = ws.grasp_region;
    const int down = std::uniform_int_distribution<int>(0, 5)(rng);
    obj.pose = stable_pose(obj, down, uniform(rng, -kPi, kPi), uniform(rng, region.x_min, region.x_max),
                           uniform(rng, region.y_min, region.y_max), ws.table_z);

    int goal_down = down;
    Transform goal;
    if (skill == SkillType::GraspReorient) {
      goal_down = (down + std::uniform_int_distribution<int>(1, 5)(rng)) % 6;
      goal = stable_pose(obj, goal_down, uniform(rng, -kPi, kPi), uniform(rng, region.x_min, region.x_max),
                         uniform(rng, region.y_min, region.y_max), ws.table_z);
    } else {
      const Rect& to = skill == SkillType::PickPlace ? region : shrink(ws.table, obj.half_extents.norm());
      double dx = uniform(rng, to.x_min, to.x_max) - obj.pose.translation().x();
      double dy = uniform(rng, to.y_min, to.y_max) - obj.pose.translation().y();
      double yaw = uniform(rng, -kPi, kPi);
      if (is_push(skill)) {
        dx *= 0.3;
        dy *= 0.3;
        yaw *= 0.2;
      }
      const Transform move = Transform::FromTranslation(Vec3(dx, dy, 0.0)) *
                             Transform::RotationAbout(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), obj.pose.translation());
      goal = move * obj.pose;
    }
    Transform subgoal = goal * invert(obj.pose);
    if (is_planar(skill)) subgoal = project_se2(subgoal);

    const auto contact = mesh_contact(skill, obj, down, goal_down, ws, rng);
    if (!contact) continue;
    const SkillType used = is_planar(skill) ? with_arm(skill, contact->left ? Arm::Left : Arm::Right) : skill;
    const SynthesizedCloud synth = synthesize_cloud(scene, obj, 1000, s.derive("cloud"));
    const Cloud& cloud = synth.sparse;
    if (!satisfies_preconditions(skill, cloud, ws)) continue;
    PathOptions popts = path;
    popts.lift_height = is_bimanual(skill) ? required_lift(subgoal, cloud, object_floor(cloud, ws),
                                                            path.waypoints_per_phase, ws.penetration_tolerance)
                                           : 0.0;
    if (!feasible_motion(generate_path(used, *contact, subgoal, popts), cloud, subgoal, ws)) continue;

    Plan one;
    one.params.push_back({used, subgoal, *contact, std::nullopt});
    if (!within(execute_plan(one, scene, obj), goal, 0.03, 20.0 * kPi / 180.0)) continue;

    data.samples.push_back({used, cloud, subgoal, *contact, contact_mask(cloud, subgoal, ws.table_z),
                            popts.lift_height});
  }
  return data;
}

SkillParams to_skill_params(const TrainingSample& s) { return {s.skill, s.subgoal, s.contact, s.mask}; }

std::optional<Task> generate_task(const Cuboid& object, const PlanSkeleton& skeleton, const Scene& scene, Seed seed,
                                  const EvaluationOptions& options, std::optional<int> start_face) {
  const WorkspaceModel& ws = scene.workspace;
  Rng rng = make_rng(seed);
  Task task{object, Transform(), Transform(), {}};
  const Rect& region = ws.grasp_region;
  const int face = start_face.value_or(std::uniform_int_distribution<int>(0, 5)(rng));
  task.start = stable_pose(object, face, uniform(rng, -kPi, kPi), uniform(rng, region.x_min, region.x_max),
                           uniform(rng, region.y_min, region.y_max), ws.table_z);
  task.object.pose = task.start;

  const BaselineSampler sampler;
  const SynthesizedCloud synth = synthesize_cloud(scene, task.object, options.dense_points, seed.derive("cloud"),
                                                  options.sparse_points);
  Cloud cloud = prepare_observation(synth.dense, scene);
  std::vector<Plane> planes = sampler.segment(cloud, seed.derive("segment"));
  PathOptions popts;

  for (std::size_t t = 0; t < skeleton.size(); ++t) {
    const SkillType skill = skeleton.steps[t];
    if (!satisfies_preconditions(skill, cloud, ws)) return std::nullopt;
    bool accepted = false;
    for (int k = 0; k < options.witness_attempts && !accepted; ++k) {
      SkillParams params;
      SampleHints hints;
      hints.planes = &planes;
      try {
        params = sampler.draw(skill, cloud, scene, seed.derive("witness", t * 100000 + static_cast<std::uint64_t>(k)),
                              hints);
      } catch (const SamplerError&) {
        continue;
      }
      const Cloud next = apply(params.subgoal, cloud);
      if (t + 1 < skeleton.size() && !satisfies_preconditions(skeleton.steps[t + 1], next, ws)) continue;
      popts.lift_height = is_bimanual(params.skill)
                              ? required_lift(params.subgoal, cloud, object_floor(cloud, ws),
                                              popts.waypoints_per_phase, ws.penetration_tolerance)
                              : 0.0;
      if (!feasible_motion(generate_path(params.skill, params.contact, params.subgoal, popts), cloud, params.subgoal,
                           ws)) {
        continue;
      }
      task.t_des = params.subgoal * task.t_des;
      for (Plane& p : planes) p = transform_plane(params.subgoal, p);
      cloud = next;
      task.witness.push_back(std::move(params));
      accepted = true;
    }
    if (!accepted) return std::nullopt;
  }
  return task;
}

TrialReport run_trial(const Task& task, const PlanSkeleton& skeleton, const SkillSampler& sampler,
                      const PlannerConfig& cfg, const Scene& scene, Seed seed, const EvaluationOptions& options) {
  TrialReport rep;
  rep.skeleton = skeleton.letters();
  rep.start_face = resting_face(task.start).first;
  Cuboid obj = task.object;
  obj.pose = task.start;

  SynthesizedCloud synth = synthesize_cloud(scene, obj, options.dense_points, seed.derive("cloud"), options.sparse_points);
  if (options.noise.active()) synth = add_depth_noise(synth, scene, options.noise.a, options.noise.b, seed.derive("noise"));

  PlannerConfig c = cfg;
  c.seed = seed.derive("planner");
  const PlanResult result = plan(synth.dense, task.t_des, skeleton, sampler, scene, c);
  rep.found = result.found();
  rep.samples_drawn = result.stats.samples_drawn;
  rep.feasibility_checks = result.stats.feasibility_checks;
  rep.planning_time = result.stats.elapsed_seconds;
  rep.failure_category = result.failure_category;
  if (result.plan) {
    const Transform final_pose = execute_plan(*result.plan, scene, obj, options.execution);
    const Transform goal = task.t_des * task.start;
    rep.position_error = translation_distance(final_pose, goal);
    const OrientationError oe = orientation_error(final_pose.rotation(), goal.rotation());
    rep.orientation_loss = oe.loss;
    rep.orientation_angle = oe.angle;
    rep.recheck_passed = recheck_plan(*result.plan, scene.workspace, cfg.path);
    rep.success = rep.position_error <= cfg.position_tolerance && rep.orientation_angle <= cfg.orientation_tolerance;
    if (!rep.success) rep.failure_category = "accuracy";
  }
  return rep;
}

namespace {

std::optional<Task> task_with_retries(const Cuboid& object, const PlanSkeleton& skeleton, const Scene& scene, Seed seed,
                                      const EvaluationOptions& options, std::optional<int> face) {
  for (std::uint64_t r = 0; r < 10; ++r) {
    if (auto t = generate_task(object, skeleton, scene, seed.derive("task", r), options, face)) return t;
  }
  return std::nullopt;
}

TrialReport no_task_report(const PlanSkeleton& skeleton) {
  TrialReport rep;
  rep.skeleton = skeleton.letters();
  rep.failure_category = "no_task";
  return rep;
}

}  // namespace

EvaluationReport evaluate_multistep(int n_objects, const std::vector<PlanSkeleton>& skeletons, int trials_per_skeleton,
                                    const SkillSampler& sampler, const PlannerConfig& cfg, const Scene& scene, Seed seed,
                                    const EvaluationOptions& options) {
  if (n_objects < 1 || trials_per_skeleton < 1 || skeletons.empty()) {
    throw std::invalid_argument("evaluate_multistep: counts must be positive");
  }
  std::vector<Cuboid> objects;
  for (int i = 0; i < n_objects; ++i) {
    objects.push_back(random_cuboid(seed.derive("object", static_cast<std::uint64_t>(i)), options.cuboid_min,
                                    options.cuboid_max));
  }
  EvaluationReport report;
  report.noise = options.noise;
  std::size_t index = 0;
  for (const PlanSkeleton& sk : skeletons) {
    for (int j = 0; j < trials_per_skeleton; ++j, ++index) {
      const Seed ts = seed.derive("trial", index);
      const int oi = j % n_objects;
      const auto task = task_with_retries(objects[static_cast<std::size_t>(oi)], sk, scene, ts, options, std::nullopt);
      TrialReport rep = task ? run_trial(*task, sk, sampler, cfg, scene, ts, options) : no_task_report(sk);
      rep.index = index;
      rep.object = oi;
      report.trials.push_back(std::move(rep));
    }
  }
  report.summaries = summarize(report.trials);
  return report;
}

EvaluationReport evaluate_single_step(int n_objects, const std::vector<SkillType>& skills, const SkillSampler& sampler,
                                      const PlannerConfig& cfg, const Scene& scene, Seed seed,
                                      const EvaluationOptions& options) {
  if (n_objects < 1 || skills.empty()) throw std::invalid_argument("evaluate_single_step: counts must be positive");
  EvaluationReport report;
  report.noise = options.noise;
  std::size_t index = 0;
  for (SkillType skill : skills) {
    const PlanSkeleton sk{{skill}};
    for (int i = 0; i < n_objects; ++i) {
      const Cuboid obj = random_cuboid(seed.derive("object", static_cast<std::uint64_t>(i)), options.cuboid_min,
                                       options.cuboid_max);
      for (int face = 0; face < 6; ++face, ++index) {
        const Seed ts = seed.derive("trial", index);
        const auto task = task_with_retries(obj, sk, scene, ts, options, face);
        TrialReport rep = task ? run_trial(*task, sk, sampler, cfg, scene, ts, options) : no_task_report(sk);
        rep.index = index;
        rep.object = i;
        rep.start_face = face;
        report.trials.push_back(std::move(rep));
      }
    }
  }
  report.summaries = summarize(report.trials);
  return report;
}

std::vector<SkeletonSummary> summarize(const std::vector<TrialReport>& trials) {
  std::vector<SkeletonSummary> out;
  for (const TrialReport& t : trials) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SkeletonSummary& s) { return s.skeleton == t.skeleton; });
    if (it == out.end()) {
      SkeletonSummary fresh;
      fresh.skeleton = t.skeleton;
      out.push_back(std::move(fresh));
      it = out.end() - 1;
    }
    SkeletonSummary& s = *it;
    ++s.trials;
    if (t.found) {
      ++s.found;
      s.mean_planning_time += t.planning_time;
    }
    if (t.success) {
      ++s.successes;
      s.mean_position_error += t.position_error;
      s.mean_orientation_angle += t.orientation_angle;
      s.mean_orientation_loss += t.orientation_loss;
    } else {
      ++s.failures[t.failure_category];
    }
    s.mean_samples += static_cast<double>(t.samples_drawn);
  }
  for (SkeletonSummary& s : out) {
    s.success_rate = static_cast<double>(s.successes) / static_cast<double>(s.trials);
    if (s.successes > 0) {
      s.mean_position_error /= static_cast<double>(s.successes);
      s.mean_orientation_angle /= static_cast<double>(s.successes);
      s.mean_orientation_loss /= static_cast<double>(s.successes);
    }
    if (s.found > 0) s.mean_planning_time /= static_cast<double>(s.found);
    s.mean_samples /= static_cast<double>(s.trials);
  }
  return out;
}

}  // namespace rpo
