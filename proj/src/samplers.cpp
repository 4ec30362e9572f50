#include "rpo/samplers.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace rpo {

std::vector<Plane> SkillSampler::segment(const Cloud&, Seed) const { return {}; }

namespace {

constexpr double kPi = std::numbers::pi;
constexpr Eigen::Index kMinMaskPoints = 10;

Transform rot_z_about(double yaw, const Vec3& pivot) {
  return Transform::RotationAbout(Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())), pivot);
}

Transform translate(const Vec3& d) { return Transform::FromTranslation(d); }

Cloud ensure_normals(const Cloud& cloud, const Scene& scene) {
  if (cloud.has_normals()) return cloud;
  const auto views = scene.camera_positions();
  const Eigen::Index k = std::min(kNormalNeighbors, cloud.size());
  return orient_normals_outward(estimate_normals(cloud, k, views));
}

std::vector<Eigen::Index> indices_of(const Mask& mask) {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

Matrix3X<double> columns(const Matrix3X<double>& m, const std::vector<Eigen::Index>& idx) {
  Matrix3X<double> out(3, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = m.col(idx[j]);
  return out;
}

/// pi/2 rotation about a horizontal axis through the masked centroid.
Transform mask_pitch(const Vec3& normal, const Vec3& centroid, bool alternate) {
  Vec3 axis = Vec3::UnitZ().cross(normal);
  if (axis.norm() < 1e-6) axis = Vec3::UnitY();
  axis.normalize();
  if (alternate) axis = Vec3::UnitZ().cross(axis).normalized();
  return Transform::RotationAbout(Quat(Eigen::AngleAxisd(kPi / 2, axis)), centroid);
}

/// Front direction in the palm plane with a negative world-z component.
Vec3 downward_front(const Vec3& palm_normal, Rng& rng) {
  Vec3 t1 = -Vec3::UnitZ() + palm_normal.z() * palm_normal;
  if (t1.norm() < 1e-6) {
    const double a = uniform(rng, -kPi, kPi);
    return {std::cos(a), std::sin(a), 0.0};
  }
  t1.normalize();
  const Vec3 t2 = palm_normal.cross(t1);
  const double theta = uniform(rng, -kPi / 2, kPi / 2);
  return std::cos(theta) * t1 + std::sin(theta) * t2;
}

Arm nearest_arm(const Vec3& p, const WorkspaceModel& ws) {
  const double dl = (p - ws.arm(Arm::Left).shoulder).head<2>().norm();
  const double dr = (p - ws.arm(Arm::Right).shoulder).head<2>().norm();
  return dl < dr ? Arm::Left : Arm::Right;
}

Vec3 uniform_in(const Rect& r, double z, Rng& rng) {
  return {uniform(rng, r.x_min, r.x_max), uniform(rng, r.y_min, r.y_max), z};
}

/// Planar move taking the cloud centroid to `target_xy` with a yaw about it.
Transform planar_move(const Vec3& centroid, const Vec3& target_xy, double yaw) {
  Vec3 d = target_xy - centroid;
  d.z() = 0.0;
  return translate(d) * rot_z_about(yaw, centroid);
}

struct Antipodal {
  Eigen::Index first;
  Eigen::Index second;
};

/// Random antipodal pair among `candidates`: march from p1 along -n1 and
/// accept the first candidate near the ray with an anti-parallel normal.
Antipodal sample_antipodal(const Cloud& cloud, const std::vector<Eigen::Index>& candidates, Rng& rng,
                           const BaselineOptions& opt) {
  if (candidates.size() < 2) throw SamplerError("no grasp found");
  const Matrix3X<double> pts = columns(cloud.points(), candidates);
  const KdTree tree(pts);
  const Matrix3X<double>& normals = cloud.normals();
  const double extent = (cloud.points().rowwise().maxCoeff() - cloud.points().rowwise().minCoeff()).norm();
  const double cos_tol = std::cos(opt.antipodal_angle);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  for (int attempt = 0; attempt < opt.grasp_attempts; ++attempt) {
    const std::size_t a = pick(rng);
    const Vec3 p1 = pts.col(static_cast<Eigen::Index>(a));
    const Vec3 n1 = normals.col(candidates[a]);
    for (double s = opt.ray_step; s <= extent + opt.ray_tolerance; s += opt.ray_step) {
      const auto hit = tree.nearest(p1 - s * n1, opt.ray_tolerance);
      if (!hit || static_cast<std::size_t>(hit->index) == a) continue;
      const Eigen::Index b = candidates[static_cast<std::size_t>(hit->index)];
      if ((cloud.point(b) - p1).norm() < 2 * opt.ray_tolerance) continue;
      if (normals.col(b).dot(n1) <= -cos_tol) return {candidates[a], b};
    }
  }
  throw SamplerError("no grasp found");
}

/// Antipodal bimanual contact on `cloud`, skipping points below the height
/// threshold, close to the excluded planes, or (when `vertical_axis` is set)
/// with normals within 45 degrees of that axis.
ContactPose sample_grasp_contact(const Cloud& cloud, const std::vector<const Plane*>& excluded, double support_z,
                                 Rng& rng, const BaselineOptions& opt,
                                 const std::optional<Vec3>& vertical_axis = std::nullopt) {
  std::vector<Eigen::Index> candidates;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const Vec3 p = cloud.point(i);
    if (p.z() < support_z + opt.contact_min_height) continue;
    if (vertical_axis && std::abs(cloud.normals().col(i).dot(*vertical_axis)) >= std::cos(kPi / 4)) continue;
    const bool on_excluded = std::any_of(excluded.begin(), excluded.end(), [&](const Plane* pl) {
      return std::abs(pl->signed_distance(p)) <= opt.planes.inlier_threshold;
    });
    if (!on_excluded) candidates.push_back(i);
  }
  const Antipodal pair = sample_antipodal(cloud, candidates, rng, opt);
  Eigen::Index left = pair.first;
  Eigen::Index right = pair.second;
  if (cloud.point(left).x() > cloud.point(right).x()) std::swap(left, right);

  ContactPose c;
  for (auto [arm, idx] : {std::pair{Arm::Left, left}, std::pair{Arm::Right, right}}) {
    const Vec3 m = -cloud.normals().col(idx);
    c.palm(arm) = palm_frame(cloud.point(idx), m, downward_front(m, rng));
  }
  return c;
}

const Plane* opposite_plane(const std::vector<Plane>& planes, std::size_t i) {
  const Plane* best = nullptr;
  double best_dot = -0.9;
  for (std::size_t j = 0; j < planes.size(); ++j) {
    if (j == i) continue;
    const double d = planes[j].normal.dot(planes[i].normal);
    if (d < best_dot) {
      best_dot = d;
      best = &planes[j];
    }
  }
  return best;
}

}  // namespace

Vec3 mask_normal(const Cloud& cloud, const Mask& mask) {
  if (static_cast<Eigen::Index>(mask.size()) != cloud.size()) throw std::invalid_argument("mask/cloud size mismatch");
  const auto idx = indices_of(mask);
  if (idx.size() < 3) throw InsufficientPoints();
  const Matrix3X<double> pts = columns(cloud.points(), idx);
  const Vec3 c = pts.rowwise().mean();
  const Matrix3X<double> d = pts.colwise() - c;
  const Eigen::SelfAdjointEigenSolver<Mat3> es(d * d.transpose());
  Vec3 n = es.eigenvectors().col(0);
  if (n.dot(c - cloud.centroid()) < 0.0) n = -n;
  return n;
}

Transform register_mask_subgoal(const Cloud& cloud, const Mask& mask, const Cloud& target,
                                const Transform& planar_init, const RegistrationOptions& options) {
  return register_mask_subgoal(cloud, mask, KdTree(target), target.points().row(2).mean(), planar_init, options);
}

Transform register_mask_subgoal(const Cloud& cloud, const Mask& mask, const KdTree& target, double support_z,
                                const Transform& planar_init, const RegistrationOptions& options) {
  if (static_cast<Eigen::Index>(mask.size()) != cloud.size()) throw std::invalid_argument("mask/cloud size mismatch");
  const auto idx = indices_of(mask);
  if (static_cast<Eigen::Index>(idx.size()) < kMinMaskPoints) throw InsufficientPoints();
  const Cloud masked(columns(cloud.points(), idx));
  const Vec3 c = masked.centroid();
  const Vec3 n = mask_normal(cloud, mask);
  // ICP runs on an evenly strided subset; the placement check uses every point
  std::vector<Eigen::Index> stride;
  const std::size_t step = (idx.size() + options.max_icp_points - 1) / options.max_icp_points;
  for (std::size_t i = 0; i < idx.size(); i += step) stride.push_back(idx[i]);
  const Cloud source(columns(cloud.points(), stride));

  auto attempt = [&](bool alternate) {
    const Transform pitch = options.pitch ? mask_pitch(n, c, alternate) : Transform::Identity();
    const Transform moved = planar_init * pitch;
    const Transform init = translate(Vec3(0.0, 0.0, support_z - (moved * c).z())) * moved;
    try {
      return icp_point_to_point(source, target, init, options.icp);
    } catch (const NoOverlap&) {
      throw RegistrationError();
    }
  };

  IcpResult result = attempt(false);
  if (options.pitch && result.fitness < options.min_fitness) {
    IcpResult alt = attempt(true);
    if (alt.fitness > result.fitness) result = std::move(alt);
  }
  // the placed face must sit flat on the support: checked on its centroid and
  // fitted normal, which stay accurate when single points are noisy
  const Vec3 placed_c = result.transform * c;
  const Vec3 placed_n = result.transform.rotation() * n;
  if (!(std::abs(placed_c.z() - support_z) <= options.contact_tolerance)) throw RegistrationError();
  if (!(std::abs(placed_n.z()) >= std::cos(options.max_tilt))) throw RegistrationError();
  return result.transform;
}

SkillParams baseline_grasp_sampler(const Cloud& input, const Scene& scene, Seed seed, const SampleHints& hints,
                                   const BaselineOptions& opt) {
  const Cloud cloud = ensure_normals(input, scene);
  std::vector<Plane> own;
  if (!hints.planes) own = segment_planes(cloud, opt.planes, seed.derive("planes"));
  const std::vector<Plane>& planes = hints.planes ? *hints.planes : own;
  if (planes.size() < 2) throw SamplerError("degenerate geometry");
  Rng rng = make_rng(seed.derive("grasp"));
  const double support_z = hints.support_z.value_or(scene.table_z());

  if (hints.fixed_subgoal) {
    // faces that end up on top or bottom cannot hold the palms
    const Transform& subgoal = *hints.fixed_subgoal;
    const Vec3 vertical = subgoal.rotation().inverse() * Vec3::UnitZ();
    std::vector<const Plane*> excluded;
    for (const Plane& p : planes) {
      if (std::abs(p.normal.dot(vertical)) >= std::cos(kPi / 4)) excluded.push_back(&p);
    }
    ContactPose contact = sample_grasp_contact(cloud, excluded, support_z, rng, opt, vertical);
    return {SkillType::GraspReorient, subgoal, std::move(contact), std::nullopt};
  }

  // side faces only: a single pi/2 pitch cannot bring the top face down
  std::vector<std::size_t> sides;
  for (std::size_t i = 0; i < planes.size(); ++i) {
    if (std::abs(planes[i].normal.z()) < std::cos(kPi / 4)) sides.push_back(i);
  }
  if (sides.empty()) throw SamplerError("degenerate geometry");
  const std::size_t reg = sides[std::uniform_int_distribution<std::size_t>(0, sides.size() - 1)(rng)];
  Mask m(static_cast<std::size_t>(cloud.size()), false);
  for (Eigen::Index i : planes[reg].inliers) m[static_cast<std::size_t>(i)] = true;
  if (planes[reg].inliers.size() < static_cast<std::size_t>(kMinMaskPoints)) throw SamplerError("degenerate geometry");

  Vec3 mc = Vec3::Zero();
  for (Eigen::Index i : planes[reg].inliers) mc += cloud.point(i);
  mc /= static_cast<double>(planes[reg].inliers.size());
  const Vec3 pitched_centroid = mask_pitch(planes[reg].normal, mc, false) * cloud.centroid();
  const double yaw = uniform(rng, -kPi, kPi);
  const Vec3 target = uniform_in(scene.workspace.grasp_region, 0.0, rng);
  const Transform planar_init = planar_move(pitched_centroid, target, yaw);

  const SupportSurface& support = scene.table_surface();
  const Transform subgoal = register_mask_subgoal(cloud, m, support.tree, support.z, planar_init, opt.registration);
  std::vector<const Plane*> excluded{&planes[reg]};
  if (const Plane* o = opposite_plane(planes, reg)) excluded.push_back(o);
  const Vec3 vertical = subgoal.rotation().inverse() * Vec3::UnitZ();
  ContactPose contact = sample_grasp_contact(cloud, excluded, support_z, rng, opt, vertical);
  return {SkillType::GraspReorient, subgoal, std::move(contact), std::move(m)};
}

SkillParams baseline_pick_place_sampler(const Cloud& input, const Scene& scene, Seed seed, const SampleHints& hints,
                                        const BaselineOptions& opt) {
  const Cloud cloud = ensure_normals(input, scene);
  std::vector<Plane> own;
  if (!hints.planes) own = segment_planes(cloud, opt.planes, seed.derive("planes"));
  const std::vector<Plane>& planes = hints.planes ? *hints.planes : own;
  Rng rng = make_rng(seed.derive("pick_place"));
  const double support_z = hints.support_z.value_or(scene.table_z());

  Transform subgoal;
  if (hints.fixed_subgoal) {
    subgoal = *hints.fixed_subgoal;
  } else {
    const double yaw = uniform(rng, -kPi, kPi);
    subgoal = planar_move(cloud.centroid(), uniform_in(scene.workspace.grasp_region, 0.0, rng), yaw);
  }
  std::vector<const Plane*> excluded;
  for (const Plane& p : planes) {
    if (std::abs(p.normal.z()) >= std::cos(kPi / 4)) excluded.push_back(&p);
  }
  ContactPose contact = sample_grasp_contact(cloud, excluded, support_z, rng, opt);
  return {SkillType::PickPlace, subgoal, std::move(contact), std::nullopt};
}

SkillParams baseline_pull_sampler(const Cloud& input, const Scene& scene, Seed seed, const SampleHints& hints,
                                  const BaselineOptions& opt) {
  const Cloud cloud = ensure_normals(input, scene);
  std::vector<Eigen::Index> top;
  const double cos_top = std::cos(opt.top_angle);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    if (cloud.normals().col(i).z() >= cos_top) top.push_back(i);
  }
  if (top.empty()) throw SamplerError("no top surface");
  Rng rng = make_rng(seed.derive("pull"));
  const Eigen::Index i = top[std::uniform_int_distribution<std::size_t>(0, top.size() - 1)(rng)];
  const Vec3 p = cloud.point(i);
  const double angle = uniform(rng, -kPi, kPi);
  const Transform palm = palm_frame(p, -Vec3::UnitZ(), Vec3(std::cos(angle), std::sin(angle), 0.0));

  Transform subgoal;
  if (hints.fixed_subgoal) {
    subgoal = *hints.fixed_subgoal;
  } else {
    const double yaw = uniform(rng, -kPi, kPi);
    subgoal = project_se2(planar_move(cloud.centroid(), uniform_in(scene.table(), 0.0, rng), yaw));
  }
  const Arm arm = nearest_arm(p, scene.workspace);
  ContactPose contact;
  contact.palm(arm) = palm;
  return {with_arm(SkillType::PullRight, arm), subgoal, contact, std::nullopt};
}

SkillParams baseline_push_sampler(const Cloud& input, const Scene& scene, Seed seed, const SampleHints& hints,
                                  const BaselineOptions& opt) {
  const Cloud cloud = ensure_normals(input, scene);
  std::vector<Eigen::Index> side;
  const double max_z = std::sin(opt.side_angle);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    if (std::abs(cloud.normals().col(i).z()) <= max_z) side.push_back(i);
  }
  if (side.empty()) throw SamplerError("no push face");
  Rng rng = make_rng(seed.derive("push"));
  const Eigen::Index i = side[std::uniform_int_distribution<std::size_t>(0, side.size() - 1)(rng)];
  const Vec3 p = cloud.point(i);
  const Vec3 n = cloud.normals().col(i);
  const Transform palm = palm_frame(p, -n, downward_front(-n, rng));

  Transform subgoal;
  if (hints.fixed_subgoal) {
    subgoal = *hints.fixed_subgoal;
  } else {
    const Vec3 inward = Vec3(-n.x(), -n.y(), 0.0).normalized();
    const Vec3 dir = Quat(Eigen::AngleAxisd(uniform(rng, -opt.push_cone, opt.push_cone), Vec3::UnitZ())) * inward;
    const double dist = uniform(rng, opt.push_min, opt.push_max);
    const double yaw = uniform(rng, -opt.push_max_yaw, opt.push_max_yaw);
    subgoal = project_se2(translate(dist * dir) * rot_z_about(yaw, cloud.centroid()));
  }
  const Arm arm = nearest_arm(p, scene.workspace);
  ContactPose contact;
  contact.palm(arm) = palm;
  return {with_arm(SkillType::PushRight, arm), subgoal, contact, std::nullopt};
}

SkillParams BaselineSampler::draw(SkillType skill, const Cloud& cloud, const Scene& scene, Seed seed,
                                  const SampleHints& hints) const {
  if (is_pull(skill)) return baseline_pull_sampler(cloud, scene, seed, hints, options_);
  if (is_push(skill)) return baseline_push_sampler(cloud, scene, seed, hints, options_);
  if (skill == SkillType::PickPlace) return baseline_pick_place_sampler(cloud, scene, seed, hints, options_);
  return baseline_grasp_sampler(cloud, scene, seed, hints, options_);
}

std::vector<Plane> BaselineSampler::segment(const Cloud& cloud, Seed seed) const {
  return segment_planes(cloud, options_.planes, seed.derive("planes"));
}

ReplaySampler::ReplaySampler(std::vector<SkillParams> records) : records_(std::move(records)) {
  if (records_.empty()) throw std::invalid_argument("replay sampler: no records");
}

ReplaySampler ReplaySampler::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open replay file " + path.string());
  return ReplaySampler(read_skill_params(in));
}

SkillParams ReplaySampler::draw(SkillType skill, const Cloud&, const Scene&, Seed seed,
                                const SampleHints& hints) const {
  std::vector<std::size_t> match;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (same_family(records_[i].skill, skill)) match.push_back(i);
  }
  if (match.empty()) throw SamplerError("no replay record for " + std::string(to_string(skill)));
  Rng rng = make_rng(seed.derive("replay"));
  SkillParams out = records_[match[std::uniform_int_distribution<std::size_t>(0, match.size() - 1)(rng)]];
  if (hints.fixed_subgoal) {
    out.subgoal = *hints.fixed_subgoal;
    out.mask.reset();
  }
  return out;
}

SkillParams InfeasibleSampler::draw(SkillType skill, const Cloud&, const Scene&, Seed,
                                    const SampleHints& hints) const {
  const Transform far = palm_frame(Vec3(10.0, 10.0, 10.0), -Vec3::UnitZ(), Vec3::UnitY());
  SkillParams out{skill, hints.fixed_subgoal.value_or(translate(Vec3(10.0, 0.0, 0.0))), {}, std::nullopt};
  if (is_planar(skill)) {
    out.contact.palm(arm_of(skill)) = far;
  } else {
    out.contact.left = far;
    out.contact.right = far;
  }
  return out;
}

namespace {

void write_pose(std::ostream& out, const Transform& t) {
  const Quat& q = t.rotation();
  const Vec3& p = t.translation();
  out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << q.w() << ' ' << q.x() << ' ' << q.y() << ' ' << q.z();
}

Transform read_pose(std::istream& in, std::optional<double> first = std::nullopt) {
  double v[7];
  for (int i = 0; i < 7; ++i) {
    if (i == 0 && first) {
      v[0] = *first;
    } else if (!(in >> v[i])) {
      throw std::invalid_argument("skill record: expected 7 pose numbers");
    }
  }
  return Transform(Quat(v[3], v[4], v[5], v[6]), Vec3(v[0], v[1], v[2]));
}

std::optional<Transform> read_palm(std::istream& in, const char* tag) {
  std::string t;
  if (!(in >> t) || t != tag) throw std::invalid_argument(std::string("skill record: expected '") + tag + "'");
  if (!(in >> t)) throw std::invalid_argument("skill record: expected 7 pose numbers");
  if (t == "-") return std::nullopt;
  double first = 0.0;
  try {
    std::size_t used = 0;
    first = std::stod(t, &used);
    if (used != t.size()) throw std::invalid_argument(t);
  } catch (const std::exception&) {
    throw std::invalid_argument("skill record: bad number '" + t + "'");
  }
  return read_pose(in, first);
}

}  // namespace

void write_skill_params(std::ostream& out, const SkillParams& params) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << to_string(params.skill) << ' ';
  write_pose(out, params.subgoal);
  for (auto [tag, arm] : {std::pair{" L ", Arm::Left}, std::pair{" R ", Arm::Right}}) {
    out << tag;
    if (const auto& p = params.contact.palm(arm)) {
      write_pose(out, *p);
    } else {
      out << '-';
    }
  }
  if (params.mask) {
    out << " M";
    for (std::size_t i = 0; i < params.mask->size(); ++i) {
      if ((*params.mask)[i]) out << ' ' << i;
    }
    out << " N " << params.mask->size();
  }
  out << '\n';
  out.precision(old_precision);
}

SkillParams parse_skill_params(const std::string& line) {
  std::istringstream in(line);
  std::string name;
  if (!(in >> name)) throw std::invalid_argument("skill record: empty line");
  SkillParams out{skill_from_string(name), read_pose(in), {}, std::nullopt};
  out.contact.left = read_palm(in, "L");
  out.contact.right = read_palm(in, "R");
  std::string tag;
  if (in >> tag) {
    if (tag != "M") throw std::invalid_argument("skill record: unexpected token '" + tag + "'");
    std::vector<std::size_t> idx;
    std::string tok;
    std::size_t size = 0;
    while (in >> tok) {
      if (tok == "N") {
        if (!(in >> size)) throw std::invalid_argument("skill record: expected mask size");
        break;
      }
      idx.push_back(std::stoul(tok));
    }
    if (size == 0) throw std::invalid_argument("skill record: mask without size");
    Mask m(size, false);
    for (std::size_t i : idx) {
      if (i >= size) throw std::invalid_argument("skill record: mask index out of range");
      m[i] = true;
    }
    out.mask = std::move(m);
  }
  return out;
}

std::vector<SkillParams> read_skill_params(std::istream& in) {
  std::vector<SkillParams> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    out.push_back(parse_skill_params(line));
  }
  return out;
}

}  // namespace rpo
