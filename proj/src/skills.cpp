#include "rpo/skills.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace rpo {

namespace {
constexpr std::array<std::string_view, 6> kSkillNames = {"pull_left",  "pull_right",     "push_left",
                                                         "push_right", "grasp_reorient", "pick_place"};
constexpr double kDeg = std::numbers::pi / 180.0;
}  // namespace

std::string_view to_string(SkillType s) { return kSkillNames[static_cast<std::size_t>(s)]; }

SkillType skill_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kSkillNames.size(); ++i) {
    if (kSkillNames[i] == name) return static_cast<SkillType>(i);
  }
  throw std::invalid_argument("unknown skill '" + std::string(name) + "'");
}

bool is_pull(SkillType s) { return s == SkillType::PullLeft || s == SkillType::PullRight; }
bool is_push(SkillType s) { return s == SkillType::PushLeft || s == SkillType::PushRight; }
bool is_planar(SkillType s) { return is_pull(s) || is_push(s); }
bool is_bimanual(SkillType s) { return !is_planar(s); }

Arm arm_of(SkillType s) {
  if (s == SkillType::PullLeft || s == SkillType::PushLeft) return Arm::Left;
  if (s == SkillType::PullRight || s == SkillType::PushRight) return Arm::Right;
  throw std::invalid_argument("arm_of: bimanual skill");
}

bool same_family(SkillType a, SkillType b) {
  if (is_pull(a)) return is_pull(b);
  if (is_push(a)) return is_push(b);
  return a == b;
}

SkillType with_arm(SkillType s, Arm arm) {
  if (is_pull(s)) return arm == Arm::Left ? SkillType::PullLeft : SkillType::PullRight;
  if (is_push(s)) return arm == Arm::Left ? SkillType::PushLeft : SkillType::PushRight;
  return s;
}

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Approach: return "approach";
    case Phase::Contact: return "contact";
    case Phase::Lift: return "lift";
    case Phase::Transport: return "transport";
    case Phase::Place: return "place";
    case Phase::Release: return "release";
    case Phase::Retract: return "retract";
  }
  return "?";
}

Vec3 palm_normal(const Transform& palm) { return palm.rotation() * Vec3::UnitZ(); }
Vec3 palm_front(const Transform& palm) { return palm.rotation() * Vec3::UnitY(); }

Transform palm_frame(const Vec3& position, const Vec3& normal, const Vec3& front) {
  const Vec3 z = normal.normalized();
  Vec3 y = front - front.dot(z) * z;
  if (y.norm() < 1e-9) throw std::invalid_argument("palm_frame: front parallel to normal");
  y.normalize();
  Mat3 r;
  r.col(0) = y.cross(z);
  r.col(1) = y;
  r.col(2) = z;
  return Transform::FromRotationMatrix(r, position);
}

bool skill_admits(SkillType skill, const Transform& subgoal) {
  if (is_bimanual(skill)) return true;
  const double tilt = std::acos(std::clamp((subgoal.rotation() * Vec3::UnitZ()).z(), -1.0, 1.0));
  return std::abs(subgoal.translation().z()) < 1e-3 && tilt < 1.0 * kDeg;
}

namespace {

Transform up(double h) { return Transform::FromTranslation(Vec3(0.0, 0.0, h)); }

Transform shifted(const Transform& t, const Vec3& d) { return Transform(t.rotation(), t.translation() + d); }

}  // namespace

PalmPath generate_path(SkillType skill, const ContactPose& contact, const Transform& subgoal,
                       const PathOptions& options) {
  const int n = options.waypoints_per_phase;
  if (n < 1) throw std::invalid_argument("generate_path: waypoints_per_phase must be >= 1");

  std::vector<Arm> arms;
  if (is_planar(skill)) {
    const Arm a = arm_of(skill);
    const Arm other = a == Arm::Left ? Arm::Right : Arm::Left;
    if (!contact.palm(a) || contact.palm(other)) throw SkillError("arity");
    const Transform planar = project_se2(subgoal);
    if (translation_distance(planar, subgoal) > 1e-6 || rotation_angle(planar, subgoal) > 1e-6) {
      throw SkillError("subgoal not planar");
    }
    arms = {a};
  } else {
    if (!contact.left || !contact.right) throw SkillError("arity");
    arms = {Arm::Left, Arm::Right};
  }
  const double lift = is_bimanual(skill) ? std::max(0.0, options.lift_height) : 0.0;

  PalmPath path{skill, {}, lift};
  path.waypoints.reserve(static_cast<std::size_t>(7 * n + 1));

  auto sticking = [&](Phase phase, const Transform& object, double f) {
    Waypoint w{std::nullopt, std::nullopt, phase, object, f};
    for (Arm a : arms) {
      (a == Arm::Left ? w.left : w.right) = object * *contact.palm(a);
    }
    path.waypoints.push_back(std::move(w));
  };

  for (int k = 0; k < n; ++k) {
    const double offset = options.approach_standoff * (1.0 - static_cast<double>(k) / n);
    Waypoint w{std::nullopt, std::nullopt, Phase::Approach, Transform::Identity(), 0.0};
    for (Arm a : arms) {
      const Transform& p = *contact.palm(a);
      (a == Arm::Left ? w.left : w.right) = shifted(p, -offset * palm_normal(p));
    }
    path.waypoints.push_back(std::move(w));
  }
  sticking(Phase::Contact, Transform::Identity(), 0.0);
  if (lift > 0.0) {
    for (int k = 1; k <= n; ++k) sticking(Phase::Lift, up(lift * k / n), 0.0);
  }
  for (int i = 1; i <= n; ++i) {
    const double f = static_cast<double>(i) / n;
    sticking(Phase::Transport, up(lift) * interpolate_screw(subgoal, f), f);
  }
  if (lift > 0.0) {
    for (int k = 1; k <= n; ++k) sticking(Phase::Place, up(lift * (1.0 - static_cast<double>(k) / n)) * subgoal, 1.0);
  }

  const Waypoint last = path.waypoints.back();
  for (int k = 1; k <= n; ++k) {
    Waypoint w{std::nullopt, std::nullopt, Phase::Release, subgoal, 1.0};
    for (Arm a : arms) {
      const Transform& p = *last.palm(a);
      (a == Arm::Left ? w.left : w.right) = shifted(p, -options.approach_standoff * k / n * palm_normal(p));
    }
    path.waypoints.push_back(std::move(w));
  }
  const Waypoint released = path.waypoints.back();
  for (int k = 1; k <= n; ++k) {
    Waypoint w{std::nullopt, std::nullopt, Phase::Retract, subgoal, 1.0};
    for (Arm a : arms) {
      const Transform& p = *released.palm(a);
      const Vec3 dir = is_bimanual(skill) ? Vec3::UnitZ() : Vec3(-palm_normal(p));
      (a == Arm::Left ? w.left : w.right) = shifted(p, options.retract_distance * k / n * dir);
    }
    path.waypoints.push_back(std::move(w));
  }
  return path;
}

Cloud execute_sticking(const Transform& subgoal, const Cloud& object_cloud) { return apply(subgoal, object_cloud); }

double required_lift(const Transform& subgoal, const Cloud& cloud, double floor_z, int samples,
                     double tolerance, double clearance) {
  double worst = 0.0;
  for (int i = 1; i <= samples; ++i) {
    const Transform m = interpolate_screw(subgoal, static_cast<double>(i) / samples);
    const double min_z = ((m.rotation_matrix() * cloud.points()).colwise() + m.translation()).row(2).minCoeff();
    worst = std::max(worst, floor_z - tolerance - min_z);
  }
  return worst > 0.0 ? worst + clearance : 0.0;
}

}  // namespace rpo
