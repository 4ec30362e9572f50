// Manipulation primitives as generators of cartesian palm paths under the
// sticking-contact assumption.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rpo/se3.hpp"

namespace rpo {

enum class SkillType { PullLeft, PullRight, PushLeft, PushRight, GraspReorient, PickPlace };

enum class Arm { Left, Right };

std::string_view to_string(SkillType s);
SkillType skill_from_string(std::string_view name);

bool is_pull(SkillType s);
bool is_push(SkillType s);
/// Pull/push: single arm, motion restricted to SE(2).
bool is_planar(SkillType s);
bool is_bimanual(SkillType s);
/// The arm a single-arm skill uses.
Arm arm_of(SkillType s);
/// Same primitive regardless of the arm (PullLeft ~ PullRight).
bool same_family(SkillType a, SkillType b);
/// Single-arm variant of a planar skill for the given arm.
SkillType with_arm(SkillType s, Arm arm);

/// Palm poses at the moment contact is made (world frame).
///
/// Palm frame convention: z is the palm normal (the direction the palm face
/// points, i.e. into the object), y is the palm "front" (wrist to finger
/// tip) and x = y cross z.
struct ContactPose {
  std::optional<Transform> left;
  std::optional<Transform> right;

  const std::optional<Transform>& palm(Arm arm) const { return arm == Arm::Left ? left : right; }
  std::optional<Transform>& palm(Arm arm) { return arm == Arm::Left ? left : right; }
};

Vec3 palm_normal(const Transform& palm);
Vec3 palm_front(const Transform& palm);

/// Palm frame from a normal and a front direction (front is orthogonalized).
Transform palm_frame(const Vec3& position, const Vec3& normal, const Vec3& front);

enum class Phase { Approach, Contact, Lift, Transport, Place, Release, Retract };

std::string_view to_string(Phase p);

struct Waypoint {
  std::optional<Transform> left;
  std::optional<Transform> right;
  Phase phase;
  /// Object transform relative to the contact configuration (identity
  /// outside the sticking phases).
  Transform object;
  /// Transport fraction in [0,1] for transport waypoints.
  double fraction = 0.0;

  const std::optional<Transform>& palm(Arm arm) const { return arm == Arm::Left ? left : right; }
};

struct PalmPath {
  SkillType skill;
  std::vector<Waypoint> waypoints;
  double lift_height = 0.0;
};

struct PathOptions {
  int waypoints_per_phase = 20;
  double approach_standoff = 0.03;
  double retract_distance = 0.06;
  /// Vertical clearance the bimanual skills carry the object at while it
  /// rotates; single-arm skills never lift.
  double lift_height = 0.0;
};

struct SkillError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// True iff the subgoal is in the skill's motion class: SE(2) for pull/push
/// (|dz| < 1 mm, tilt < 1 deg), anything for the bimanual skills.
bool skill_admits(SkillType skill, const Transform& subgoal);

/// Palm waypoints for executing `subgoal` from `contact`.
///
/// Phases: approach (standoff -> contact), contact, [lift], transport,
/// [place], release, retract. Lift/place exist only for bimanual skills
/// with a nonzero lift height. During the sticking phases every palm pose
/// is  object_motion * contact  with object_motion =
/// Up(h) * interpolate_screw(subgoal, f) in transport.
PalmPath generate_path(SkillType skill, const ContactPose& contact, const Transform& subgoal,
                       const PathOptions& options = {});

/// Idealized outcome of a successful skill: the cloud moved by the subgoal.
Cloud execute_sticking(const Transform& subgoal, const Cloud& object_cloud);

/// Smallest lift that keeps the cloud above `floor_z - tolerance` at every
/// sampled transport fraction; zero when no lift is needed.
double required_lift(const Transform& subgoal, const Cloud& cloud, double floor_z, int samples,
                     double tolerance, double clearance = 0.01);

}  // namespace rpo
