// Geometric feasibility model: skill preconditions, a two-stage motion check
// standing in for IK + cartesian planning, and contact refinement.
#pragma once

#include <array>
#include <map>
#include <string>

#include "rpo/analysis.hpp"
#include "rpo/skills.hpp"

namespace rpo {

/// Closed axis-aligned rectangle in the table plane.
struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(double x, double y) const { return x >= x_min && x <= x_max && y >= y_min && y <= y_max; }
  bool contains(const Rect& r) const {
    return r.x_min >= x_min && r.x_max <= x_max && r.y_min >= y_min && r.y_max <= y_max;
  }
  bool intersects(const Rect& r) const {
    return r.x_min <= x_max && r.x_max >= x_min && r.y_min <= y_max && r.y_max >= y_min;
  }
  Vec3 center(double z = 0.0) const { return {(x_min + x_max) / 2, (y_min + y_max) / 2, z}; }
  static Rect Centered(double cx, double cy, double width, double depth) {
    return {cx - width / 2, cx + width / 2, cy - depth / 2, cy + depth / 2};
  }
};

struct ArmReach {
  Vec3 shoulder;
  double radius = 0.65;
};

struct WorkspaceModel {
  Rect table{-0.5, 0.5, -0.35, 0.35};
  double table_z = 0.0;
  std::array<ArmReach, 2> arms{ArmReach{{-0.15, -0.40, 0.30}, 0.65}, ArmReach{{0.15, -0.40, 0.30}, 0.65}};
  /// Upper bound of the reachable box above the table.
  double ceiling = 0.8;
  /// Palm patch half extents along the palm x (width) and y (front) axes.
  double palm_half_width = 0.0125;
  double palm_half_length = 0.025;
  double penetration_tolerance = 0.002;
  /// Precondition rectangle for the bimanual skills.
  Rect grasp_region = Rect::Centered(0.0, -0.15, 0.40, 0.30);

  const ArmReach& arm(Arm a) const { return arms[a == Arm::Left ? 0 : 1]; }
  Rect precondition_region(SkillType skill) const { return is_bimanual(skill) ? grasp_region : table; }
  bool reachable(Arm a, const Vec3& p) const;
  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

bool satisfies_preconditions(SkillType skill, const Cloud& cloud, const WorkspaceModel& ws);

enum class FeasibilityFailure { None, PalmTable, Reach, PalmPalm, ObjectTable, ObjectSupport };

std::string_view to_string(FeasibilityFailure f);

struct FeasibilityReport {
  bool feasible = false;
  int stage = 0;  // 1 or 2: stage that rejected; 0 when feasible
  FeasibilityFailure failure = FeasibilityFailure::None;
  std::size_t waypoint = 0;
};

/// Lowest allowed object point: the table, or the observed cloud's own
/// lowest point when sensor noise already puts it below the table.
double object_floor(const Cloud& object_cloud, const WorkspaceModel& ws);

/// Stage 1 checks the start and end sticking configurations only; stage 2
/// (run only when stage 1 passes) checks every waypoint, palm-palm
/// clearance, and the object against the table along the motion.
FeasibilityReport check_motion(const PalmPath& path, const Cloud& object_cloud, const Transform& subgoal,
                               const WorkspaceModel& ws);

bool feasible_motion(const PalmPath& path, const Cloud& object_cloud, const Transform& subgoal,
                     const WorkspaceModel& ws);

/// Lowest z of the palm's rectangular patch.
double palm_patch_min_z(const Transform& palm, const WorkspaceModel& ws);

/// Minimum distance between two palm patches (0 when they intersect).
double palm_patch_distance(const Transform& a, const Transform& b, const WorkspaceModel& ws);

struct RefinedContact {
  ContactPose contact;
  bool warning = false;  // some palm had no cloud point near its ray
};

struct RefineOptions {
  double step = 0.001;
  double reach = 0.03;
};

/// Snaps each palm position to the cloud point closest to the palm-normal
/// ray through it; orientations are left untouched.
RefinedContact refine_contact(const ContactPose& contact, const Cloud& dense_cloud, const RefineOptions& options = {});
RefinedContact refine_contact(const ContactPose& contact, const KdTree& dense_cloud, const RefineOptions& options = {});

}  // namespace rpo
