#include "rpo/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rpo {

bool WorkspaceModel::reachable(Arm a, const Vec3& p) const {
  const ArmReach& r = arm(a);
  if ((p - r.shoulder).norm() > r.radius) return false;
  // box above the table; palms may overhang the table edge slightly
  constexpr double kOverhang = 0.1;
  return p.x() >= table.x_min - kOverhang && p.x() <= table.x_max + kOverhang &&
         p.y() >= table.y_min - kOverhang && p.y() <= table.y_max + kOverhang && p.z() >= table_z - penetration_tolerance &&
         p.z() <= table_z + ceiling;
}

void WorkspaceModel::validate() const {
  if (!(table.x_max > table.x_min && table.y_max > table.y_min)) {
    throw std::invalid_argument("workspace: table extents must be positive");
  }
  if (!table.contains(grasp_region)) throw std::invalid_argument("workspace: grasp region must lie on the table");
  for (const ArmReach& r : arms) {
    if (!(r.radius > 0.0)) throw std::invalid_argument("workspace: reach radius must be positive");
    // the reach sphere, cut at palm height, must overlap the grasp region
    const double dz = table_z + 0.05 - r.shoulder.z();
    const double planar = r.radius * r.radius - dz * dz;
    if (planar <= 0.0) throw std::invalid_argument("workspace: arm cannot reach table height");
    const double cx = std::clamp(r.shoulder.x(), grasp_region.x_min, grasp_region.x_max);
    const double cy = std::clamp(r.shoulder.y(), grasp_region.y_min, grasp_region.y_max);
    if (std::hypot(cx - r.shoulder.x(), cy - r.shoulder.y()) > std::sqrt(planar)) {
      throw std::invalid_argument("workspace: an arm cannot reach the grasp region");
    }
  }
  if (!(palm_half_width > 0.0 && palm_half_length > 0.0)) throw std::invalid_argument("workspace: palm size");
}

bool satisfies_preconditions(SkillType skill, const Cloud& cloud, const WorkspaceModel& ws) {
  const Vec3 c = cloud.centroid();
  return ws.precondition_region(skill).contains(c.x(), c.y());
}

std::string_view to_string(FeasibilityFailure f) {
  switch (f) {
    case FeasibilityFailure::None: return "none";
    case FeasibilityFailure::PalmTable: return "palm_table";
    case FeasibilityFailure::Reach: return "reach";
    case FeasibilityFailure::PalmPalm: return "palm_palm";
    case FeasibilityFailure::ObjectTable: return "object_table";
    case FeasibilityFailure::ObjectSupport: return "object_support";
  }
  return "?";
}

double palm_patch_min_z(const Transform& palm, const WorkspaceModel& ws) {
  const Mat3 r = palm.rotation_matrix();
  return palm.translation().z() - ws.palm_half_width * std::abs(r(2, 0)) - ws.palm_half_length * std::abs(r(2, 1));
}

namespace {

struct Patch {
  Vec3 c;
  Vec3 u;
  Vec3 v;
  double a;
  double b;

  Vec3 corner(int i) const {
    const double su = (i == 0 || i == 3) ? -a : a;
    const double sv = (i < 2) ? -b : b;
    return c + su * u + sv * v;
  }
};

Patch patch_of(const Transform& palm, const WorkspaceModel& ws) {
  const Mat3 r = palm.rotation_matrix();
  return {palm.translation(), r.col(0), r.col(1), ws.palm_half_width, ws.palm_half_length};
}

double point_patch_distance(const Vec3& p, const Patch& q) {
  const Vec3 d = p - q.c;
  const double s = std::clamp(d.dot(q.u), -q.a, q.a);
  const double t = std::clamp(d.dot(q.v), -q.b, q.b);
  return (p - (q.c + s * q.u + t * q.v)).norm();
}

// closest distance between segments p0p1 and q0q1
double segment_distance(const Vec3& p0, const Vec3& p1, const Vec3& q0, const Vec3& q1) {
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= 1e-18 && e <= 1e-18) return r.norm();
  if (a <= 1e-18) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-18) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 1e-18 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p0 + s * d1) - (q0 + t * d2)).norm();
}

double segment_patch_distance(const Vec3& p0, const Vec3& p1, const Patch& q) {
  const Vec3 n = q.u.cross(q.v);
  const double d0 = n.dot(p0 - q.c);
  const double d1 = n.dot(p1 - q.c);
  if ((d0 <= 0.0 && d1 >= 0.0) || (d0 >= 0.0 && d1 <= 0.0)) {
    const double denom = d0 - d1;
    const Vec3 x = std::abs(denom) > 1e-18 ? Vec3(p0 + (d0 / denom) * (p1 - p0)) : Vec3(p0);
    if (point_patch_distance(x, q) <= 1e-12) return 0.0;
  }
  double best = std::min(point_patch_distance(p0, q), point_patch_distance(p1, q));
  for (int i = 0; i < 4; ++i) best = std::min(best, segment_distance(p0, p1, q.corner(i), q.corner((i + 1) % 4)));
  return best;
}

}  // namespace

double palm_patch_distance(const Transform& a, const Transform& b, const WorkspaceModel& ws) {
  const Patch pa = patch_of(a, ws);
  const Patch pb = patch_of(b, ws);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    best = std::min(best, segment_patch_distance(pa.corner(i), pa.corner((i + 1) % 4), pb));
    best = std::min(best, segment_patch_distance(pb.corner(i), pb.corner((i + 1) % 4), pa));
  }
  return best;
}

double object_floor(const Cloud& object_cloud, const WorkspaceModel& ws) {
  return std::min(ws.table_z, object_cloud.points().row(2).minCoeff());
}

namespace {

bool is_sticking(Phase p) {
  return p == Phase::Contact || p == Phase::Lift || p == Phase::Transport || p == Phase::Place;
}

FeasibilityFailure check_palms(const Waypoint& w, const WorkspaceModel& ws) {
  for (Arm a : {Arm::Left, Arm::Right}) {
    const auto& palm = w.palm(a);
    if (!palm) continue;
    if (palm_patch_min_z(*palm, ws) < ws.table_z - ws.penetration_tolerance) return FeasibilityFailure::PalmTable;
    if (!ws.reachable(a, palm->translation())) return FeasibilityFailure::Reach;
  }
  return FeasibilityFailure::None;
}

}  // namespace

FeasibilityReport check_motion(const PalmPath& path, const Cloud& object_cloud, const Transform& subgoal,
                               const WorkspaceModel& ws) {
  if (path.waypoints.empty()) throw std::invalid_argument("feasible_motion: empty path");
  const auto& wps = path.waypoints;

  std::size_t first = wps.size();
  std::size_t last = wps.size();
  for (std::size_t i = 0; i < wps.size(); ++i) {
    if (wps[i].phase == Phase::Contact && first == wps.size()) first = i;
    if (wps[i].phase == Phase::Transport || wps[i].phase == Phase::Place) last = i;
  }
  if (first == wps.size()) first = 0;
  if (last == wps.size()) last = wps.size() - 1;

  for (std::size_t i : {first, last}) {
    const FeasibilityFailure f = check_palms(wps[i], ws);
    if (f != FeasibilityFailure::None) return {false, 1, f, i};
  }

  for (std::size_t i = 0; i < wps.size(); ++i) {
    const FeasibilityFailure f = check_palms(wps[i], ws);
    if (f != FeasibilityFailure::None) return {false, 2, f, i};
    if (wps[i].left && wps[i].right && palm_patch_distance(*wps[i].left, *wps[i].right, ws) <= 0.0) {
      return {false, 2, FeasibilityFailure::PalmPalm, i};
    }
  }

  const double floor = object_floor(object_cloud, ws) - ws.penetration_tolerance;
  const Matrix3X<double>& pts = object_cloud.points();
  for (std::size_t i = 0; i < wps.size(); ++i) {
    if (!is_sticking(wps[i].phase)) continue;
    const Transform& m = wps[i].object;
    const double min_z = ((m.rotation_matrix() * pts).colwise() + m.translation()).row(2).minCoeff();
    if (min_z < floor) return {false, 2, FeasibilityFailure::ObjectTable, i};
  }
  const Vec3 end = subgoal * object_cloud.centroid();
  if (!ws.table.contains(end.x(), end.y())) return {false, 2, FeasibilityFailure::ObjectSupport, last};
  return {true, 0, FeasibilityFailure::None, 0};
}

bool feasible_motion(const PalmPath& path, const Cloud& object_cloud, const Transform& subgoal,
                     const WorkspaceModel& ws) {
  return check_motion(path, object_cloud, subgoal, ws).feasible;
}

RefinedContact refine_contact(const ContactPose& contact, const Cloud& dense_cloud, const RefineOptions& options) {
  return refine_contact(contact, KdTree(dense_cloud), options);
}

RefinedContact refine_contact(const ContactPose& contact, const KdTree& dense, const RefineOptions& options) {
  RefinedContact out{contact, false};
  const int steps = static_cast<int>(std::lround(options.reach / options.step));
  for (Arm a : {Arm::Left, Arm::Right}) {
    auto& palm = out.contact.palm(a);
    if (!palm) continue;
    const Vec3 p = palm->translation();
    const Vec3 n = palm_normal(*palm);
    double best = std::numeric_limits<double>::infinity();
    int best_offset = 0;
    Eigen::Index best_index = -1;
    for (int j = -steps; j <= steps; ++j) {
      const auto hit = dense.nearest(p + (j * options.step) * n);
      if (!hit) continue;
      const bool closer = hit->distance < best - 1e-12;
      const bool tie_nearer = std::abs(hit->distance - best) <= 1e-12 && std::abs(j) < std::abs(best_offset);
      if (closer || tie_nearer) {
        best = hit->distance;
        best_offset = j;
        best_index = hit->index;
      }
    }
    if (best_index < 0 || best > options.reach) {
      out.warning = true;
      continue;
    }
    palm = Transform(palm->rotation(), dense.points().col(best_index));
  }
  return out;
}

}  // namespace rpo
