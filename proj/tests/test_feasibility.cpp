#include <doctest.h>

#include <numbers>

#include "oracle.hpp"
#include "rpo/feasibility.hpp"

using namespace rpo;

namespace {

std::array<Vec3, 4> corners(const Transform& palm, const WorkspaceModel& ws) {
  const Mat3 r = palm.rotation_matrix();
  std::array<Vec3, 4> out;
  int i = 0;
  for (double su : {-1.0, 1.0}) {
    for (double sv : {-1.0, 1.0}) {
      out[static_cast<std::size_t>(i++)] =
          palm.translation() + su * ws.palm_half_width * r.col(0) + sv * ws.palm_half_length * r.col(1);
    }
  }
  return out;
}

std::vector<Vec3> patch_grid(const Transform& palm, const WorkspaceModel& ws, int n) {
  const Mat3 r = palm.rotation_matrix();
  std::vector<Vec3> out;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double u = (2.0 * i / n - 1.0) * ws.palm_half_width;
      const double v = (2.0 * j / n - 1.0) * ws.palm_half_length;
      out.push_back(palm.translation() + u * r.col(0) + v * r.col(1));
    }
  }
  return out;
}

Cloud grid_plane(double half, double spacing) {
  std::vector<Vec3> pts;
  const int n = static_cast<int>(std::lround(half / spacing));
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) pts.emplace_back(i * spacing, j * spacing, 0.0);
  return Cloud::FromVector(pts);
}

PalmPath single_palm_path(const Transform& palm) {
  PalmPath p{SkillType::PushRight, {}, 0.0};
  p.waypoints.push_back({std::nullopt, palm, Phase::Contact, Transform::Identity(), 0.0});
  return p;
}

}  // namespace

TEST_CASE("palm patch lowest point matches the lowest corner") {
  std::mt19937_64 rng(11);
  WorkspaceModel ws;
  for (int i = 0; i < 500; ++i) {
    const Transform palm = oracle::random_transform(rng, 0.3);
    double lowest = std::numeric_limits<double>::infinity();
    for (const Vec3& c : corners(palm, ws)) lowest = std::min(lowest, c.z());
    CHECK(palm_patch_min_z(palm, ws) == doctest::Approx(lowest).epsilon(1e-12));
  }
}

TEST_CASE("palm patch distance agrees with a dense grid") {
  std::mt19937_64 rng(12);
  WorkspaceModel ws;
  const int n = 24;
  // largest gap between a point of the patch and the nearest grid sample
  const double cell = std::hypot(2 * ws.palm_half_width / n, 2 * ws.palm_half_length / n);
  for (int i = 0; i < 150; ++i) {
    const Transform a = oracle::random_transform(rng, 0.04);
    const Transform b = oracle::random_transform(rng, 0.04);
    const double d = palm_patch_distance(a, b, ws);
    CHECK(d >= 0.0);
    CHECK(d == doctest::Approx(palm_patch_distance(b, a, ws)).epsilon(1e-9));
    double brute = std::numeric_limits<double>::infinity();
    const auto ga = patch_grid(a, ws, n);
    const auto gb = patch_grid(b, ws, n);
    for (const Vec3& p : ga)
      for (const Vec3& q : gb) brute = std::min(brute, (p - q).norm());
    CHECK(d <= brute + 1e-12);
    CHECK(brute <= d + cell + 1e-12);
  }
  const Transform p = Transform::FromTranslation(Vec3(0, 0, 0.1));
  CHECK(palm_patch_distance(p, p, ws) == 0.0);
  const Transform q = Transform::FromTranslation(Vec3(0, 0, 0.13));
  CHECK(palm_patch_distance(p, q, ws) == doctest::Approx(0.03).epsilon(1e-12));
}

TEST_CASE("reachability and preconditions") {
  WorkspaceModel ws;
  CHECK_NOTHROW(ws.validate());
  const Vec3 shoulder = ws.arm(Arm::Left).shoulder;
  CHECK(ws.reachable(Arm::Left, Vec3(shoulder.x(), -0.2, 0.05)));
  CHECK_FALSE(ws.reachable(Arm::Left, Vec3(0.0, 0.35, 0.05)));
  CHECK_FALSE(ws.reachable(Arm::Left, Vec3(shoulder.x(), -0.2, -0.01)));

  // regions are closed: a centroid exactly on the boundary qualifies
  const Rect g = ws.grasp_region;
  const Cloud on_edge = Cloud::FromVector({Vec3(g.x_max, g.y_min, 0.05)});
  CHECK(satisfies_preconditions(SkillType::GraspReorient, on_edge, ws));
  const Cloud outside = Cloud::FromVector({Vec3(g.x_max + 1e-6, g.y_min, 0.05)});
  CHECK_FALSE(satisfies_preconditions(SkillType::GraspReorient, outside, ws));
  CHECK(satisfies_preconditions(SkillType::PullRight, outside, ws));

  WorkspaceModel bad = ws;
  bad.grasp_region = Rect::Centered(0.0, 0.0, 2.0, 2.0);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ws;
  bad.arms[1].radius = 0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("motion check reports the first violated constraint") {
  WorkspaceModel ws;
  const Cloud object = Cloud::FromVector({Vec3(0.0, -0.15, 0.0), Vec3(0.0, -0.15, 0.05)});
  const Transform down = palm_frame({0.15, -0.15, 0.06}, -Vec3::UnitZ(), Vec3::UnitY());
  const FeasibilityReport ok = check_motion(single_palm_path(down), object, Transform(), ws);
  CHECK(ok.feasible);
  CHECK(ok.stage == 0);

  // a vertical palm at 2 cm height dips its patch below the table
  const Transform vertical = palm_frame({0.15, -0.15, 0.02}, Vec3::UnitX(), Vec3::UnitZ());
  const FeasibilityReport low = check_motion(single_palm_path(vertical), object, Transform(), ws);
  CHECK_FALSE(low.feasible);
  CHECK(low.stage == 1);
  CHECK(low.failure == FeasibilityFailure::PalmTable);

  const Transform far = palm_frame({0.45, 0.3, 0.06}, -Vec3::UnitZ(), Vec3::UnitY());
  const FeasibilityReport reach = check_motion(single_palm_path(far), object, Transform(), ws);
  CHECK(reach.failure == FeasibilityFailure::Reach);

  PalmPath two{SkillType::GraspReorient, {}, 0.0};
  two.waypoints.push_back({down, down, Phase::Contact, Transform::Identity(), 0.0});
  const FeasibilityReport clash = check_motion(two, object, Transform(), ws);
  CHECK(clash.failure == FeasibilityFailure::PalmPalm);
  CHECK(clash.stage == 2);

  const Transform sink = Transform::FromTranslation(Vec3(0, 0, -0.01));
  PalmPath sinking = single_palm_path(down);
  sinking.waypoints.push_back({std::nullopt, down, Phase::Transport, sink, 1.0});
  CHECK(check_motion(sinking, object, Transform(), ws).failure == FeasibilityFailure::ObjectTable);

  const Transform off = Transform::FromTranslation(Vec3(0.0, 0.6, 0.0));
  CHECK(check_motion(single_palm_path(down), object, off, ws).failure == FeasibilityFailure::ObjectSupport);
  CHECK_THROWS_AS(check_motion(PalmPath{SkillType::PushRight, {}, 0.0}, object, Transform(), ws),
                  std::invalid_argument);
}

TEST_CASE("contact refinement snaps along the palm normal") {
  const Cloud plane = grid_plane(0.05, 0.002);
  ContactPose c;
  c.right = palm_frame({0.0031, -0.0049, 0.012}, -Vec3::UnitZ(), Vec3::UnitY());
  const RefinedContact r = refine_contact(c, plane);
  CHECK_FALSE(r.warning);
  REQUIRE(r.contact.right.has_value());
  CHECK((r.contact.right->translation() - Vec3(0.004, -0.004, 0.0)).norm() < 1e-12);
  CHECK(rotation_angle(*r.contact.right, *c.right) < 1e-12);
  CHECK_FALSE(r.contact.left.has_value());

  // offsets are searched in both directions along the normal
  c.right = palm_frame({0.0, 0.0, -0.01}, -Vec3::UnitZ(), Vec3::UnitY());
  CHECK(refine_contact(c, plane).contact.right->translation().norm() < 1e-12);

  ContactPose far;
  far.left = palm_frame({0.0, 0.0, 0.2}, -Vec3::UnitZ(), Vec3::UnitY());
  const RefinedContact w = refine_contact(far, plane);
  CHECK(w.warning);
  CHECK(translation_distance(*w.contact.left, *far.left) == 0.0);
}
