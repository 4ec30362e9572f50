#include <doctest.h>

#include <numbers>

#include "oracle.hpp"
#include "rpo/feasibility.hpp"
#include "rpo/skills.hpp"

using namespace rpo;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ContactPose bimanual_contact() {
  ContactPose c;
  c.left = palm_frame({-0.05, -0.15, 0.05}, Vec3::UnitX(), Vec3::UnitZ());
  c.right = palm_frame({0.05, -0.15, 0.05}, -Vec3::UnitX(), Vec3::UnitZ());
  return c;
}

ContactPose single_contact(Arm a) {
  ContactPose c;
  c.palm(a) = palm_frame({0.0, -0.1, 0.1}, -Vec3::UnitZ(), Vec3::UnitY());
  return c;
}

}  // namespace

TEST_CASE("skill names and families") {
  for (SkillType s : {SkillType::PullLeft, SkillType::PullRight, SkillType::PushLeft, SkillType::PushRight,
                      SkillType::GraspReorient, SkillType::PickPlace}) {
    CHECK(skill_from_string(to_string(s)) == s);
    CHECK(is_planar(s) != is_bimanual(s));
  }
  CHECK(same_family(SkillType::PullLeft, SkillType::PullRight));
  CHECK_FALSE(same_family(SkillType::PullLeft, SkillType::PushLeft));
  CHECK(with_arm(SkillType::PushRight, Arm::Left) == SkillType::PushLeft);
  CHECK_THROWS_AS(arm_of(SkillType::GraspReorient), std::invalid_argument);
  CHECK_THROWS_AS(skill_from_string("wiggle"), std::invalid_argument);
}

TEST_CASE("palm frame is right handed and orthonormal") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 200; ++i) {
    const Vec3 n(g(rng), g(rng), g(rng));
    const Vec3 f(g(rng), g(rng), g(rng));
    const Transform p = palm_frame(Vec3(g(rng), g(rng), g(rng)), n, f);
    const Mat3 r = p.rotation_matrix();
    CHECK((r.transpose() * r - Mat3::Identity()).norm() < 1e-9);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK((palm_normal(p) - n.normalized()).norm() < 1e-9);
    CHECK(palm_front(p).dot(n) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(palm_front(p).dot(f) > 0.0);
  }
  CHECK_THROWS_AS(palm_frame(Vec3::Zero(), Vec3::UnitZ(), Vec3::UnitZ()), std::invalid_argument);
}

TEST_CASE("planar skills admit only table-plane motions") {
  const Transform planar(Quat(Eigen::AngleAxisd(0.7, Vec3::UnitZ())), Vec3(0.1, -0.05, 0.0));
  const Transform lifted(planar.rotation(), Vec3(0.1, -0.05, 0.002));
  const Transform tilted(Quat(Eigen::AngleAxisd(2.0 * kDeg, Vec3::UnitX())), Vec3::Zero());
  const Transform slight(Quat(Eigen::AngleAxisd(0.5 * kDeg, Vec3::UnitX())), Vec3(0.0, 0.0, 0.0005));
  for (SkillType s : {SkillType::PullRight, SkillType::PushLeft}) {
    CHECK(skill_admits(s, planar));
    CHECK_FALSE(skill_admits(s, lifted));
    CHECK_FALSE(skill_admits(s, tilted));
    CHECK(skill_admits(s, slight));
  }
  CHECK(skill_admits(SkillType::GraspReorient, tilted));
  CHECK(skill_admits(SkillType::PickPlace, lifted));
}

TEST_CASE("sticking waypoints carry the palms rigidly with the object") {
  std::mt19937_64 rng(4);
  PathOptions opt;
  opt.waypoints_per_phase = 7;
  opt.lift_height = 0.04;
  const ContactPose contact = bimanual_contact();
  for (int trial = 0; trial < 20; ++trial) {
    const Transform subgoal = oracle::random_transform(rng, 0.1);
    const PalmPath path = generate_path(SkillType::GraspReorient, contact, subgoal, opt);
    CHECK(path.lift_height == opt.lift_height);
    const Transform up = Transform::FromTranslation(Vec3(0, 0, opt.lift_height));
    int transport = 0;
    const Waypoint* last_place = nullptr;
    for (const Waypoint& w : path.waypoints) {
      const bool sticking = w.phase == Phase::Contact || w.phase == Phase::Lift || w.phase == Phase::Transport ||
                            w.phase == Phase::Place;
      if (!sticking) continue;
      for (Arm a : {Arm::Left, Arm::Right}) {
        const auto expected = oracle::multiply(oracle::homogeneous(w.object), oracle::homogeneous(*contact.palm(a)));
        CHECK(oracle::max_abs_diff(oracle::homogeneous(*w.palm(a)), expected) < 1e-9);
      }
      if (w.phase == Phase::Transport) {
        ++transport;
        const Transform expected = up * interpolate_screw(subgoal, w.fraction);
        CHECK(translation_distance(w.object, expected) < 1e-12);
        CHECK(rotation_angle(w.object, expected) < 1e-7);
      }
      if (w.phase == Phase::Place) last_place = &w;
    }
    CHECK(transport == opt.waypoints_per_phase);
    REQUIRE(last_place != nullptr);
    CHECK(translation_distance(last_place->object, subgoal) < 1e-12);
    CHECK(rotation_angle(last_place->object, subgoal) < 1e-7);
  }
}

TEST_CASE("phase order and approach standoff") {
  PathOptions opt;
  opt.waypoints_per_phase = 5;
  const ContactPose contact = single_contact(Arm::Right);
  const Transform subgoal(Quat(Eigen::AngleAxisd(0.3, Vec3::UnitZ())), Vec3(0.05, 0.02, 0.0));
  const PalmPath path = generate_path(SkillType::PullRight, contact, subgoal, opt);
  // no lift or place phases for a single arm skill
  CHECK(path.waypoints.size() == static_cast<std::size_t>(4 * opt.waypoints_per_phase + 1));
  for (std::size_t i = 1; i < path.waypoints.size(); ++i) {
    CHECK(static_cast<int>(path.waypoints[i - 1].phase) <= static_cast<int>(path.waypoints[i].phase));
  }
  for (const Waypoint& w : path.waypoints) {
    CHECK_FALSE(w.left.has_value());
    CHECK(w.phase != Phase::Lift);
    CHECK(w.phase != Phase::Place);
  }
  const Transform& palm = *contact.right;
  const Vec3 expected = palm.translation() - opt.approach_standoff * palm_normal(palm);
  CHECK((path.waypoints.front().right->translation() - expected).norm() < 1e-12);
  const Waypoint& contact_wp = path.waypoints[static_cast<std::size_t>(opt.waypoints_per_phase)];
  CHECK(contact_wp.phase == Phase::Contact);
  CHECK(translation_distance(*contact_wp.right, palm) < 1e-12);
  const Waypoint& end = path.waypoints[static_cast<std::size_t>(2 * opt.waypoints_per_phase)];
  CHECK(end.phase == Phase::Transport);
  CHECK(translation_distance(end.object, subgoal) < 1e-12);
  // release backs off along the palm normal by the standoff
  const Waypoint& released = path.waypoints[static_cast<std::size_t>(3 * opt.waypoints_per_phase)];
  CHECK(released.phase == Phase::Release);
  const Vec3 back = end.right->translation() - opt.approach_standoff * palm_normal(*end.right);
  CHECK((released.right->translation() - back).norm() < 1e-12);
}

TEST_CASE("arity and planarity are enforced") {
  const Transform planar = Transform::FromTranslation(Vec3(0.05, 0, 0));
  CHECK_THROWS_AS(generate_path(SkillType::PullLeft, single_contact(Arm::Right), planar), SkillError);
  CHECK_THROWS_AS(generate_path(SkillType::PullRight, bimanual_contact(), planar), SkillError);
  CHECK_THROWS_AS(generate_path(SkillType::GraspReorient, single_contact(Arm::Left), planar), SkillError);
  CHECK_THROWS_AS(generate_path(SkillType::PushLeft, single_contact(Arm::Left),
                                Transform::FromTranslation(Vec3(0, 0, 0.02))),
                  SkillError);
  CHECK_NOTHROW(generate_path(SkillType::PushLeft, single_contact(Arm::Left), planar));
  PathOptions bad;
  bad.waypoints_per_phase = 0;
  CHECK_THROWS_AS(generate_path(SkillType::PushLeft, single_contact(Arm::Left), planar, bad), std::invalid_argument);
}

TEST_CASE("execute_sticking moves the cloud by the subgoal") {
  std::mt19937_64 rng(5);
  const Cloud box = oracle::box_surface({0.03, 0.04, 0.05}, 20, rng);
  const Transform t = oracle::random_transform(rng, 0.2);
  const Cloud moved = execute_sticking(t, box);
  for (Eigen::Index i = 0; i < box.size(); ++i) {
    CHECK((moved.point(i) - t * Vec3(box.point(i))).norm() < 1e-12);
  }
}

TEST_CASE("required lift is the smallest clearance along the screw") {
  std::mt19937_64 rng(6);
  const int samples = 20;
  const double tol = 0.002;
  const double clearance = 0.01;
  int lifted = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Cloud box = oracle::box_surface({0.03, 0.04, 0.05}, 30, rng);
    box = apply(Transform::FromTranslation(Vec3(0, 0, 0.05)), box);
    Transform subgoal(oracle::random_transform(rng, 0.05).rotation(), Vec3::Zero());
    // keep the end pose resting on the table
    const Cloud end = apply(subgoal, box);
    subgoal = Transform::FromTranslation(Vec3(0, 0, -end.points().row(2).minCoeff())) * subgoal;
    const double h = required_lift(subgoal, box, 0.0, samples, tol, clearance);
    CHECK(h >= 0.0);
    double deepest = std::numeric_limits<double>::infinity();
    for (int i = 1; i <= samples; ++i) {
      const Transform m = interpolate_screw(subgoal, static_cast<double>(i) / samples);
      double min_z = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < box.size(); ++j) min_z = std::min(min_z, (m * Vec3(box.point(j))).z());
      deepest = std::min(deepest, min_z);
      CHECK(min_z + h >= -tol - 1e-12);
    }
    if (h > 0.0) {
      ++lifted;
      CHECK(deepest + (h - clearance) == doctest::Approx(-tol).epsilon(1e-9));
    } else {
      CHECK(deepest >= -tol - 1e-12);
    }
  }
  CHECK(lifted > 0);
}

TEST_CASE("bimanual paths with a lift stay above the table") {
  std::mt19937_64 rng(7);
  WorkspaceModel ws;
  Cloud box = oracle::box_surface({0.04, 0.04, 0.05}, 30, rng);
  box = apply(Transform::FromTranslation(Vec3(0, -0.15, 0.05)), box);
  const Transform subgoal = Transform::RotationAbout(Quat(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY())),
                                                     box.centroid());
  const Transform settle =
      Transform::FromTranslation(Vec3(0, 0, -apply(subgoal, box).points().row(2).minCoeff())) * subgoal;
  PathOptions opt;
  opt.lift_height = required_lift(settle, box, 0.0, opt.waypoints_per_phase, ws.penetration_tolerance);
  CHECK(opt.lift_height > 0.0);
  const PalmPath path = generate_path(SkillType::GraspReorient, bimanual_contact(), settle, opt);
  const double floor = object_floor(box, ws) - ws.penetration_tolerance;
  for (const Waypoint& w : path.waypoints) {
    CHECK(apply(w.object, box).points().row(2).minCoeff() >= floor - 1e-12);
  }
}
