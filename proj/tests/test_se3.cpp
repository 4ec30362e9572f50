#include <doctest.h>

#include <numbers>
#include <set>

#include "oracle.hpp"
#include "rpo/se3.hpp"

using namespace rpo;

TEST_CASE("compose, invert and apply agree with homogeneous matrices") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const Transform a = oracle::random_transform(rng);
    const Transform b = oracle::random_transform(rng);
    const auto ma = oracle::homogeneous(a);
    const auto mb = oracle::homogeneous(b);
    CHECK(oracle::max_abs_diff(oracle::homogeneous(a * b), oracle::multiply(ma, mb)) < 1e-12);
    CHECK(oracle::max_abs_diff(oracle::homogeneous(invert(a)), oracle::rigid_inverse(ma)) < 1e-12);
    const Vec3 p(0.3, -0.2, 0.7);
    const auto q = oracle::apply(ma, {p.x(), p.y(), p.z()});
    CHECK((a * p - Vec3(q[0], q[1], q[2])).norm() < 1e-12);
  }
}

TEST_CASE("matrix round trip and quaternion sign canonicalization") {
  std::mt19937_64 rng(2);
  const Transform t = oracle::random_transform(rng);
  const Transform back = Transform::FromMatrix(t.matrix());
  CHECK(translation_distance(t, back) < 1e-12);
  CHECK(rotation_angle(t, back) < 1e-7);
  const Quat q(0.2, 0.4, -0.1, 0.3);
  const Transform pos(q, Vec3::Zero());
  const Transform neg(Quat(-q.coeffs()), Vec3::Zero());
  CHECK(pos.rotation().coeffs().isApprox(neg.rotation().coeffs()));
  CHECK(pos.rotation().w() >= 0.0);
  CHECK_THROWS_AS(Transform(Quat(0, 0, 0, 0), Vec3::Zero()), std::invalid_argument);
}

TEST_CASE("rotation about a pivot keeps the pivot fixed") {
  const Vec3 pivot(0.1, -0.2, 0.3);
  const Transform t = Transform::RotationAbout(Quat(Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized())), pivot);
  CHECK((t * pivot - pivot).norm() < 1e-15);
}

TEST_CASE("screw interpolation endpoints, additivity and zero-pitch screws") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Transform t = oracle::random_transform(rng, 0.3);
    CHECK(translation_distance(interpolate_screw(t, 0.0), Transform()) == 0.0);
    CHECK(translation_distance(interpolate_screw(t, 1.0), t) == 0.0);
    const Transform ab = interpolate_screw(t, 0.3) * interpolate_screw(t, 0.45);
    const Transform c = interpolate_screw(t, 0.75);
    CHECK(translation_distance(ab, c) < 1e-9);
    CHECK(rotation_angle(ab, c) < 1e-7);
  }
  // a pure rotation about an axis through p stays a rotation about that axis
  const Vec3 axis = Vec3(0.3, -1.0, 0.5).normalized();
  const Vec3 p(0.2, 0.1, -0.4);
  const Transform t = Transform::RotationAbout(Quat(Eigen::AngleAxisd(2.0, axis)), p);
  const Transform half = interpolate_screw(t, 0.5);
  const Transform expected = Transform::RotationAbout(Quat(Eigen::AngleAxisd(1.0, axis)), p);
  CHECK(translation_distance(half, expected) < 1e-12);
  CHECK(rotation_angle(half, expected) < 1e-7);
  // pure translation interpolates linearly
  const Transform tr = Transform::FromTranslation(Vec3(1, 2, 3));
  CHECK((interpolate_screw(tr, 0.25).translation() - Vec3(0.25, 0.5, 0.75)).norm() < 1e-15);
  CHECK_THROWS_AS(interpolate_screw(tr, 1.5), std::invalid_argument);
}

TEST_CASE("planar projection keeps yaw and xy") {
  const Transform t(Quat(Eigen::AngleAxisd(0.4, Vec3::UnitZ())) * Quat(Eigen::AngleAxisd(0.1, Vec3::UnitX())),
                    Vec3(0.1, 0.2, 0.3));
  const Transform p = project_se2(t);
  CHECK(p.translation().z() == 0.0);
  CHECK(p.translation().head<2>() == t.translation().head<2>());
  CHECK(std::abs(yaw_of(p) - yaw_of(t)) < 1e-12);
  CHECK((p.rotation() * Vec3::UnitZ() - Vec3::UnitZ()).norm() < 1e-12);
  const Transform planar = Transform::FromAxisAngle(Vec3::UnitZ(), -2.0, Vec3(0.5, -0.5, 0.0));
  CHECK(translation_distance(project_se2(planar), planar) < 1e-15);
  CHECK(rotation_angle(project_se2(planar), planar) < 1e-7);
}

TEST_CASE("point cloud validation and transforms") {
  Matrix3X<double> p(3, 2);
  p << 0, 1, 0, 0, 0, 0;
  Matrix3X<double> bad(3, 2);
  bad << 0, 2, 0, 0, 1, 0;
  CHECK_THROWS_AS(Cloud(Matrix3X<double>(3, 0)), std::invalid_argument);
  CHECK_THROWS_AS(Cloud(p, bad), std::invalid_argument);
  CHECK_THROWS_AS(Cloud(p, std::nullopt, Mask{true}), std::invalid_argument);
  Matrix3X<double> n(3, 2);
  n << 0, 0, 0, 0, 1, 1;
  const Cloud c(p, n, Mask{true, false});
  const Transform t = Transform::FromAxisAngle(Vec3::UnitX(), std::numbers::pi / 2, Vec3(0, 0, 1));
  const Cloud m = apply(t, c);
  CHECK((m.point(1) - Vec3(1, 0, 1)).norm() < 1e-12);
  CHECK((m.normals().col(0) - Vec3(0, -1, 0)).norm() < 1e-12);
  CHECK(m.mask() == Mask{true, false});
  CHECK(c.masked_indices() == std::vector<Eigen::Index>{0});
}

TEST_CASE("centering subtracts the centroid and appends it") {
  std::mt19937_64 rng(4);
  const Cloud c = oracle::box_surface(Vec3(0.1, 0.2, 0.3), 20, rng);
  const Cloud moved = apply(Transform::FromTranslation(Vec3(1, 2, 3)), c);
  const auto cc = center_and_augment(moved);
  CHECK(cc.rows.leftCols<3>().colwise().sum().norm() < 1e-10);
  CHECK((cc.rows.row(0).rightCols<3>().transpose() - moved.centroid()).norm() == 0.0);
}

TEST_CASE("uniform downsampling is reproducible and unbiased") {
  std::mt19937_64 rng(5);
  const Cloud c = oracle::box_surface(Vec3(0.1, 0.2, 0.3), 334, rng);  // 2004 points
  const Cloud a = downsample_uniform(c, 100, Seed{9});
  const Cloud b = downsample_uniform(c, 100, Seed{9});
  CHECK(a.size() == 100);
  CHECK(a.points() == b.points());
  CHECK(downsample_uniform(c, 100, Seed{10}).points() != a.points());
  // without replacement: 100 distinct source points
  std::set<std::tuple<double, double, double>> seen;
  for (Eigen::Index i = 0; i < a.size(); ++i) seen.insert({a.point(i).x(), a.point(i).y(), a.point(i).z()});
  CHECK(seen.size() == 100);
  // sample-mean standard error with finite-population correction
  const double N = static_cast<double>(c.size());
  const double n = 100.0;
  const Vec3 mean = c.centroid();
  const Vec3 var = (c.points().colwise() - mean).array().square().rowwise().sum() / N;
  const Vec3 sigma = (var.array() / n * (N - n) / (N - 1)).sqrt();
  int outside = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Vec3 d = (downsample_uniform(c, 100, Seed{s}).centroid() - mean).cwiseAbs();
    if ((d.array() > 3.0 * sigma.array()).any()) ++outside;
  }
  // P(any of 3 axes beyond 3 sigma) is about 0.8%; allow generous slack
  CHECK(outside <= 8);
  // with replacement when asked for more points than exist
  CHECK(downsample_uniform(a, 150, Seed{1}).size() == 150);
  CHECK_THROWS_AS(downsample_uniform(c, 0, Seed{1}), std::invalid_argument);
}

TEST_CASE("seed streams are independent and reproducible") {
  const Seed s{42};
  CHECK(s.derive("a") == s.derive("a"));
  CHECK_FALSE(s.derive("a") == s.derive("b"));
  CHECK_FALSE(s.derive("a", 0) == s.derive("a", 1));
  CHECK_FALSE(Seed{1}.derive("a") == Seed{2}.derive("a"));
}
