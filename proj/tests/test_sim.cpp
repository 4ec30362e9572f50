#include <doctest.h>

#include <numbers>

#include "oracle.hpp"
#include "rpo/sim.hpp"

using namespace rpo;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Cuboid object_at(const Transform& pose, const Vec3& half = Vec3(0.05, 0.04, 0.03)) { return Cuboid{half, pose}; }

}  // namespace

TEST_CASE("face-down rotations put each face on the table") {
  for (int f = 0; f < 6; ++f) {
    const Vec3 n = face_down_rotation(f) * face_normal(f);
    CHECK((n + Vec3::UnitZ()).norm() < 1e-12);
    const auto [face, tilt] = resting_face(Transform(face_down_rotation(f), Vec3::Zero()));
    CHECK(face == f);
    CHECK(tilt < 1e-6);
  }
}

TEST_CASE("stable poses rest on the table") {
  const Scene scene = Scene::Default();
  for (std::uint64_t s = 0; s < 200; ++s) {
    const Cuboid c = random_cuboid(Seed{s});
    CHECK((c.half_extents.array() >= 0.025).all());
    CHECK((c.half_extents.array() <= 0.07).all());
    const Transform pose = sample_stable_pose(c, scene, Seed{s + 1000});
    double min_z = std::numeric_limits<double>::infinity();
    for (const Vec3& p : cuboid_corners(c, pose)) min_z = std::min(min_z, p.z());
    CHECK(min_z == doctest::Approx(scene.table_z()).epsilon(1e-12));
    CHECK(resting_face(pose).second < 1e-6);
    CHECK(scene.table().contains(pose.translation().x(), pose.translation().y()));
  }
}

TEST_CASE("stable pose faces are uniform") {
  const Scene scene = Scene::Default();
  const Cuboid c = random_cuboid(Seed{1});
  const int n = 6000;
  std::array<int, 6> counts{};
  for (int i = 0; i < n; ++i) {
    ++counts[static_cast<std::size_t>(resting_face(sample_stable_pose(c, scene, Seed{static_cast<std::uint64_t>(i)})).first)];
  }
  const double mean = n / 6.0;
  const double sd = std::sqrt(n * (1.0 / 6.0) * (5.0 / 6.0));
  for (int k : counts) CHECK(std::abs(k - mean) < 4.0 * sd);
}

TEST_CASE("synthesized points lie on visible faces only") {
  const Scene scene = Scene::Default();
  const Cuboid c = object_at(stable_pose(Cuboid{Vec3(0.05, 0.04, 0.03), {}}, 5, 0.3, 0.05, -0.1, 0.0));
  const SynthesizedCloud sc = synthesize_cloud(scene, c, 2000, Seed{2}, 100);
  CHECK(sc.dense.size() == 2000);
  CHECK(sc.sparse.size() == 100);
  CHECK(sc.camera.size() == 2000);
  const Transform to_body = invert(c.pose);
  for (Eigen::Index i = 0; i < sc.dense.size(); ++i) {
    const Vec3 local = to_body * Vec3(sc.dense.point(i));
    const Vec3 gap = (local.cwiseAbs() - c.half_extents);
    CHECK(gap.maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));
    CHECK((gap.array() <= 1e-9).all());
    // the bottom face is hidden from cameras above the table
    CHECK(local.z() > -c.half_extents.z() + 1e-9);
    const Vec3 cam = scene.cameras.at(static_cast<std::size_t>(sc.camera[static_cast<std::size_t>(i)])).position;
    CHECK(cam.z() > 0.0);
  }
  for (std::size_t j = 0; j < sc.sparse_indices.size(); ++j) {
    CHECK(sc.sparse.point(static_cast<Eigen::Index>(j)) == sc.dense.point(sc.sparse_indices[j]));
  }
  CHECK_THROWS_AS(synthesize_cloud(scene, c, 50, Seed{2}), std::invalid_argument);
}

TEST_CASE("depth noise moves points along camera rays with the requested spread") {
  const Scene scene = Scene::Default();
  const Cuboid c = object_at(stable_pose(Cuboid{Vec3(0.05, 0.04, 0.03), {}}, 5, 0.0, 0.0, -0.15, 0.0));
  const SynthesizedCloud sc = synthesize_cloud(scene, c, 20000, Seed{3});

  CHECK((add_depth_noise(sc.dense, sc.camera, scene, 0.0, 0.0, Seed{4}).points() - sc.dense.points()).norm() == 0.0);

  for (auto [a, b] : {std::pair{0.004, 0.0}, std::pair{0.0, 0.02}, std::pair{0.002, 0.019}}) {
    const Cloud noisy = add_depth_noise(sc.dense, sc.camera, scene, a, b, Seed{5});
    double sum = 0.0;
    double sq = 0.0;
    const Eigen::Index n = noisy.size();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec3 cam = scene.cameras[static_cast<std::size_t>(sc.camera[static_cast<std::size_t>(i)])].position;
      const Vec3 ray = Vec3(sc.dense.point(i)) - cam;
      const double d = ray.norm();
      const Vec3 disp = noisy.point(i) - sc.dense.point(i);
      const double along = disp.dot(ray / d);
      CHECK((disp - along * ray / d).norm() < 1e-12);
      const double z = along / (a + b * d * d);
      sum += z;
      sq += z * z;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sq / static_cast<double>(n) - mean * mean;
    // standardized displacements are N(0, 1)
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / static_cast<double>(n)));
  }
  CHECK_THROWS_AS(add_depth_noise(sc.dense, sc.camera, scene, -0.1, 0.0, Seed{1}), std::invalid_argument);
}

TEST_CASE("orientation error of an axis-angle offset") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  for (int i = 0; i < 500; ++i) {
    const Quat q = oracle::random_transform(rng).rotation();
    const Vec3 axis = oracle::random_transform(rng).translation().normalized();
    const double theta = u(rng);
    const Quat r = Quat(Eigen::AngleAxisd(theta, axis)) * q;
    const OrientationError e = orientation_error(q, r);
    CHECK(e.angle == doctest::Approx(theta).epsilon(1e-6));
    CHECK(e.loss == doctest::Approx(std::pow(std::sin(theta / 2), 2)).epsilon(1e-9));
    const OrientationError flipped = orientation_error(q, Quat(-r.coeffs()));
    CHECK(flipped.loss == doctest::Approx(e.loss).epsilon(1e-12));
  }
  const OrientationError same = orientation_error(Quat::Identity(), Quat::Identity());
  CHECK(same.loss == 0.0);
  CHECK(same.angle == 0.0);
}

TEST_CASE("settling snaps small tilts and leaves large ones") {
  const Cuboid c{Vec3(0.05, 0.04, 0.03), {}};
  const Transform flat = stable_pose(c, 2, 0.4, 0.1, -0.1, 0.0);
  const Transform tip(Quat(Eigen::AngleAxisd(3 * kDeg, Vec3(1, 1, 0).normalized())) * flat.rotation(),
                      flat.translation() + Vec3(0, 0, 0.004));
  const Transform settled = settle(c, tip, 0.0, 5 * kDeg);
  const auto [face, tilt] = resting_face(settled);
  CHECK(face == 2);
  CHECK(tilt == 0.0);
  CHECK(settled.translation().z() == doctest::Approx(c.half_extents.y()));
  CHECK(settled.translation().head<2>() == tip.translation().head<2>());
  // the smallest rotation that flattens the face
  CHECK(rotation_angle(settled, tip) == doctest::Approx(3 * kDeg).epsilon(1e-6));

  const Transform steep(Quat(Eigen::AngleAxisd(10 * kDeg, Vec3::UnitX())) * flat.rotation(), flat.translation());
  const Transform kept = settle(c, steep, 0.0, 5 * kDeg);
  CHECK(translation_distance(kept, steep) == 0.0);
  CHECK(rotation_angle(kept, steep) == 0.0);
}

TEST_CASE("executing a plan composes its subgoals") {
  std::mt19937_64 rng(8);
  const Scene scene = Scene::Default();
  const Cuboid c = object_at(oracle::random_transform(rng, 0.1));
  Plan p;
  const Transform a = oracle::random_transform(rng, 0.1);
  const Transform b = oracle::random_transform(rng, 0.1);
  p.params.push_back({SkillType::PullRight, a, {}, std::nullopt});
  p.params.push_back({SkillType::GraspReorient, b, {}, std::nullopt});
  const Transform end = execute_plan(p, scene, c);
  auto expected = oracle::multiply(oracle::homogeneous(b), oracle::multiply(oracle::homogeneous(a), oracle::homogeneous(c.pose)));
  CHECK(oracle::max_abs_diff(oracle::homogeneous(end), expected) < 1e-12);
}

TEST_CASE("contact masks mark points that end on the table") {
  const Cloud cloud = Cloud::FromVector({Vec3(0, 0, 0.05), Vec3(0, 0, 0.2), Vec3(0.1, 0, 0.058)});
  const Mask m = contact_mask(cloud, Transform::FromTranslation(Vec3(0, 0, -0.05)), 0.0);
  CHECK(m == Mask{true, false, true});
}

TEST_CASE("training data is deterministic and labels the placed face") {
  const Scene scene = Scene::Default();
  const TrainingData a = generate_training_data(2, 4, SkillType::GraspReorient, scene, Seed{11});
  const TrainingData b = generate_training_data(2, 4, SkillType::GraspReorient, scene, Seed{11});
  CHECK(a.attempts == 4);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const TrainingSample& s = a.samples[i];
    CHECK(translation_distance(s.subgoal, b.samples[i].subgoal) == 0.0);
    CHECK(s.mask == b.samples[i].mask);
    CHECK(s.mask == contact_mask(s.cloud, s.subgoal, scene.table_z()));
    CHECK(std::count(s.mask.begin(), s.mask.end(), true) > 0);
    const SkillParams p = to_skill_params(s);
    CHECK(p.skill == s.skill);
    CHECK(p.mask == s.mask);
  }
  CHECK_THROWS_AS(generate_training_data(0, 4, SkillType::PullRight, scene, Seed{1}), std::invalid_argument);
}

TEST_CASE("single-arm training samples name the arm that makes contact") {
  const Scene scene = Scene::Default();
  for (SkillType skill : {SkillType::PullRight, SkillType::PushLeft}) {
    const TrainingData d = generate_training_data(3, 30, skill, scene, Seed{12});
    CHECK_FALSE(d.samples.empty());
    for (const TrainingSample& s : d.samples) {
      CHECK(same_family(s.skill, skill));
      CHECK(s.contact.palm(arm_of(s.skill)).has_value());
      CHECK_NOTHROW(generate_path(s.skill, s.contact, s.subgoal));
    }
  }
}
