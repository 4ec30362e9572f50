#include <doctest.h>

#include <numbers>

#include "oracle.hpp"
#include "rpo/config.hpp"
#include "rpo/report.hpp"

using namespace rpo;

TEST_CASE("a minimal config takes every default") {
  const ScenarioConfig c = parse_config(R"({"schema": 1})", "/data/run");
  CHECK(c.skeletons.size() == 1);
  CHECK(c.skeletons[0].letters() == "pg");
  CHECK(c.scene.cameras.size() == 4);
  CHECK(c.planner.k_max == 10);
  CHECK_FALSE(c.noise.active());
  CHECK_FALSE(c.cloud.has_value());
  CHECK(c.output_dir == std::filesystem::path("/data/run/out"));
  CHECK(c.sampler.kind == SamplerSpec::Kind::Baseline);
}

TEST_CASE("config values are read and paths resolved") {
  const ScenarioConfig c = parse_config(R"({
    "schema": 1,
    "seed": 42,
    "skeletons": ["pgp", "gp"],
    "planner": {"k_max": 4, "time_budget": 12.5, "orientation_tolerance_deg": 10, "max_samples": 500},
    "noise": {"a": 0.002, "b": 0.019},
    "output_dir": "results",
    "cloud": "/abs/cloud.ply",
    "sampler": {"type": "replay", "path": "samples.txt"},
    "object": {"half_extents": [0.03, 0.02, 0.01], "face": 2, "yaw_deg": 90, "x": 0.1, "y": -0.2},
    "evaluation": {"n_objects": 3, "trials_per_skeleton": 2, "settle": true}
  })", "base");
  CHECK(c.seed.value == 42);
  REQUIRE(c.skeletons.size() == 2);
  CHECK(c.skeletons[1].letters() == "gp");
  CHECK(c.planner.k_max == 4);
  CHECK(c.planner.time_budget == 12.5);
  CHECK(c.planner.orientation_tolerance == doctest::Approx(10 * std::numbers::pi / 180));
  CHECK(c.planner.max_samples == 500);
  CHECK(c.noise.active());
  CHECK(c.output_dir == std::filesystem::path("base/results"));
  CHECK(*c.cloud == std::filesystem::path("/abs/cloud.ply"));
  CHECK(c.sampler.kind == SamplerSpec::Kind::Replay);
  CHECK(c.sampler.replay_path == std::filesystem::path("base/samples.txt"));
  CHECK(c.object.face == 2);
  CHECK(c.object.yaw == doctest::Approx(std::numbers::pi / 2));
  CHECK(c.evaluation.n_objects == 3);
  CHECK(c.evaluation.options.execution.settle);
}

TEST_CASE("invalid configs are rejected") {
  const char* bad[] = {
      "not json",
      R"([1, 2])",
      R"({})",
      R"({"schema": 2})",
      R"({"schema": 1, "colour": "red"})",
      R"({"schema": 1, "planner": {"k_max": "ten"}})",
      R"({"schema": 1, "planner": {"kmax": 3}})",
      R"({"schema": 1, "planner": {"k_max": 0}})",
      R"({"schema": 1, "planner": {"time_budget": -1}})",
      R"({"schema": 1, "skeleton": "pxg"})",
      R"({"schema": 1, "skeleton": "pg", "skeletons": ["pg"]})",
      R"({"schema": 1, "skeletons": []})",
      R"({"schema": 1, "sampler": {"type": "replay"}})",
      R"({"schema": 1, "sampler": {"type": "learned"}})",
      R"({"schema": 1, "object": {"face": 6}})",
      R"({"schema": 1, "object": {"half_extents": [0.1, 0.1]}})",
      R"({"schema": 1, "scene": {"cameras": []}})",
      R"({"schema": 1, "scene": {"workspace": {"reach_radius": 0.05}}})",
      R"({"schema": 1, "evaluation": {"n_objects": 0}})",
      R"({"schema": 1, "noise": {"a": -0.1}})",
  };
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_config(text), ConfigError);
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("pose json round trip") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    const Transform t = oracle::random_transform(rng);
    const nlohmann::json j = pose_json(t);
    REQUIRE(j.size() == 7);
    const Transform back = pose_from_json(j);
    CHECK(translation_distance(t, back) == 0.0);
    CHECK(rotation_angle(t, back) < 1e-7);
  }
  CHECK_THROWS(pose_from_json(nlohmann::json::array({1, 2, 3})));
}

TEST_CASE("trial records leave out wall-clock time") {
  TrialReport t;
  t.skeleton = "pg";
  t.planning_time = 3.5;
  t.failure_category = "timeout";
  const nlohmann::json j = trial_json(t);
  CHECK_FALSE(j.contains("planning_time"));
  CHECK(j.at("failure_category") == "timeout");
  t.failure_category.clear();
  CHECK(trial_json(t).at("failure_category").is_null());
}
