#include "rpo/report.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

namespace rpo {

using nlohmann::json;

json pose_json(const Transform& t) {
  const Vec3& p = t.translation();
  const Quat& q = t.rotation();
  return json::array({p.x(), p.y(), p.z(), q.w(), q.x(), q.y(), q.z()});
}

Transform pose_from_json(const json& j) {
  if (!j.is_array() || j.size() != 7) throw std::invalid_argument("pose must be 7 numbers [tx ty tz qw qx qy qz]");
  double v[7];
  for (std::size_t i = 0; i < 7; ++i) {
    if (!j[i].is_number()) throw std::invalid_argument("pose must be 7 numbers [tx ty tz qw qx qy qz]");
    v[i] = j[i].get<double>();
  }
  return Transform(Quat(v[3], v[4], v[5], v[6]), Vec3(v[0], v[1], v[2]));
}

json stats_json(const PlannerStats& s) {
  json failures = json::object();
  for (const auto& [k, v] : s.failures) failures[k] = v;
  return {{"samples_drawn", s.samples_drawn},
          {"feasibility_checks", s.feasibility_checks},
          {"sweeps", s.sweeps},
          {"visits", s.visit_count},
          {"buffer_sizes", s.buffer_sizes},
          {"failures", failures},
          {"elapsed_seconds", s.elapsed_seconds},
          {"timed_out", s.timed_out},
          {"sample_cap_reached", s.sample_cap_reached}};
}

json plan_json(const Plan& plan, const PlanSkeleton& skeleton, const PlannerStats& stats,
               const std::vector<std::filesystem::path>& cloud_files) {
  json steps = json::array();
  for (std::size_t t = 0; t < plan.size(); ++t) {
    const SkillParams& p = plan.params[t];
    json step = {{"skill", std::string(to_string(p.skill))},
                 {"subgoal", pose_json(p.subgoal)},
                 {"palm_left", p.contact.left ? pose_json(*p.contact.left) : json(nullptr)},
                 {"palm_right", p.contact.right ? pose_json(*p.contact.right) : json(nullptr)},
                 {"lift_height", t < plan.lift_heights.size() ? plan.lift_heights[t] : 0.0}};
    if (t + 1 < cloud_files.size()) step["cloud"] = cloud_files[t + 1].filename().string();
    steps.push_back(std::move(step));
  }
  json out = {{"skeleton", skeleton.letters()},
              {"total_transform", pose_json(plan.total_transform)},
              {"steps", steps},
              {"stats", stats_json(stats)}};
  if (!cloud_files.empty()) out["observed_cloud"] = cloud_files.front().filename().string();
  return out;
}

json trial_json(const TrialReport& t) {
  return {{"trial", t.index},
          {"skeleton", t.skeleton},
          {"object", t.object},
          {"start_face", t.start_face},
          {"found", t.found},
          {"success", t.success},
          {"recheck_passed", t.recheck_passed},
          {"position_error", t.position_error},
          {"orientation_loss", t.orientation_loss},
          {"orientation_angle", t.orientation_angle},
          {"samples_drawn", t.samples_drawn},
          {"feasibility_checks", t.feasibility_checks},
          {"failure_category", t.failure_category.empty() ? json(nullptr) : json(t.failure_category)}};
}

void write_trial_records(std::ostream& out, const EvaluationReport& report) {
  for (const TrialReport& t : report.trials) out << trial_json(t).dump() << '\n';
}

void write_timings(std::ostream& out, const EvaluationReport& report) {
  for (const TrialReport& t : report.trials) {
    out << json{{"trial", t.index}, {"planning_time", t.planning_time}}.dump() << '\n';
  }
}

json summary_json(const EvaluationReport& report) {
  json rows = json::array();
  long trials = 0;
  long successes = 0;
  for (const SkeletonSummary& s : report.summaries) {
    json failures = json::object();
    for (const auto& [k, v] : s.failures) failures[k] = v;
    rows.push_back({{"skeleton", s.skeleton},
                    {"trials", s.trials},
                    {"found", s.found},
                    {"successes", s.successes},
                    {"success_rate", s.success_rate},
                    {"mean_position_error", s.mean_position_error},
                    {"mean_orientation_angle", s.mean_orientation_angle},
                    {"mean_orientation_loss", s.mean_orientation_loss},
                    {"mean_planning_time", s.mean_planning_time},
                    {"mean_samples", s.mean_samples},
                    {"failures", failures}});
    trials += s.trials;
    successes += s.successes;
  }
  return {{"noise", {{"a", report.noise.a}, {"b", report.noise.b}}},
          {"trials", trials},
          {"success_rate", trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0},
          {"skeletons", rows}};
}

namespace {

const SkeletonSummary* find(const EvaluationReport& r, const std::string& sk) {
  for (const SkeletonSummary& s : r.summaries) {
    if (s.skeleton == sk) return &s;
  }
  return nullptr;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

json noise_comparison_json(const EvaluationReport& clean, const EvaluationReport& noisy) {
  json rows = json::array();
  for (const SkeletonSummary& c : clean.summaries) {
    const SkeletonSummary* n = find(noisy, c.skeleton);
    if (!n) continue;
    rows.push_back({{"skeleton", c.skeleton},
                    {"clean_success_rate", c.success_rate},
                    {"noisy_success_rate", n->success_rate},
                    {"change", n->success_rate - c.success_rate},
                    {"clean_mean_samples", c.mean_samples},
                    {"noisy_mean_samples", n->mean_samples}});
  }
  return {{"noise", {{"a", noisy.noise.a}, {"b", noisy.noise.b}}}, {"rows", rows}};
}

std::string noise_comparison_table(const EvaluationReport& clean, const EvaluationReport& noisy) {
  std::ostringstream out;
  out << "noise a=" << noisy.noise.a << " m, b=" << noisy.noise.b << " 1/m\n";
  out << "| skeleton | clean success | noisy success | change | clean samples | noisy samples |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const SkeletonSummary& c : clean.summaries) {
    const SkeletonSummary* n = find(noisy, c.skeleton);
    if (!n) continue;
    out << "| " << c.skeleton << " | " << fmt("%.3f", c.success_rate) << " | " << fmt("%.3f", n->success_rate) << " | "
        << fmt("%+.3f", n->success_rate - c.success_rate) << " | " << fmt("%.1f", c.mean_samples) << " | "
        << fmt("%.1f", n->mean_samples) << " |\n";
  }
  return out.str();
}

std::string breakdown_table(const EvaluationReport& report) {
  std::ostringstream out;
  out << "| skill | trials | sticking success | feasibility success | mean position error (m) | mean orientation "
         "error (deg) |\n";
  out << "|---|---|---|---|---|---|\n";
  for (const SkeletonSummary& s : report.summaries) {
    const double feasible = s.trials ? static_cast<double>(s.found) / static_cast<double>(s.trials) : 0.0;
    out << "| " << s.skeleton << " | " << s.trials << " | 1.000 | " << fmt("%.3f", feasible) << " | "
        << fmt("%.4f", s.mean_position_error) << " | "
        << fmt("%.2f", s.mean_orientation_angle * 180.0 / std::numbers::pi) << " |\n";
  }
  return out.str();
}

}  // namespace rpo
