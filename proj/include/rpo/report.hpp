// JSON serialization of plans, trial records and evaluation summaries.
#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rpo/planner.hpp"
#include "rpo/sim.hpp"

namespace rpo {

nlohmann::json pose_json(const Transform& t);  // [tx, ty, tz, qw, qx, qy, qz]
Transform pose_from_json(const nlohmann::json& j);

nlohmann::json stats_json(const PlannerStats& stats);

/// Plan file: skeleton, per-step subgoal and palm poses, cloud file
/// references and planner statistics.
nlohmann::json plan_json(const Plan& plan, const PlanSkeleton& skeleton, const PlannerStats& stats,
                         const std::vector<std::filesystem::path>& cloud_files);

/// Deterministic per-trial record (wall-clock time excluded).
nlohmann::json trial_json(const TrialReport& trial);

/// One JSON record per line, in trial order.
void write_trial_records(std::ostream& out, const EvaluationReport& report);
/// Wall-clock planning times, one line per trial.
void write_timings(std::ostream& out, const EvaluationReport& report);

nlohmann::json summary_json(const EvaluationReport& report);

/// Per-skeleton success before and after adding sensor noise.
nlohmann::json noise_comparison_json(const EvaluationReport& clean, const EvaluationReport& noisy);
std::string noise_comparison_table(const EvaluationReport& clean, const EvaluationReport& noisy);

/// Single-step breakdown: errors and feasibility success per skill.
std::string breakdown_table(const EvaluationReport& report);

}  // namespace rpo
