// Skill-parameter samplers behind one interface: the hand-designed baselines,
// mask-based subgoal registration, a file replay stub and a test stub.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rpo/analysis.hpp"
#include "rpo/random.hpp"
#include "rpo/scene.hpp"
#include "rpo/skills.hpp"

namespace rpo {

struct SkillParams {
  SkillType skill;
  Transform subgoal;
  ContactPose contact;
  std::optional<Mask> mask;
};

/// A sampler could not produce parameters (missing geometry, failed search).
struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mask registration did not place the mask on the support.
struct RegistrationError : SamplerError {
  RegistrationError() : SamplerError("registration failed") {}
};

/// Extra information a planner can hand to a sampler.
struct SampleHints {
  /// Planes already segmented from this cloud (same frame).
  const std::vector<Plane>* planes = nullptr;
  /// When set, the subgoal is given and only contacts are sampled.
  std::optional<Transform> fixed_subgoal;
  /// Where the cloud's points sit relative to the support (defaults to the table).
  std::optional<double> support_z;
};

class SkillSampler {
 public:
  virtual ~SkillSampler() = default;
  /// Deterministic for fixed inputs and seed. Throws SamplerError on failure.
  virtual SkillParams draw(SkillType skill, const Cloud& cloud, const Scene& scene, Seed seed,
                           const SampleHints& hints = {}) const = 0;
  /// Planes to cache per planner session; empty if the sampler needs none.
  virtual std::vector<Plane> segment(const Cloud& cloud, Seed seed) const;
};

struct RegistrationOptions {
  IcpOptions icp{0.05, 50, 1e-6, std::nullopt};
  /// The placed mask centroid must end within this distance of the support
  /// height, and its fitted normal within `max_tilt` of vertical.
  double contact_tolerance = 0.005;
  double max_tilt = 10.0 * std::numbers::pi / 180.0;
  /// Below this ICP fitness the alternate pitch axis is tried.
  double min_fitness = 0.5;
  bool pitch = true;
  std::size_t max_icp_points = 100;
};

/// Subgoal that puts the masked points on the target support: an initial
/// pi/2 pitch about the masked centroid (tipping the mask face down),
/// followed by `planar_init`, refined by ICP of the masked points onto the
/// target. Throws RegistrationError.
Transform register_mask_subgoal(const Cloud& cloud, const Mask& mask, const Cloud& target,
                                const Transform& planar_init, const RegistrationOptions& options = {});
Transform register_mask_subgoal(const Cloud& cloud, const Mask& mask, const KdTree& target, double support_z,
                                const Transform& planar_init, const RegistrationOptions& options = {});

/// Outward-pointing average normal of the masked points (PCA plane fit).
Vec3 mask_normal(const Cloud& cloud, const Mask& mask);

/// Heuristic parameters used by the baseline samplers.
struct BaselineOptions {
  double contact_min_height = 0.015;
  double antipodal_angle = 20.0 * std::numbers::pi / 180.0;
  double ray_step = 0.002;
  double ray_tolerance = 0.006;
  int grasp_attempts = 200;
  double top_angle = 20.0 * std::numbers::pi / 180.0;
  double side_angle = 30.0 * std::numbers::pi / 180.0;
  double push_cone = 30.0 * std::numbers::pi / 180.0;
  double push_min = 0.03;
  double push_max = 0.15;
  double push_max_yaw = 30.0 * std::numbers::pi / 180.0;
  PlaneSegmentationOptions planes;
  RegistrationOptions registration;
};

SkillParams baseline_grasp_sampler(const Cloud& cloud, const Scene& scene, Seed seed, const SampleHints& hints = {},
                                   const BaselineOptions& options = {});
SkillParams baseline_pick_place_sampler(const Cloud& cloud, const Scene& scene, Seed seed,
                                        const SampleHints& hints = {}, const BaselineOptions& options = {});
SkillParams baseline_pull_sampler(const Cloud& cloud, const Scene& scene, Seed seed, const SampleHints& hints = {},
                                  const BaselineOptions& options = {});
SkillParams baseline_push_sampler(const Cloud& cloud, const Scene& scene, Seed seed, const SampleHints& hints = {},
                                  const BaselineOptions& options = {});

/// Dispatches to the baseline sampler of each skill.
class BaselineSampler : public SkillSampler {
 public:
  explicit BaselineSampler(BaselineOptions options = {}) : options_(std::move(options)) {}
  SkillParams draw(SkillType skill, const Cloud& cloud, const Scene& scene, Seed seed,
                   const SampleHints& hints = {}) const override;
  std::vector<Plane> segment(const Cloud& cloud, Seed seed) const override;
  const BaselineOptions& options() const { return options_; }

 private:
  BaselineOptions options_;
};

/// Replays recorded parameters, picking uniformly among records of the
/// requested skill family.
class ReplaySampler : public SkillSampler {
 public:
  explicit ReplaySampler(std::vector<SkillParams> records);
  static ReplaySampler FromFile(const std::filesystem::path& path);
  SkillParams draw(SkillType skill, const Cloud& cloud, const Scene& scene, Seed seed,
                   const SampleHints& hints = {}) const override;
  const std::vector<SkillParams>& records() const { return records_; }

 private:
  std::vector<SkillParams> records_;
};

/// Always returns parameters whose motion is out of reach.
class InfeasibleSampler : public SkillSampler {
 public:
  SkillParams draw(SkillType skill, const Cloud& cloud, const Scene& scene, Seed seed,
                   const SampleHints& hints = {}) const override;
};

/// One record per line:
///   <skill> tx ty tz qw qx qy qz L <7 numbers | -> R <7 numbers | -> [M i0 i1 ... N <size>]
void write_skill_params(std::ostream& out, const SkillParams& params);
SkillParams parse_skill_params(const std::string& line);
std::vector<SkillParams> read_skill_params(std::istream& in);

}  // namespace rpo
