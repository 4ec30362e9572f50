// Point-cloud perception primitives: nearest-neighbour search, normal
// estimation, RANSAC plane segmentation and point-to-point ICP.
#pragma once

#include <filesystem>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpo/se3.hpp"

namespace rpo {

/// Static 3-d tree over a copy of the input points.
class KdTree {
 public:
  explicit KdTree(const Matrix3X<double>& points);
  explicit KdTree(const Cloud& cloud) : KdTree(cloud.points()) {}

  Eigen::Index size() const { return points_.cols(); }
  const Matrix3X<double>& points() const { return points_; }

  /// k nearest indices, ascending by distance, ties broken by lower index.
  std::vector<Eigen::Index> knn(const Vec3& query, Eigen::Index k) const;

  struct Hit {
    Eigen::Index index;
    double distance;
  };
  /// Closest point, or nothing when none lies within max_distance.
  std::optional<Hit> nearest(const Vec3& query,
                             double max_distance = std::numeric_limits<double>::infinity()) const;

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    Eigen::Index begin = 0;
    Eigen::Index end = 0;
    int left = -1;
    int right = -1;
  };

  int build(Eigen::Index begin, Eigen::Index end);

  Matrix3X<double> points_;
  std::vector<Eigen::Index> order_;
  std::vector<Node> nodes_;
};

struct InsufficientPoints : std::invalid_argument {
  InsufficientPoints() : std::invalid_argument("insufficient points") {}
};

/// k nearest neighbours of `query` by exhaustive-free tree search.
std::vector<Eigen::Index> knn(const Cloud& cloud, const Vec3& query, Eigen::Index k);

inline constexpr Eigen::Index kNormalNeighbors = 16;

/// PCA normals over k-NN neighbourhoods, flipped to face the nearest view point.
Cloud estimate_normals(const Cloud& cloud, Eigen::Index k, std::span<const Vec3> view_points);

/// Flips normals so they point away from the cloud centroid (convex-object prior).
Cloud orient_normals_outward(const Cloud& cloud);

struct Plane {
  Vec3 normal;
  double offset = 0.0;  // plane is normal . p = offset
  std::vector<Eigen::Index> inliers;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
};

/// Moves a plane along with the cloud it was segmented from.
Plane transform_plane(const Transform& t, const Plane& plane);

struct PlaneSegmentationOptions {
  double inlier_threshold = 0.005;
  Eigen::Index min_inliers = 10;
  int max_planes = 6;
  /// Used only when the cloud has normals: inlier normals must lie within
  /// this angle of the plane normal (either sign).
  double max_normal_angle = 30.0 * std::numbers::pi / 180.0;
};

/// Iterative RANSAC: fit the largest plane, remove its inliers, repeat.
std::vector<Plane> segment_planes(const Cloud& cloud, const PlaneSegmentationOptions& options, Seed seed);

/// Hypothesis count for 99.9% confidence at 25% inlier ratio, capped at 2000.
int ransac_iteration_budget();

/// Least-squares rigid transform mapping src[i] onto dst[i] (Kabsch, with
/// reflection correction). Both matrices are 3 x n with n >= 1.
Transform kabsch(const Matrix3X<double>& src, const Matrix3X<double>& dst);

struct IcpOptions {
  double max_correspondence_distance = 0.02;
  int max_iterations = 50;
  double relative_rmse_tolerance = 1e-6;
  /// Debug aid: when set, the final correspondences are written here as a
  /// PLY cloud (source points masked 1, matched target points masked 0).
  std::optional<std::filesystem::path> dump_correspondences;
};

struct IcpResult {
  Transform transform;
  double fitness = 0.0;  // fraction of source points with a correspondence
  double rmse = 0.0;
  int iterations = 0;
  std::vector<double> rmse_history;  // rmse of every accepted iterate, starting at init
};

/// Registration failed because no source point had a target neighbour at init.
struct NoOverlap : std::runtime_error {
  explicit NoOverlap(const Transform& init) : std::runtime_error("no overlap"), best_effort(init) {}
  Transform best_effort;
};

IcpResult icp_point_to_point(const Cloud& source, const Cloud& target, const Transform& init,
                             const IcpOptions& options = {});
/// Same, against a prebuilt tree over the target points.
IcpResult icp_point_to_point(const Cloud& source, const KdTree& target, const Transform& init,
                             const IcpOptions& options = {});

}  // namespace rpo
