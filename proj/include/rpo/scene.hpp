// Tabletop scene description shared by the samplers, planner and simulator.
#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "rpo/analysis.hpp"
#include "rpo/feasibility.hpp"

namespace rpo {

struct Cuboid {
  Vec3 half_extents{0.05, 0.05, 0.05};
  Transform pose;
};

struct Camera {
  Vec3 position;
  Vec3 focal_point;
};

struct Shelf {
  Rect extent;
  double z = 0.3;
};

/// A flat support patch sampled on a grid, with its search tree.
struct SupportSurface {
  SupportSurface(const Rect& extent, double z, double spacing);

  Cloud cloud;
  KdTree tree;
  double z;
};

/// Four cameras at the table corners, 0.5 m up, sharing a focal point
/// above the grasp region.
std::vector<Camera> corner_cameras(const WorkspaceModel& ws);

struct Scene {
  WorkspaceModel workspace;
  std::optional<Shelf> shelf;
  std::vector<Camera> cameras;
  std::vector<Cuboid> objects;
  /// Grid spacing of the table target cloud used for mask registration.
  double support_spacing = 0.01;

  /// Four cameras at the table corners sharing a focal point.
  static Scene Default();

  const Rect& table() const { return workspace.table; }
  double table_z() const { return workspace.table_z; }
  std::vector<Vec3> camera_positions() const;

  /// Segmented table cloud (built on first use and shared by copies).
  const SupportSurface& table_surface() const;
  SupportSurface shelf_surface() const;

  void validate() const;

 private:
  mutable std::shared_ptr<const SupportSurface> table_surface_;
};

}  // namespace rpo
