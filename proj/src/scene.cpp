#include "rpo/scene.hpp"

#include <cmath>

namespace rpo {

namespace {

Cloud grid_cloud(const Rect& r, double z, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("support spacing must be positive");
  const auto nx = static_cast<Eigen::Index>(std::floor((r.x_max - r.x_min) / spacing)) + 1;
  const auto ny = static_cast<Eigen::Index>(std::floor((r.y_max - r.y_min) / spacing)) + 1;
  Matrix3X<double> pts(3, nx * ny);
  Matrix3X<double> normals(3, nx * ny);
  for (Eigen::Index i = 0; i < nx; ++i) {
    for (Eigen::Index j = 0; j < ny; ++j) {
      pts.col(i * ny + j) = Vec3(r.x_min + i * spacing, r.y_min + j * spacing, z);
      normals.col(i * ny + j) = Vec3::UnitZ();
    }
  }
  return Cloud(std::move(pts), std::move(normals));
}

}  // namespace

SupportSurface::SupportSurface(const Rect& extent, double z_, double spacing)
    : cloud(grid_cloud(extent, z_, spacing)), tree(cloud), z(z_) {}

std::vector<Camera> corner_cameras(const WorkspaceModel& ws) {
  const Rect& t = ws.table;
  const Vec3 focal = ws.grasp_region.center(ws.table_z + 0.05);
  const double h = ws.table_z + 0.5;
  return {Camera{{t.x_min, t.y_min, h}, focal}, Camera{{t.x_max, t.y_min, h}, focal},
          Camera{{t.x_max, t.y_max, h}, focal}, Camera{{t.x_min, t.y_max, h}, focal}};
}

Scene Scene::Default() {
  Scene s;
  s.cameras = corner_cameras(s.workspace);
  return s;
}

std::vector<Vec3> Scene::camera_positions() const {
  std::vector<Vec3> out;
  out.reserve(cameras.size());
  for (const Camera& c : cameras) out.push_back(c.position);
  return out;
}

const SupportSurface& Scene::table_surface() const {
  const Rect& t = workspace.table;
  const bool stale = table_surface_ && (table_surface_->z != workspace.table_z ||
                                        table_surface_->cloud.points().col(0).x() != t.x_min ||
                                        table_surface_->cloud.points().col(0).y() != t.y_min);
  if (!table_surface_ || stale) {
    table_surface_ = std::make_shared<const SupportSurface>(t, workspace.table_z, support_spacing);
  }
  return *table_surface_;
}

SupportSurface Scene::shelf_surface() const {
  if (!shelf) throw std::invalid_argument("scene has no shelf");
  return SupportSurface(shelf->extent, shelf->z, support_spacing);
}

void Scene::validate() const {
  if (cameras.empty()) throw std::invalid_argument("scene: at least one camera is required");
  workspace.validate();
  if (shelf && !(shelf->extent.x_max > shelf->extent.x_min && shelf->extent.y_max > shelf->extent.y_min)) {
    throw std::invalid_argument("scene: shelf extents must be positive");
  }
}

}  // namespace rpo
