// Rigid transforms and point-cloud containers.
//
// Everything here is templated on the scalar type; the rest of the library
// works with the double-precision aliases at the bottom of the file.
#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rpo/random.hpp"

namespace rpo {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Matrix4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

/// Rigid-body transform stored as a unit quaternion plus a translation.
///
/// The quaternion is normalized and sign-canonicalized (w >= 0, ties broken
/// on the first nonzero vector component) on every construction, so two
/// transforms describing the same motion compare equal component-wise.
template <typename Scalar>
class RigidTransform {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;
  using Vector = Vector3<Scalar>;

  RigidTransform() : rotation_(Quaternion::Identity()), translation_(Vector::Zero()) {}

  RigidTransform(const Quaternion& rotation, const Vector& translation)
      : rotation_(canonicalize(rotation)), translation_(translation) {}

  static RigidTransform Identity() { return RigidTransform(); }

  static RigidTransform FromTranslation(const Vector& t) {
    return RigidTransform(Quaternion::Identity(), t);
  }

  static RigidTransform FromAxisAngle(const Vector& axis, Scalar angle,
                                      const Vector& t = Vector::Zero()) {
    return RigidTransform(Quaternion(Eigen::AngleAxis<Scalar>(angle, axis.normalized())), t);
  }

  static RigidTransform FromRotationMatrix(const Matrix3<Scalar>& r,
                                           const Vector& t = Vector::Zero()) {
    return RigidTransform(Quaternion(r), t);
  }

  static RigidTransform FromMatrix(const Matrix4<Scalar>& m) {
    return FromRotationMatrix(m.template topLeftCorner<3, 3>(), m.template topRightCorner<3, 1>());
  }

  /// Rotation about `pivot` (world frame), i.e. x -> R (x - pivot) + pivot.
  static RigidTransform RotationAbout(const Quaternion& q, const Vector& pivot) {
    const Quaternion qn = q.normalized();
    return RigidTransform(qn, pivot - qn * pivot);
  }

  const Quaternion& rotation() const { return rotation_; }
  const Vector& translation() const { return translation_; }
  Matrix3<Scalar> rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Matrix4<Scalar> matrix() const {
    Matrix4<Scalar> m = Matrix4<Scalar>::Identity();
    m.template topLeftCorner<3, 3>() = rotation_matrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Vector operator*(const Vector& p) const { return rotation_ * p + translation_; }

  /// Composition: (a * b) applies b first, then a.
  RigidTransform operator*(const RigidTransform& b) const {
    return RigidTransform(rotation_ * b.rotation_, rotation_ * b.translation_ + translation_);
  }

  template <typename Other>
  RigidTransform<Other> cast() const {
    return RigidTransform<Other>(rotation_.template cast<Other>(), translation_.template cast<Other>());
  }

 private:
  static Quaternion canonicalize(const Quaternion& q) {
    const Scalar n = q.norm();
    if (!(n > Scalar(0)) || !std::isfinite(static_cast<double>(n))) {
      throw std::invalid_argument("RigidTransform: quaternion must be finite and nonzero");
    }
    Quaternion out(q.coeffs() / n);
    bool flip = out.w() < Scalar(0);
    if (out.w() == Scalar(0)) {
      if (out.x() != Scalar(0)) {
        flip = out.x() < Scalar(0);
      } else if (out.y() != Scalar(0)) {
        flip = out.y() < Scalar(0);
      } else {
        flip = out.z() < Scalar(0);
      }
    }
    if (flip) out.coeffs() = -out.coeffs();
    return out;
  }

  Quaternion rotation_;
  Vector translation_;
};

template <typename Scalar>
RigidTransform<Scalar> compose(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return a * b;
}

template <typename Scalar>
RigidTransform<Scalar> invert(const RigidTransform<Scalar>& t) {
  const auto qi = t.rotation().conjugate();
  return RigidTransform<Scalar>(qi, -(qi * t.translation()));
}

/// Geodesic angle between two rotations, 2 acos(|<qa, qb>|) in [0, pi].
template <typename Scalar>
Scalar rotation_angle(const Eigen::Quaternion<Scalar>& a, const Eigen::Quaternion<Scalar>& b) {
  const Scalar d = std::clamp(std::abs(a.coeffs().dot(b.coeffs())), Scalar(0), Scalar(1));
  return Scalar(2) * std::acos(d);
}

template <typename Scalar>
Scalar rotation_angle(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return rotation_angle(a.rotation(), b.rotation());
}

template <typename Scalar>
Scalar translation_distance(const RigidTransform<Scalar>& a, const RigidTransform<Scalar>& b) {
  return (a.translation() - b.translation()).norm();
}

/// Yaw of the rotation, taken as the heading of the rotated x-axis.
template <typename Scalar>
Scalar yaw_of(const RigidTransform<Scalar>& t) {
  const Matrix3<Scalar> r = t.rotation_matrix();
  return std::atan2(r(1, 0), r(0, 0));
}

/// Drops z-translation and every rotation component except yaw.
template <typename Scalar>
RigidTransform<Scalar> project_se2(const RigidTransform<Scalar>& t) {
  const Scalar yaw = yaw_of(t);
  Vector3<Scalar> tr = t.translation();
  tr.z() = Scalar(0);
  return RigidTransform<Scalar>::FromAxisAngle(Vector3<Scalar>::UnitZ(), yaw, tr);
}

namespace detail {

template <typename Scalar>
Matrix3<Scalar> skew(const Vector3<Scalar>& w) {
  Matrix3<Scalar> s;
  s << Scalar(0), -w.z(), w.y(), w.z(), Scalar(0), -w.x(), -w.y(), w.x(), Scalar(0);
  return s;
}

// Left Jacobian of SO(3): V(w) = I + (1-cos t)/t^2 [w] + (t - sin t)/t^3 [w]^2.
template <typename Scalar>
Matrix3<Scalar> so3_left_jacobian(const Vector3<Scalar>& w) {
  const Scalar theta = w.norm();
  const Matrix3<Scalar> k = skew(w);
  Scalar a;
  Scalar b;
  if (theta < Scalar(1e-5)) {
    const Scalar t2 = theta * theta;
    a = Scalar(0.5) - t2 / Scalar(24);
    b = Scalar(1) / Scalar(6) - t2 / Scalar(120);
  } else {
    a = (Scalar(1) - std::cos(theta)) / (theta * theta);
    b = (theta - std::sin(theta)) / (theta * theta * theta);
  }
  return Matrix3<Scalar>::Identity() + a * k + b * k * k;
}

template <typename Scalar>
Vector3<Scalar> rotation_log(const Eigen::Quaternion<Scalar>& q) {
  // q is canonical (w >= 0), so the angle lies in [0, pi].
  const Vector3<Scalar> v = q.vec();
  const Scalar s = v.norm();
  if (s < Scalar(1e-12)) return Scalar(2) * v;
  const Scalar theta = Scalar(2) * std::atan2(s, q.w());
  return v * (theta / s);
}

}  // namespace detail

/// Screw-motion interpolation: exp(fraction * log(t)) on SE(3).
///
/// The rotation advances by `fraction` of its axis-angle and the
/// translation follows the matching helical path, so
/// interpolate_screw(t, 0) = identity, interpolate_screw(t, 1) = t and
/// interpolate_screw(t, a) * interpolate_screw(t, b) = interpolate_screw(t, a + b).
template <typename Scalar>
RigidTransform<Scalar> interpolate_screw(const RigidTransform<Scalar>& t, Scalar fraction) {
  if (!(fraction >= Scalar(0) && fraction <= Scalar(1))) {
    throw std::invalid_argument("interpolate_screw: fraction must lie in [0, 1]");
  }
  if (fraction == Scalar(0)) return RigidTransform<Scalar>::Identity();
  if (fraction == Scalar(1)) return t;
  const Vector3<Scalar> w = detail::rotation_log(t.rotation());
  const Vector3<Scalar> v = detail::so3_left_jacobian(w).inverse() * t.translation();
  const Vector3<Scalar> wf = fraction * w;
  const Scalar angle = wf.norm();
  const Eigen::Quaternion<Scalar> qf =
      angle < Scalar(1e-15) ? Eigen::Quaternion<Scalar>::Identity()
                            : Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, wf / angle));
  return RigidTransform<Scalar>(qf, detail::so3_left_jacobian(wf) * (fraction * v));
}

using Mask = std::vector<bool>;

/// Ordered 3-D points with optional unit normals and a per-point mask.
/// Points are stored column-wise so Eigen expressions apply directly.
template <typename Scalar>
class PointCloud {
 public:
  using Points = Matrix3X<Scalar>;

  explicit PointCloud(Points points, std::optional<Points> normals = std::nullopt,
                      std::optional<Mask> mask = std::nullopt)
      : points_(std::move(points)), normals_(std::move(normals)), mask_(std::move(mask)) {
    if (points_.cols() == 0) throw std::invalid_argument("PointCloud: no points");
    if (normals_) {
      if (normals_->cols() != points_.cols()) {
        throw std::invalid_argument("PointCloud: normals/points size mismatch");
      }
      for (Eigen::Index i = 0; i < normals_->cols(); ++i) {
        if (std::abs(normals_->col(i).norm() - Scalar(1)) > Scalar(1e-6)) {
          throw std::invalid_argument("PointCloud: normals must be unit length");
        }
      }
    }
    if (mask_ && static_cast<Eigen::Index>(mask_->size()) != points_.cols()) {
      throw std::invalid_argument("PointCloud: mask/points size mismatch");
    }
  }

  static PointCloud FromVector(const std::vector<Vector3<Scalar>>& pts) {
    Points m(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pts[i];
    return PointCloud(std::move(m));
  }

  Eigen::Index size() const { return points_.cols(); }
  const Points& points() const { return points_; }
  auto point(Eigen::Index i) const { return points_.col(i); }

  bool has_normals() const { return normals_.has_value(); }
  const Points& normals() const {
    if (!normals_) throw std::logic_error("PointCloud: no normals");
    return *normals_;
  }
  const std::optional<Points>& maybe_normals() const { return normals_; }

  bool has_mask() const { return mask_.has_value(); }
  const Mask& mask() const {
    if (!mask_) throw std::logic_error("PointCloud: no mask");
    return *mask_;
  }
  const std::optional<Mask>& maybe_mask() const { return mask_; }

  Vector3<Scalar> centroid() const { return points_.rowwise().mean(); }

  PointCloud with_normals(Points normals) const { return PointCloud(points_, std::move(normals), mask_); }
  PointCloud with_mask(Mask mask) const { return PointCloud(points_, normals_, std::move(mask)); }
  PointCloud without_mask() const { return PointCloud(points_, normals_, std::nullopt); }

  /// Sub-cloud of the listed indices (normals and mask carried along).
  PointCloud select(const std::vector<Eigen::Index>& indices) const {
    Points p(3, static_cast<Eigen::Index>(indices.size()));
    std::optional<Points> n;
    std::optional<Mask> m;
    if (normals_) n.emplace(3, p.cols());
    if (mask_) m.emplace(indices.size());
    for (std::size_t j = 0; j < indices.size(); ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      p.col(jj) = points_.col(indices[j]);
      if (n) n->col(jj) = normals_->col(indices[j]);
      if (m) (*m)[j] = (*mask_)[static_cast<std::size_t>(indices[j])];
    }
    return PointCloud(std::move(p), std::move(n), std::move(m));
  }

  /// Indices of masked points.
  std::vector<Eigen::Index> masked_indices() const {
    std::vector<Eigen::Index> out;
    const Mask& m = mask();
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i]) out.push_back(static_cast<Eigen::Index>(i));
    }
    return out;
  }

 private:
  Points points_;
  std::optional<Points> normals_;
  std::optional<Mask> mask_;
};

/// Rotates then translates every point; normals are only rotated.
template <typename Scalar>
PointCloud<Scalar> apply(const RigidTransform<Scalar>& t, const PointCloud<Scalar>& cloud) {
  const Matrix3<Scalar> r = t.rotation_matrix();
  typename PointCloud<Scalar>::Points p = (r * cloud.points()).colwise() + t.translation();
  std::optional<typename PointCloud<Scalar>::Points> n;
  if (cloud.has_normals()) {
    n = r * cloud.normals();
    n->colwise().normalize();
  }
  return PointCloud<Scalar>(std::move(p), std::move(n), cloud.maybe_mask());
}

/// Cloud expressed relative to its centroid, with the centroid appended
/// to every row as three extra features.
template <typename Scalar>
struct CenteredCloud {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 6> rows;
  Vector3<Scalar> centroid;
};

template <typename Scalar>
CenteredCloud<Scalar> center_and_augment(const PointCloud<Scalar>& cloud) {
  CenteredCloud<Scalar> out;
  out.centroid = cloud.centroid();
  out.rows.resize(cloud.size(), 6);
  out.rows.template leftCols<3>() = (cloud.points().colwise() - out.centroid).transpose();
  out.rows.template rightCols<3>() = out.centroid.transpose().replicate(cloud.size(), 1);
  return out;
}

/// Uniform sub-sampling to exactly n points: without replacement when the
/// cloud is large enough, with replacement otherwise.
template <typename Scalar>
PointCloud<Scalar> downsample_uniform(const PointCloud<Scalar>& cloud, Eigen::Index n, Seed seed) {
  if (n < 1) throw std::invalid_argument("downsample_uniform: n must be >= 1");
  Rng rng = make_rng(seed);
  std::vector<Eigen::Index> pick;
  pick.reserve(static_cast<std::size_t>(n));
  if (cloud.size() >= n) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(cloud.size()));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    // partial Fisher-Yates
    for (Eigen::Index i = 0; i < n; ++i) {
      std::uniform_int_distribution<Eigen::Index> d(i, cloud.size() - 1);
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(d(rng))]);
      pick.push_back(idx[static_cast<std::size_t>(i)]);
    }
  } else {
    std::uniform_int_distribution<Eigen::Index> d(0, cloud.size() - 1);
    for (Eigen::Index i = 0; i < n; ++i) pick.push_back(d(rng));
  }
  return cloud.select(pick);
}

using Transform = RigidTransform<double>;
using Cloud = PointCloud<double>;
using Vec3 = Vector3<double>;
using Mat3 = Matrix3<double>;
using Quat = Eigen::Quaterniond;

}  // namespace rpo
