#include "rpo/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>

#include "rpo/ply.hpp"

namespace rpo {

// ---------------------------------------------------------------- KdTree

namespace {
constexpr Eigen::Index kLeafSize = 8;

using Candidate = std::pair<double, Eigen::Index>;  // (squared distance, index)
}  // namespace

KdTree::KdTree(const Matrix3X<double>& points) : points_(points) {
  if (points_.cols() == 0) throw std::invalid_argument("KdTree: no points");
  order_.resize(static_cast<std::size_t>(points_.cols()));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  nodes_.reserve(static_cast<std::size_t>(2 * points_.cols() / kLeafSize + 2));
  build(0, points_.cols());
}

int KdTree::build(Eigen::Index begin, Eigen::Index end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, begin, end, -1, -1});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (Eigen::Index i = begin; i < end; ++i) {
    const auto p = points_.col(order_[static_cast<std::size_t>(i)]);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

  const Eigen::Index mid = begin + (end - begin) / 2;
  auto first = order_.begin() + begin;
  std::nth_element(first, order_.begin() + mid, order_.begin() + end,
                   [&](Eigen::Index a, Eigen::Index b) { return points_(axis, a) < points_(axis, b); });
  const double split = points_(axis, order_[static_cast<std::size_t>(mid)]);
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& n = nodes_[static_cast<std::size_t>(id)];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

std::vector<Eigen::Index> KdTree::knn(const Vec3& query, Eigen::Index k) const {
  if (k < 1 || k > size()) throw InsufficientPoints();
  // max-heap on (d2, index): the top is the current worst kept candidate
  std::priority_queue<Candidate> heap;
  auto visit = [&](auto&& self, int node_id) -> void {
    const Node& n = nodes_[static_cast<std::size_t>(node_id)];
    if (n.axis < 0) {
      for (Eigen::Index i = n.begin; i < n.end; ++i) {
        const Eigen::Index idx = order_[static_cast<std::size_t>(i)];
        const Candidate c{(points_.col(idx) - query).squaredNorm(), idx};
        if (static_cast<Eigen::Index>(heap.size()) < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double diff = query[n.axis] - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    self(self, near);
    if (static_cast<Eigen::Index>(heap.size()) < k || diff * diff <= heap.top().first) self(self, far);
  };
  visit(visit, 0);
  std::vector<Eigen::Index> out(heap.size());
  for (std::size_t i = heap.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

std::optional<KdTree::Hit> KdTree::nearest(const Vec3& query, double max_distance) const {
  Candidate best{max_distance * max_distance, -1};
  if (!std::isfinite(best.first)) best.first = std::numeric_limits<double>::infinity();
  auto visit = [&](auto&& self, int node_id) -> void {
    const Node& n = nodes_[static_cast<std::size_t>(node_id)];
    if (n.axis < 0) {
      for (Eigen::Index i = n.begin; i < n.end; ++i) {
        const Eigen::Index idx = order_[static_cast<std::size_t>(i)];
        const double d2 = (points_.col(idx) - query).squaredNorm();
        if (d2 < best.first || (d2 == best.first && (best.second < 0 || idx < best.second))) {
          best = {d2, idx};
        }
      }
      return;
    }
    const double diff = query[n.axis] - n.split;
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    self(self, near);
    if (diff * diff <= best.first) self(self, far);
  };
  visit(visit, 0);
  if (best.second < 0) return std::nullopt;
  return Hit{best.second, std::sqrt(best.first)};
}

std::vector<Eigen::Index> knn(const Cloud& cloud, const Vec3& query, Eigen::Index k) {
  if (k > cloud.size()) throw InsufficientPoints();
  return KdTree(cloud).knn(query, k);
}

// ------------------------------------------------------------ normals

namespace {

struct LocalFit {
  Vec3 normal;
  bool degenerate;
};

LocalFit fit_normal(const Matrix3X<double>& pts, const std::vector<Eigen::Index>& nbrs) {
  Vec3 mean = Vec3::Zero();
  for (auto i : nbrs) mean += pts.col(i);
  mean /= static_cast<double>(nbrs.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : nbrs) {
    const Vec3 d = pts.col(i) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 ev = es.eigenvalues();  // ascending
  const bool degenerate = ev[1] <= 1e-12 * std::max(ev[2], 1e-300);
  return {es.eigenvectors().col(0).normalized(), degenerate};
}

}  // namespace

Cloud estimate_normals(const Cloud& cloud, Eigen::Index k, std::span<const Vec3> view_points) {
  if (k < 3 || cloud.size() < k) throw InsufficientPoints();
  const KdTree tree(cloud);
  const auto& pts = cloud.points();
  Matrix3X<double> normals(3, cloud.size());
  std::vector<bool> degenerate(static_cast<std::size_t>(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    const LocalFit f = fit_normal(pts, tree.knn(pts.col(i), k));
    normals.col(i) = f.normal;
    degenerate[static_cast<std::size_t>(i)] = f.degenerate;
  }
  if (std::all_of(degenerate.begin(), degenerate.end(), [](bool d) { return d; })) {
    throw std::invalid_argument("degenerate geometry");
  }
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    if (!degenerate[static_cast<std::size_t>(i)]) continue;
    // nearest non-degenerate neighbour, widening the search until one appears
    for (Eigen::Index kk = std::min<Eigen::Index>(2 * k, cloud.size());; kk = std::min(2 * kk, cloud.size())) {
      bool found = false;
      for (auto j : tree.knn(pts.col(i), kk)) {
        if (!degenerate[static_cast<std::size_t>(j)]) {
          normals.col(i) = normals.col(j);
          found = true;
          break;
        }
      }
      if (found || kk == cloud.size()) break;
    }
  }
  if (!view_points.empty()) {
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
      const Vec3 p = pts.col(i);
      const Vec3* best = &view_points.front();
      for (const Vec3& v : view_points) {
        if ((v - p).squaredNorm() < (*best - p).squaredNorm()) best = &v;
      }
      if (normals.col(i).dot(*best - p) < 0.0) normals.col(i) *= -1.0;
    }
  }
  return cloud.with_normals(std::move(normals));
}

Cloud orient_normals_outward(const Cloud& cloud) {
  Matrix3X<double> normals = cloud.normals();
  const Vec3 c = cloud.centroid();
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    if (normals.col(i).dot(cloud.point(i) - c) < 0.0) normals.col(i) *= -1.0;
  }
  return cloud.with_normals(std::move(normals));
}

// ------------------------------------------------------------- planes

Plane transform_plane(const Transform& t, const Plane& plane) {
  Plane out = plane;
  out.normal = (t.rotation() * plane.normal).normalized();
  out.offset = plane.offset + out.normal.dot(t.translation());
  return out;
}

int ransac_iteration_budget() {
  const double w = 0.25;
  const double n = std::ceil(std::log(1.0 - 0.999) / std::log(1.0 - w * w * w));
  return static_cast<int>(std::min(n, 2000.0));
}

namespace {

// Point i supports plane (n, d) when it lies within the threshold and, if
// normals are given, its normal is within the angle bound of +-n.
struct InlierTest {
  const Matrix3X<double>& pts;
  const Matrix3X<double>* normals;
  double threshold;
  double min_cos;

  bool operator()(Eigen::Index i, const Vec3& n, double d) const {
    if (std::abs(n.dot(pts.col(i)) - d) > threshold) return false;
    return !normals || std::abs(n.dot(normals->col(i))) >= min_cos;
  }
};

std::vector<Eigen::Index> plane_inliers(const InlierTest& test, const std::vector<Eigen::Index>& pool, const Vec3& n,
                                        double d) {
  std::vector<Eigen::Index> in;
  for (auto i : pool) {
    if (test(i, n, d)) in.push_back(i);
  }
  return in;
}

}  // namespace

std::vector<Plane> segment_planes(const Cloud& cloud, const PlaneSegmentationOptions& options, Seed seed) {
  if (!(options.inlier_threshold > 0.0) || options.min_inliers < 3 || options.max_planes < 1) {
    throw std::invalid_argument("segment_planes: thresholds must be positive");
  }
  const auto& pts = cloud.points();
  const InlierTest supports{pts, cloud.has_normals() ? &cloud.normals() : nullptr, options.inlier_threshold,
                            std::cos(options.max_normal_angle)};
  const Vec3 centroid = cloud.centroid();
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(cloud.size()));
  std::iota(remaining.begin(), remaining.end(), Eigen::Index{0});
  std::vector<Plane> planes;
  Rng rng = make_rng(seed);
  const int budget = ransac_iteration_budget();

  while (static_cast<int>(planes.size()) < options.max_planes &&
         static_cast<Eigen::Index>(remaining.size()) >= options.min_inliers) {
    std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
    std::size_t best_count = 0;
    Vec3 best_n = Vec3::UnitZ();
    double best_d = 0.0;
    for (int it = 0; it < budget; ++it) {
      const std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      std::size_t c = pick(rng);
      if (a == b || b == c || a == c) continue;
      const Vec3 pa = pts.col(remaining[a]);
      Vec3 n = (pts.col(remaining[b]) - pa).cross(pts.col(remaining[c]) - pa);
      if (n.norm() < 1e-12) continue;
      n.normalize();
      const double d = n.dot(pa);
      std::size_t count = 0;
      for (auto i : remaining) {
        if (supports(i, n, d)) ++count;
      }
      if (count > best_count) {
        best_count = count;
        best_n = n;
        best_d = d;
      }
    }
    if (static_cast<Eigen::Index>(best_count) < options.min_inliers) break;

    std::vector<Eigen::Index> inliers = plane_inliers(supports, remaining, best_n, best_d);
    // least-squares refit on the consensus set, kept only if it does not lose support
    const LocalFit refit = fit_normal(pts, inliers);
    if (!refit.degenerate) {
      Vec3 mean = Vec3::Zero();
      for (auto i : inliers) mean += pts.col(i);
      mean /= static_cast<double>(inliers.size());
      auto refined = plane_inliers(supports, remaining, refit.normal, refit.normal.dot(mean));
      if (refined.size() >= inliers.size()) {
        best_n = refit.normal;
        best_d = refit.normal.dot(mean);
        inliers = std::move(refined);
      }
    }
    // orient away from the cloud centroid so object faces get outward normals
    if (best_n.dot(centroid) - best_d > 0.0) {
      best_n = -best_n;
      best_d = -best_d;
    }
    std::vector<Eigen::Index> rest;
    std::set_difference(remaining.begin(), remaining.end(), inliers.begin(), inliers.end(),
                        std::back_inserter(rest));
    remaining = std::move(rest);
    planes.push_back(Plane{best_n, best_d, std::move(inliers)});
  }
  return planes;
}

// ---------------------------------------------------------------- ICP

Transform kabsch(const Matrix3X<double>& src, const Matrix3X<double>& dst) {
  if (src.cols() == 0 || src.cols() != dst.cols()) throw std::invalid_argument("kabsch: size mismatch");
  const Vec3 ms = src.rowwise().mean();
  const Vec3 md = dst.rowwise().mean();
  const Mat3 h = (src.colwise() - ms) * (dst.colwise() - md).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 v = svd.matrixV();
  const Mat3 u = svd.matrixU();
  if ((v * u.transpose()).determinant() < 0.0) v.col(2) *= -1.0;
  const Mat3 r = v * u.transpose();
  return Transform::FromRotationMatrix(r, md - r * ms);
}

namespace {

struct Correspondences {
  std::vector<Eigen::Index> src;
  std::vector<Eigen::Index> dst;
  double truncated_sq = 0.0;  // sum over all source points of min(d^2, tau^2)
  double inlier_sq = 0.0;
};

Correspondences correspond(const Matrix3X<double>& moved, const KdTree& target, double tau) {
  Correspondences c;
  for (Eigen::Index i = 0; i < moved.cols(); ++i) {
    const auto hit = target.nearest(moved.col(i), tau);
    if (hit) {
      c.src.push_back(i);
      c.dst.push_back(hit->index);
      const double d2 = hit->distance * hit->distance;
      c.inlier_sq += d2;
      c.truncated_sq += d2;
    } else {
      c.truncated_sq += tau * tau;
    }
  }
  return c;
}

}  // namespace

IcpResult icp_point_to_point(const Cloud& source, const Cloud& target, const Transform& init,
                             const IcpOptions& options) {
  return icp_point_to_point(source, KdTree(target), init, options);
}

IcpResult icp_point_to_point(const Cloud& source, const KdTree& target, const Transform& init,
                             const IcpOptions& options) {
  if (!(options.max_correspondence_distance > 0.0)) {
    throw std::invalid_argument("icp: max_corr_dist must be positive");
  }
  const double tau = options.max_correspondence_distance;
  const auto n = static_cast<double>(source.size());
  auto moved_by = [&](const Transform& t) -> Matrix3X<double> {
    return (t.rotation_matrix() * source.points()).colwise() + t.translation();
  };

  Transform current = init;
  Matrix3X<double> moved = moved_by(current);
  Correspondences corr = correspond(moved, target, tau);
  if (corr.src.empty()) throw NoOverlap(init);

  // The reported rmse counts unmatched points at the threshold distance; this
  // truncated cost cannot increase under either ICP half-step.
  double rmse = std::sqrt(corr.truncated_sq / n);
  IcpResult result;
  result.rmse_history.push_back(rmse);

  int it = 0;
  while (it < options.max_iterations) {
    ++it;
    Matrix3X<double> s(3, static_cast<Eigen::Index>(corr.src.size()));
    Matrix3X<double> d(3, s.cols());
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      s.col(j) = moved.col(corr.src[static_cast<std::size_t>(j)]);
      d.col(j) = target.points().col(corr.dst[static_cast<std::size_t>(j)]);
    }
    const Transform candidate = kabsch(s, d) * current;
    Matrix3X<double> cand_moved = moved_by(candidate);
    Correspondences cand_corr = correspond(cand_moved, target, tau);
    const double cand_rmse = std::sqrt(cand_corr.truncated_sq / n);
    if (cand_corr.src.empty() || cand_rmse > rmse) break;

    const double change = rmse - cand_rmse;
    current = candidate;
    moved = std::move(cand_moved);
    corr = std::move(cand_corr);
    rmse = cand_rmse;
    result.rmse_history.push_back(rmse);
    if (rmse < 1e-14 || change <= options.relative_rmse_tolerance * (rmse + change)) break;
  }

  result.transform = current;
  result.rmse = rmse;
  result.fitness = static_cast<double>(corr.src.size()) / n;
  result.iterations = std::max(it, 1);

  if (options.dump_correspondences) {
    Matrix3X<double> pts(3, static_cast<Eigen::Index>(2 * corr.src.size()));
    Mask m(2 * corr.src.size());
    for (std::size_t j = 0; j < corr.src.size(); ++j) {
      pts.col(static_cast<Eigen::Index>(2 * j)) = moved.col(corr.src[j]);
      pts.col(static_cast<Eigen::Index>(2 * j + 1)) = target.points().col(corr.dst[j]);
      m[2 * j] = true;
      m[2 * j + 1] = false;
    }
    if (pts.cols() > 0) write_ply(*options.dump_correspondences, Cloud(std::move(pts), std::nullopt, std::move(m)));
  }
  return result;
}

}  // namespace rpo
