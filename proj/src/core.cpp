#include "pcsketch/core.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace pcsketch {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyCloud: return "EMPTY_CLOUD";
    case ErrorCode::TooFewPoints: return "TOO_FEW_POINTS";
    case ErrorCode::ParseError: return "PARSE_ERROR";
    case ErrorCode::UnsupportedFormat: return "UNSUPPORTED_FORMAT";
    case ErrorCode::IoError: return "IO_ERROR";
    case ErrorCode::EmptyMesh: return "EMPTY_MESH";
    case ErrorCode::NonMonotonicTime: return "NON_MONOTONIC_TIME";
    case ErrorCode::InvalidRotation: return "INVALID_ROTATION";
    case ErrorCode::UnknownTool: return "UNKNOWN_TOOL";
    case ErrorCode::InvalidParams: return "INVALID_PARAMS";
    case ErrorCode::NonPositiveDepth: return "NON_POSITIVE_DEPTH";
    case ErrorCode::EmptyTrajectory: return "EMPTY_TRAJECTORY";
    case ErrorCode::NoPlaneFound: return "NO_PLANE_FOUND";
    case ErrorCode::NotAxisAligned: return "NOT_AXIS_ALIGNED";
    case ErrorCode::EmptyStroke: return "EMPTY_STROKE";
    case ErrorCode::NoPendingEdit: return "NO_PENDING";
    case ErrorCode::NothingToUndo: return "NOTHING_TO_UNDO";
    case ErrorCode::DegenerateCorrespondences: return "DEGENERATE_CORRESPONDENCES";
    case ErrorCode::UnknownPointId: return "UNKNOWN_POINT_ID";
    case ErrorCode::NoCorrespondences: return "NO_CORRESPONDENCES";
    case ErrorCode::MismatchedReport: return "MISMATCHED_REPORT";
    case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
  }
  return "UNKNOWN";
}

PointCloud::PointCloud(std::vector<Point> points) : points_(std::move(points)) {
  std::unordered_set<PointId> seen;
  seen.reserve(points_.size());
  for (const Point& p : points_) {
    if (!p.position.allFinite()) {
      throw Error(ErrorCode::InvalidArgument,
                  "point " + std::to_string(p.id) + " has a non-finite position");
    }
    if (!seen.insert(p.id).second) {
      throw Error(ErrorCode::InvalidArgument,
                  "duplicate point id " + std::to_string(p.id));
    }
  }
}

PointId PointCloud::next_free_id() const noexcept {
  PointId next = 0;
  for (const Point& p : points_) next = std::max(next, p.id + 1);
  return next;
}

std::vector<Vec3> PointCloud::positions() const {
  std::vector<Vec3> out;
  out.reserve(points_.size());
  for (const Point& p : points_) out.push_back(p.position);
  return out;
}

namespace {

void check_rotation(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (!r.allFinite() || ortho > 1e-9 || std::abs(r.determinant() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidRotation, "rotation is not orthonormal with det +1");
  }
}

}  // namespace

Pose::Pose(const Eigen::Quaterniond& q, const Vec3& t) : translation_(t) {
  if (!q.coeffs().allFinite() || std::abs(q.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidRotation, "quaternion is not unit length");
  }
  if (!t.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite translation");
  rotation_ = q.toRotationMatrix();
}

Pose Pose::from_matrix(const Mat3& rotation, const Vec3& translation) {
  check_rotation(rotation);
  if (!translation.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "non-finite translation");
  }
  Pose p;
  p.rotation_ = rotation;
  p.translation_ = translation;
  return p;
}

Pose Pose::from_translation(const Vec3& t) { return from_matrix(Mat3::Identity(), t); }

Pose Pose::from_axis_angle(const Vec3& axis, double angle_rad, const Vec3& t) {
  if (axis.norm() == 0.0) throw Error(ErrorCode::InvalidArgument, "zero rotation axis");
  Pose p;
  p.rotation_ = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
  p.translation_ = t;
  return p;
}

Pose Pose::look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "look_at: view direction parallel to up");
  }
  right.normalize();
  const Vec3 down = forward.cross(right);
  Mat3 r;
  r.col(0) = right;
  r.col(1) = down;
  r.col(2) = forward;
  Pose p;
  p.rotation_ = r;
  p.translation_ = eye;
  return p;
}

Eigen::Quaterniond Pose::quaternion() const { return Eigen::Quaterniond(rotation_); }

bool Pose::is_identity() const {
  return rotation_ == Mat3::Identity() && translation_ == Vec3::Zero();
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation_ = rotation_.transpose();
  p.translation_ = -(p.rotation_ * translation_);
  return p;
}

Pose operator*(const Pose& a, const Pose& b) {
  Pose p;
  p.rotation_ = a.rotation_ * b.rotation_;
  p.translation_ = a.rotation_ * b.translation_ + a.translation_;
  return p;
}

double rotation_angle(const Pose& a, const Pose& b) {
  // The quaternion form stays accurate for small angles, unlike acos(trace).
  const Eigen::Quaterniond qa(a.rotation());
  const Eigen::Quaterniond qb(b.rotation());
  return qa.angularDistance(qb);
}

Aabb::Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {
  if (!lo.allFinite() || !hi.allFinite() || (lo.array() > hi.array()).any()) {
    throw Error(ErrorCode::InvalidArgument, "box min must be <= max componentwise");
  }
}

Aabb fit_aabb(std::span<const Vec3> points, double margin) {
  if (points.empty()) throw Error(ErrorCode::EmptyCloud, "cannot fit a box to no points");
  Vec3 lo = points.front();
  Vec3 hi = points.front();
  for (const Vec3& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 m = Vec3::Constant(margin);
  return Aabb(lo - m, hi + m);
}

Aabb fit_aabb(const PointCloud& cloud, double margin) {
  const auto pts = cloud.positions();
  return fit_aabb(std::span<const Vec3>(pts), margin);
}

OrientedBox::OrientedBox(const Pose& center, const Vec3& half)
    : pose(center), half_extents(half) {
  if (!half.allFinite() || (half.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "box half extents must be positive");
  }
}

Cone::Cone(const Vec3& apex_, const Vec3& axis_, double height_, double base_radius_)
    : apex(apex_), axis(axis_), height(height_), base_radius(base_radius_) {
  if (!apex.allFinite() || !axis.allFinite() || std::abs(axis.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "cone axis must be a unit vector");
  }
  if (!(height > 0.0) || !(base_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "cone height and radius must be positive");
  }
}

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose) {
  if (pose.is_identity()) return cloud;
  std::vector<Point> out(cloud.begin(), cloud.end());
  for (Point& p : out) p.position = pose.apply(p.position);
  return PointCloud(std::move(out));
}

namespace {

template <typename Pred>
std::vector<PointId> select(const PointCloud& cloud, Pred&& inside) {
  std::vector<PointId> ids;
  for (const Point& p : cloud) {
    if (inside(p.position)) ids.push_back(p.id);
  }
  return ids;
}

}  // namespace

std::vector<PointId> points_in_aabb(const PointCloud& cloud, const Aabb& box) {
  return select(cloud, [&](const Vec3& p) { return box.contains(p); });
}

std::vector<PointId> points_in_oriented_box(const PointCloud& cloud,
                                            const OrientedBox& box) {
  return select(cloud, [&](const Vec3& p) { return box.contains(p); });
}

std::vector<PointId> points_in_cone(const PointCloud& cloud, const Cone& cone) {
  return select(cloud, [&](const Vec3& p) { return cone.contains(p); });
}

}  // namespace pcsketch
