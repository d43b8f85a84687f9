#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "pcsketch/error.hpp"

namespace pcsketch {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using PointId = std::uint64_t;

struct Rgb {
  std::uint8_t r = 255;
  std::uint8_t g = 255;
  std::uint8_t b = 255;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Point {
  PointId id = 0;
  Vec3 position = Vec3::Zero();
  Rgb color;

  friend bool operator==(const Point& a, const Point& b) {
    return a.id == b.id && a.position == b.position && a.color == b.color;
  }
};

/**
 * @brief Ordered collection of uniquely identified colored points.
 *
 * Construction validates that ids are distinct and positions finite. Order is
 * insertion order and is preserved by every operation in the library.
 */
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Point> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }

  const Point& operator[](std::size_t i) const { return points_[i]; }
  std::span<const Point> points() const noexcept { return points_; }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  /// Largest id in the cloud plus one (0 for an empty cloud).
  PointId next_free_id() const noexcept;

  std::vector<Vec3> positions() const;

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::vector<Point> points_;
};

/// Rigid transform p -> R * p + t.
class Pose {
 public:
  Pose() = default;
  /// Throws InvalidRotation unless |q| is 1 within 1e-9 (use normalized()).
  Pose(const Eigen::Quaterniond& q, const Vec3& t);

  static Pose from_matrix(const Mat3& rotation, const Vec3& translation);
  static Pose from_translation(const Vec3& t);
  static Pose from_axis_angle(const Vec3& axis, double angle_rad,
                              const Vec3& t = Vec3::Zero());
  /// Camera-style pose: +z looks from eye to target, +y points away from up.
  static Pose look_at(const Vec3& eye, const Vec3& target,
                      const Vec3& up = Vec3::UnitZ());

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }
  Eigen::Quaterniond quaternion() const;
  bool is_identity() const;

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 apply_inverse(const Vec3& p) const {
    return rotation_.transpose() * (p - translation_);
  }
  Pose inverse() const;
  /// (a * b).apply(p) == a.apply(b.apply(p))
  friend Pose operator*(const Pose& a, const Pose& b);

 private:
  Mat3 rotation_ = Mat3::Identity();
  Vec3 translation_ = Vec3::Zero();
};

/// Geodesic angle between two rotations, radians in [0, pi].
double rotation_angle(const Pose& a, const Pose& b);

struct Aabb {
  Vec3 min;
  Vec3 max;

  Aabb(const Vec3& lo, const Vec3& hi);
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
};

/// Tight box around a point set, grown by margin on every side.
Aabb fit_aabb(std::span<const Vec3> points, double margin = 0.0);
Aabb fit_aabb(const PointCloud& cloud, double margin = 0.0);

struct OrientedBox {
  Pose pose;
  Vec3 half_extents;

  OrientedBox(const Pose& center, const Vec3& half);
  bool contains(const Vec3& p) const {
    const Vec3 local = pose.apply_inverse(p);
    return (local.array().abs() <= half_extents.array()).all();
  }
};

/// Solid cone with its apex at `apex`, widening along `axis` to `base_radius`
/// at distance `height`.
struct Cone {
  Vec3 apex;
  Vec3 axis;
  double height;
  double base_radius;

  Cone(const Vec3& apex, const Vec3& axis, double height, double base_radius);
  bool contains(const Vec3& p) const {
    const Vec3 d = p - apex;
    const double t = d.dot(axis);
    if (t < 0.0 || t > height) return false;
    return (d - t * axis).norm() <= base_radius * t / height;
  }
};

PointCloud transform_cloud(const PointCloud& cloud, const Pose& pose);

// Region queries return ids in cloud order. All boundaries are inclusive.
std::vector<PointId> points_in_aabb(const PointCloud& cloud, const Aabb& box);
std::vector<PointId> points_in_oriented_box(const PointCloud& cloud,
                                            const OrientedBox& box);
std::vector<PointId> points_in_cone(const PointCloud& cloud, const Cone& cone);

}  // namespace pcsketch
