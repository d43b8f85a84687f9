#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "pcsketch/core.hpp"

namespace pcsketch {

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  std::size_t size() const noexcept { return triangles.size(); }
  bool empty() const noexcept { return triangles.empty(); }
  std::array<Vec3, 3> corners(std::size_t tri) const {
    const Triangle& t = triangles[tri];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }
  double area(std::size_t tri) const;
};

/// Triangles at or below this area (m^2) are dropped by loaders.
inline constexpr double kDegenerateArea = 1e-12;

/// Throws ParseError on out-of-range indices; removes degenerate triangles.
void validate_mesh(TriangleMesh& mesh);

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Pose& pose);
/// Appends `other` to `mesh`, re-indexing its triangles.
void append_mesh(TriangleMesh& mesh, const TriangleMesh& other);
/// Closed box surface (12 triangles) with the given full dimensions, centered
/// on `pose`.
TriangleMesh make_box_mesh(const Vec3& dimensions, const Pose& pose = Pose());

/// Closest point on triangle (a, b, c) to p, covering face, edge and vertex regions.
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Ray parameter of the hit with triangle (a, b, c), if any, in (0, inf).
std::optional<double> intersect_ray_triangle(const Vec3& origin, const Vec3& dir,
                                             const Vec3& a, const Vec3& b, const Vec3& c);

struct ClosestPoint {
  std::size_t triangle = 0;
  Vec3 point = Vec3::Zero();
  double distance = std::numeric_limits<double>::infinity();
};

struct RayHit {
  std::size_t triangle = 0;
  double t = 0.0;
};

/// Bounding-volume hierarchy over the triangles of a mesh (the mesh is copied).
class TriangleBvh {
 public:
  /// Throws EmptyMesh.
  explicit TriangleBvh(TriangleMesh mesh);

  const TriangleMesh& mesh() const noexcept { return mesh_; }

  ClosestPoint closest_point(const Vec3& p) const;
  double distance(const Vec3& p) const { return closest_point(p).distance; }
  /// Nearest hit with t in (0, max_t].
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir,
                                double max_t = std::numeric_limits<double>::infinity()) const;

 private:
  struct Node {
    Vec3 lo;
    Vec3 hi;
    std::uint32_t begin = 0;
    std::uint32_t count = 0;  // > 0 for leaves
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  TriangleMesh mesh_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace pcsketch
