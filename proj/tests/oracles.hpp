#pragma once

// Brute-force reference implementations used to cross-check the library.
// Each one is written for clarity over speed and shares no code with src/.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "pcsketch/core.hpp"
#include "pcsketch/mesh.hpp"

namespace oracle {

using pcsketch::PointCloud;
using pcsketch::PointId;
using pcsketch::Vec3;

inline std::set<PointId> as_set(const std::vector<PointId>& ids) { return {ids.begin(), ids.end()}; }

inline bool in_aabb(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  for (int i = 0; i < 3; ++i) {
    if (p[i] < lo[i] || p[i] > hi[i]) return false;
  }
  return true;
}

/// Box given by center, three axis columns and half extents.
inline bool in_oriented_box(const Vec3& p, const Vec3& center, const pcsketch::Mat3& axes,
                            const Vec3& half) {
  const Vec3 d = p - center;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d.dot(axes.col(i))) > half[i]) return false;
  }
  return true;
}

inline bool in_cone(const Vec3& p, const Vec3& apex, const Vec3& axis, double height,
                    double radius) {
  const Vec3 d = p - apex;
  const double t = d.dot(axis);
  if (t < 0.0 || t > height) return false;
  const Vec3 radial = d - t * axis;
  return radial.norm() <= radius * t / height;
}

template <typename Pred>
std::set<PointId> select(const PointCloud& cloud, Pred pred) {
  std::set<PointId> out;
  for (const auto& p : cloud) {
    if (pred(p.position)) out.insert(p.id);
  }
  return out;
}

/// Sorted distances from `q` to every position except index `skip`.
inline std::vector<double> sorted_distances(const std::vector<Vec3>& pts, const Vec3& q,
                                            std::size_t skip = SIZE_MAX) {
  std::vector<double> d;
  d.reserve(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    if (j != skip) d.push_back((pts[j] - q).norm());
  }
  std::sort(d.begin(), d.end());
  return d;
}

inline double knn_mean(const std::vector<Vec3>& pts, std::size_t i, std::size_t k) {
  const auto d = sorted_distances(pts, pts[i], i);
  double s = 0.0;
  for (std::size_t j = 0; j < k; ++j) s += d[j];
  return s / static_cast<double>(k);
}

/// Statistical outlier removal: drop points whose mean k-NN distance exceeds
/// mean + ratio * sample std of all mean distances.
inline std::set<PointId> outliers(const PointCloud& cloud, std::size_t k, double ratio) {
  const auto pts = cloud.positions();
  std::vector<double> m(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) m[i] = knn_mean(pts, i, k);
  double mu = 0.0;
  for (double v : m) mu += v;
  mu /= static_cast<double>(m.size());
  double ss = 0.0;
  for (double v : m) ss += (v - mu) * (v - mu);
  const double sigma = std::sqrt(ss / static_cast<double>(m.size() - 1));
  std::set<PointId> out;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] > mu + ratio * sigma) out.insert(cloud[i].id);
  }
  return out;
}

using VoxelKey = std::array<long long, 3>;

inline VoxelKey voxel_of(const Vec3& p, double v) {
  return {static_cast<long long>(std::floor(p.x() / v)), static_cast<long long>(std::floor(p.y() / v)),
          static_cast<long long>(std::floor(p.z() / v))};
}

struct VoxelCentroid {
  VoxelKey key;
  Vec3 centroid;
  int members;
};

/// Occupied voxels in order of first appearance, each with the mean of its
/// members (summed in cloud order).
inline std::vector<VoxelCentroid> voxel_centroids(const PointCloud& cloud, double v) {
  std::map<VoxelKey, std::size_t> slot;
  std::vector<VoxelCentroid> out;
  for (const auto& p : cloud) {
    const VoxelKey k = voxel_of(p.position, v);
    auto it = slot.find(k);
    if (it == slot.end()) {
      it = slot.emplace(k, out.size()).first;
      out.push_back({k, Vec3::Zero(), 0});
    }
    out[it->second].centroid += p.position;
    ++out[it->second].members;
  }
  for (auto& c : out) c.centroid /= c.members;
  return out;
}

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

/// Plane projection when it lands inside the triangle, else nearest edge.
inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double n2 = n.squaredNorm();
  if (n2 > 0.0) {
    const Vec3 q = p - n * ((p - a).dot(n) / n2);
    const bool inside = (b - a).cross(q - a).dot(n) >= 0.0 && (c - b).cross(q - b).dot(n) >= 0.0 &&
                        (a - c).cross(q - c).dot(n) >= 0.0;
    if (inside) return (p - q).norm();
  }
  return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c),
                   point_segment_distance(p, c, a)});
}

inline double point_mesh_distance(const Vec3& p, const pcsketch::TriangleMesh& mesh) {
  double best = INFINITY;
  for (const auto& t : mesh.triangles) {
    best = std::min(best, point_triangle_distance(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                                  mesh.vertices[t[2]]));
  }
  return best;
}

/// Distance to the surface of an axis-aligned box centered at the origin.
inline double box_surface_distance(const Vec3& p, const Vec3& half) {
  const Vec3 q = p.cwiseAbs() - half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside > 0.0 ? outside : -inside;
}

/// Per-face grid samples of a box (local frame), de-duplicated by exact position.
inline std::set<std::array<double, 3>> box_grid_samples(const Vec3& dims, double spacing) {
  std::array<std::vector<double>, 3> ticks;
  for (int a = 0; a < 3; ++a) {
    int n = 1;
    while (dims[a] / n > spacing * (1.0 + 1e-12)) ++n;
    for (int i = 0; i <= n; ++i) {
      ticks[a].push_back(i == n ? dims[a] / 2 : -dims[a] / 2 + i * (dims[a] / n));
    }
  }
  std::set<std::array<double, 3>> out;
  for (int a = 0; a < 3; ++a) {
    for (double s : {-dims[a] / 2, dims[a] / 2}) {
      for (double u : ticks[(a + 1) % 3]) {
        for (double v : ticks[(a + 2) % 3]) {
          std::array<double, 3> p{};
          p[a] = s;
          p[(a + 1) % 3] = u;
          p[(a + 2) % 3] = v;
          out.insert(p);
        }
      }
    }
  }
  return out;
}

// Random inputs.

inline Vec3 random_vec(std::mt19937_64& g, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return {u(g), u(g), u(g)};
}

inline Eigen::Quaterniond random_rotation(std::mt19937_64& g) {
  std::normal_distribution<double> n;
  Eigen::Quaterniond q(n(g), n(g), n(g), n(g));
  return q.normalized();
}

/// Rotation by at most `max_deg` degrees about a random axis.
inline Eigen::Quaterniond small_rotation(std::mt19937_64& g, double max_deg) {
  std::uniform_real_distribution<double> u(0.0, max_deg * M_PI / 180.0);
  const Vec3 axis = random_vec(g, -1, 1).normalized();
  return Eigen::Quaterniond(Eigen::AngleAxisd(u(g), axis));
}

inline PointCloud random_cloud(std::mt19937_64& g, std::size_t n, double lo, double hi,
                               PointId first_id = 0) {
  std::vector<pcsketch::Point> pts;
  std::uniform_int_distribution<int> c(0, 255);
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back({first_id + i, random_vec(g, lo, hi),
                   {static_cast<std::uint8_t>(c(g)), static_cast<std::uint8_t>(c(g)),
                    static_cast<std::uint8_t>(c(g))}});
  }
  return PointCloud(std::move(pts));
}

/// Random triangle soup inside [-1, 1]^3.
inline pcsketch::TriangleMesh random_mesh(std::mt19937_64& g, std::size_t triangles) {
  pcsketch::TriangleMesh m;
  for (std::size_t i = 0; i < triangles; ++i) {
    const Vec3 c = random_vec(g, -1, 1);
    const auto base = static_cast<std::uint32_t>(m.vertices.size());
    for (int k = 0; k < 3; ++k) m.vertices.push_back(c + random_vec(g, -0.2, 0.2));
    m.triangles.push_back({base, base + 1, base + 2});
  }
  return m;
}

}  // namespace oracle
