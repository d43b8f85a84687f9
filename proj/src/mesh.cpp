#include "pcsketch/mesh.hpp"

#include <algorithm>
#include <numeric>

namespace pcsketch {

double TriangleMesh::area(std::size_t tri) const {
  const auto [a, b, c] = corners(tri);
  return 0.5 * (b - a).cross(c - a).norm();
}

void validate_mesh(TriangleMesh& mesh) {
  const auto n = mesh.vertices.size();
  for (const Vec3& v : mesh.vertices) {
    if (!v.allFinite()) throw Error(ErrorCode::ParseError, "non-finite mesh vertex");
  }
  std::vector<Triangle> kept;
  kept.reserve(mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    for (auto idx : mesh.triangles[i]) {
      if (idx >= n) {
        throw Error(ErrorCode::ParseError,
                    "triangle " + std::to_string(i) + " references vertex " +
                        std::to_string(idx) + " of " + std::to_string(n));
      }
    }
    if (mesh.area(i) > kDegenerateArea) kept.push_back(mesh.triangles[i]);
  }
  mesh.triangles = std::move(kept);
}

TriangleMesh transform_mesh(const TriangleMesh& mesh, const Pose& pose) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = pose.apply(v);
  return out;
}

void append_mesh(TriangleMesh& mesh, const TriangleMesh& other) {
  const auto offset = static_cast<std::uint32_t>(mesh.vertices.size());
  mesh.vertices.insert(mesh.vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const Triangle& t : other.triangles) {
    mesh.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
  }
}

TriangleMesh make_box_mesh(const Vec3& dimensions, const Pose& pose) {
  const Vec3 h = 0.5 * dimensions;
  TriangleMesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(),
                            (i & 4) ? h.z() : -h.z());
  }
  // Outward-facing, counter-clockwise.
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6},   // -z, +z
                 {0, 1, 4}, {1, 5, 4}, {2, 6, 3}, {3, 6, 7},   // -y, +y
                 {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};  // -x, +x
  return transform_mesh(m, pose);
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk (Ericson, Real-Time Collision Detection 5.1.5).
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

std::optional<double> intersect_ray_triangle(const Vec3& origin, const Vec3& dir,
                                             const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pv = dir.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < 1e-15) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tv = origin - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qv = tv.cross(e1);
  const double v = dir.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qv) * inv;
  if (t <= 0.0) return std::nullopt;
  return t;
}

namespace {

double box_distance2(const Vec3& p, const Vec3& lo, const Vec3& hi) {
  const Vec3 d = (lo - p).cwiseMax(Vec3::Zero()).cwiseMax(p - hi);
  return d.squaredNorm();
}

bool ray_box(const Vec3& origin, const Vec3& inv_dir, const Vec3& lo, const Vec3& hi,
             double max_t, double& t_enter) {
  double t0 = 0.0;
  double t1 = max_t;
  for (int i = 0; i < 3; ++i) {
    double ta = (lo[i] - origin[i]) * inv_dir[i];
    double tb = (hi[i] - origin[i]) * inv_dir[i];
    if (std::isnan(ta) || std::isnan(tb)) {
      // Ray parallel to the slab and lying on its plane.
      if (origin[i] < lo[i] || origin[i] > hi[i]) return false;
      continue;
    }
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  t_enter = t0;
  return true;
}

}  // namespace

TriangleBvh::TriangleBvh(TriangleMesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no triangles");
  order_.resize(mesh_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * mesh_.size());
  build(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t TriangleBvh::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  Vec3 clo = lo;
  Vec3 chi = hi;
  for (std::uint32_t i = begin; i < end; ++i) {
    const auto [a, b, c] = mesh_.corners(order_[i]);
    lo = lo.cwiseMin(a).cwiseMin(b).cwiseMin(c);
    hi = hi.cwiseMax(a).cwiseMax(b).cwiseMax(c);
    const Vec3 centroid = (a + b + c) / 3.0;
    clo = clo.cwiseMin(centroid);
    chi = chi.cwiseMax(centroid);
  }
  nodes_[id].lo = lo;
  nodes_[id].hi = hi;

  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  if (end - begin <= 4 || chi[axis] == clo[axis]) {
    nodes_[id].begin = begin;
    nodes_[id].count = end - begin;
    return id;
  }
  const std::uint32_t mid = begin + (end - begin) / 2;
  auto centroid_axis = [&](std::uint32_t tri) {
    const auto [a, b, c] = mesh_.corners(tri);
    return a[axis] + b[axis] + c[axis];
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t x, std::uint32_t y) {
                     return centroid_axis(x) < centroid_axis(y);
                   });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

ClosestPoint TriangleBvh::closest_point(const Vec3& p) const {
  ClosestPoint best;
  double best2 = std::numeric_limits<double>::infinity();
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance2(p, node.lo, node.hi) > best2) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.begin; i < node.begin + node.count; ++i) {
        const auto [a, b, c] = mesh_.corners(order_[i]);
        const Vec3 q = closest_point_on_triangle(p, a, b, c);
        const double d2 = (q - p).squaredNorm();
        if (d2 < best2) {
          best2 = d2;
          best.triangle = order_[i];
          best.point = q;
        }
      }
      continue;
    }
    const double dl = box_distance2(p, nodes_[node.left].lo, nodes_[node.left].hi);
    const double dr = box_distance2(p, nodes_[node.right].lo, nodes_[node.right].hi);
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack.push_back(node.right);
      stack.push_back(node.left);
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  best.distance = (best.point - p).norm();
  return best;
}

std::optional<RayHit> TriangleBvh::raycast(const Vec3& origin, const Vec3& dir,
                                           double max_t) const {
  const Vec3 inv_dir = dir.cwiseInverse();
  std::optional<RayHit> best;
  double best_t = max_t;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    double t_enter = 0.0;
    if (!ray_box(origin, inv_dir, node.lo, node.hi, best_t, t_enter)) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.begin; i < node.begin + node.count; ++i) {
        const auto [a, b, c] = mesh_.corners(order_[i]);
        const auto t = intersect_ray_triangle(origin, dir, a, b, c);
        if (t && *t <= best_t && (!best || *t < best->t)) {
          best_t = *t;
          best = RayHit{order_[i], *t};
        }
      }
      continue;
    }
    stack.push_back(node.right);
    stack.push_back(node.left);
  }
  return best;
}

}  // namespace pcsketch
