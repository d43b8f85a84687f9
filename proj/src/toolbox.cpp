#include "pcsketch/toolbox.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Eigenvalues>

#include "pcsketch/spatial_index.hpp"

namespace pcsketch {

namespace {

template <typename Pred>
std::vector<PointId> ids_where(const PointCloud& cloud, Pred&& pred) {
  std::vector<PointId> out;
  for (const Point& p : cloud) {
    if (pred(p.position)) out.push_back(p.id);
  }
  return out;
}

struct KeyHash {
  std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
    std::size_t h = 0;
    for (auto v : k) {
      h ^= std::hash<std::int64_t>{}(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

}  // namespace

Eigen::Matrix<std::int64_t, 3, 1> voxel_key(const Vec3& p, double voxel) {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
}

PendingEdit crop_edit(const PointCloud& cloud, const CropParams& params) {
  const Aabb box(params.min, params.max);
  PendingEdit e{params, {}, ids_where(cloud, [&](const Vec3& p) { return !box.contains(p); })};
  return e;
}

PendingEdit remove_outliers_edit(const PointCloud& cloud, const OutlierParams& params) {
  constexpr std::size_t k = tool_settings::kNeighbors;
  if (cloud.size() <= k + 1) {
    throw Error(ErrorCode::TooFewPoints, "outlier removal needs more than " +
                                             std::to_string(k + 1) + " points, cloud has " +
                                             std::to_string(cloud.size()));
  }
  const SpatialIndex index(cloud);
  std::vector<double> mean_dist(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double sum = 0.0;
    for (const Neighbor& n : index.knn(cloud[i].position, k, i)) sum += n.distance;
    mean_dist[i] = sum / static_cast<double>(k);
  }
  const auto n = static_cast<double>(cloud.size());
  double mu = 0.0;
  for (double d : mean_dist) mu += d;
  mu /= n;
  double ss = 0.0;
  for (double d : mean_dist) ss += (d - mu) * (d - mu);
  const double sigma = std::sqrt(ss / (n - 1.0));
  const double threshold = mu + tool_settings::outlier_std_ratio(params.strength) * sigma;

  PendingEdit e{params, {}, {}};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (mean_dist[i] > threshold) e.removed.push_back(cloud[i].id);
  }
  return e;
}

PendingEdit downsample_edit(const PointCloud& cloud, const DownsampleParams& params,
                            IdAllocator& ids) {
  const double voxel = tool_settings::voxel_size(params.strength);
  struct Acc {
    Vec3 sum = Vec3::Zero();
    std::array<std::uint64_t, 3> color{0, 0, 0};
    std::size_t count = 0;
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::size_t, KeyHash> slot;
  std::vector<Acc> acc;
  PendingEdit e{params, {}, {}};
  e.removed.reserve(cloud.size());
  for (const Point& p : cloud) {
    const auto k = voxel_key(p.position, voxel);
    const auto [it, fresh] = slot.try_emplace({k.x(), k.y(), k.z()}, acc.size());
    if (fresh) acc.emplace_back();
    Acc& a = acc[it->second];
    a.sum += p.position;
    a.color[0] += p.color.r;
    a.color[1] += p.color.g;
    a.color[2] += p.color.b;
    ++a.count;
    e.removed.push_back(p.id);
  }
  e.added.reserve(acc.size());
  for (const Acc& a : acc) {
    const auto n = static_cast<double>(a.count);
    auto avg = [&](std::uint64_t c) {
      return static_cast<std::uint8_t>(std::lround(static_cast<double>(c) / n));
    };
    e.added.push_back({ids.next(), a.sum / n, {avg(a.color[0]), avg(a.color[1]), avg(a.color[2])}});
  }
  return e;
}

std::vector<Vec3> sample_primitive(const PrimitiveSpec& spec) {
  if ((spec.dimensions.array() <= 0.0).any() || !(spec.sample_spacing > 0.0)) {
    throw Error(ErrorCode::InvalidParams, "primitive dimensions and spacing must be positive");
  }
  const Vec3 half = 0.5 * spec.dimensions;
  std::array<std::vector<double>, 3> axis;
  for (int a = 0; a < 3; ++a) {
    // Tolerance so nominal multiples (0.07 / 0.01 = 7.000000000000001) get no extra sample.
    const auto n = static_cast<std::size_t>(
                       std::ceil(spec.dimensions[a] / spec.sample_spacing - 1e-9)) + 1;
    const double step = spec.dimensions[a] / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      axis[a].push_back(i + 1 == n ? half[a] : -half[a] + static_cast<double>(i) * step);
    }
  }

  std::vector<Vec3> local;
  std::map<std::array<double, 3>, bool> seen;
  for (int a = 0; a < 3; ++a) {
    const int b = (a + 1) % 3;
    const int c = (a + 2) % 3;
    for (const double fixed : {-half[a], half[a]}) {
      for (double u : axis[b]) {
        for (double v : axis[c]) {
          Vec3 p;
          p[a] = fixed;
          p[b] = u;
          p[c] = v;
          if (seen.emplace(std::array<double, 3>{p.x(), p.y(), p.z()}, true).second) {
            local.push_back(p);
          }
        }
      }
    }
  }
  const Pose pose = spec.pose.to_pose();
  for (Vec3& p : local) p = pose.apply(p);
  return local;
}

PendingEdit create_primitive_edit(const PrimitiveSpec& spec, IdAllocator& ids) {
  PendingEdit e{spec, {}, {}};
  for (const Vec3& p : sample_primitive(spec)) e.added.push_back({ids.next(), p, spec.color});
  return e;
}

PendingEdit erase_sponge_edit(const PointCloud& cloud, const SpongeParams& params) {
  if (params.stroke.empty()) throw Error(ErrorCode::EmptyStroke, "sponge stroke has no poses");
  const Vec3 half = tool_settings::sponge_half_extents(params.size);
  std::vector<OrientedBox> boxes;
  boxes.reserve(params.stroke.size());
  for (const PoseRecord& pose : params.stroke) boxes.emplace_back(pose.to_pose(), half);
  return {params, {}, ids_where(cloud, [&](const Vec3& p) {
            return std::any_of(boxes.begin(), boxes.end(),
                               [&](const OrientedBox& b) { return b.contains(p); });
          })};
}

PendingEdit erase_spray_edit(const PointCloud& cloud, const SprayParams& params) {
  if (params.strokes.empty()) throw Error(ErrorCode::EmptyStroke, "spray stroke has no samples");
  std::vector<Cone> cones;
  cones.reserve(params.strokes.size());
  for (const SprayStroke& s : params.strokes) {
    if (!(s.ray_dir.norm() > 0.0)) throw Error(ErrorCode::InvalidParams, "spray direction is zero");
    cones.emplace_back(s.ray_origin, s.ray_dir.normalized(), tool_settings::spray_depth(s.depth),
                       tool_settings::spray_radius(s.size));
  }
  return {params, {}, ids_where(cloud, [&](const Vec3& p) {
            return std::any_of(cones.begin(), cones.end(),
                               [&](const Cone& c) { return c.contains(p); });
          })};
}

PendingEdit compute_edit(const PointCloud& cloud, const ToolInvocation& invocation,
                         IdAllocator& ids) {
  return std::visit(
      [&](const auto& p) -> PendingEdit {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, CropParams>) return crop_edit(cloud, p);
        else if constexpr (std::is_same_v<T, OutlierParams>) return remove_outliers_edit(cloud, p);
        else if constexpr (std::is_same_v<T, DownsampleParams>) return downsample_edit(cloud, p, ids);
        else if constexpr (std::is_same_v<T, PrimitiveSpec>) return create_primitive_edit(p, ids);
        else if constexpr (std::is_same_v<T, SpongeParams>) return erase_sponge_edit(cloud, p);
        else return erase_spray_edit(cloud, p);
      },
      invocation);
}

PointCloud apply_edit(const PointCloud& cloud, const PendingEdit& edit) {
  const std::unordered_set<PointId> removed(edit.removed.begin(), edit.removed.end());
  std::vector<Point> out;
  out.reserve(cloud.size() - std::min(cloud.size(), removed.size()) + edit.added.size());
  for (const Point& p : cloud) {
    if (!removed.count(p.id)) out.push_back(p);
  }
  out.insert(out.end(), edit.added.begin(), edit.added.end());
  return PointCloud(std::move(out));
}

SupportPlane fit_support_plane(const PointCloud& cloud, const Vec3& seed_point, double radius,
                               const PlaneFitOptions& options) {
  std::vector<Vec3> pts;
  for (const Point& p : cloud) {
    if ((p.position - seed_point).norm() <= radius) pts.push_back(p.position);
  }
  if (pts.size() < 3) {
    throw Error(ErrorCode::TooFewPoints, "plane fit needs at least 3 points within the radius");
  }

  std::mt19937_64 rng(options.seed);
  auto pick = [&]() {
    return static_cast<std::size_t>((rng() >> 11) * 0x1.0p-53 * static_cast<double>(pts.size()));
  };
  std::vector<std::size_t> best_inliers;
  for (int it = 0; it < options.iterations; ++it) {
    const std::size_t i = pick(), j = pick(), k = pick();
    if (i == j || j == k || i == k) continue;
    Vec3 n = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
    if (n.norm() < 1e-12) continue;
    n.normalize();
    std::vector<std::size_t> inliers;
    for (std::size_t m = 0; m < pts.size(); ++m) {
      if (std::abs(n.dot(pts[m] - pts[i])) <= options.inlier_threshold) inliers.push_back(m);
    }
    if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
  }
  const double ratio = static_cast<double>(best_inliers.size()) / static_cast<double>(pts.size());
  if (best_inliers.size() < 3 || ratio < options.min_inlier_ratio) {
    throw Error(ErrorCode::NoPlaneFound, "no plane supported by enough of the neighbourhood");
  }

  Vec3 centroid = Vec3::Zero();
  for (auto m : best_inliers) centroid += pts[m];
  centroid /= static_cast<double>(best_inliers.size());
  Mat3 cov = Mat3::Zero();
  for (auto m : best_inliers) {
    const Vec3 d = pts[m] - centroid;
    cov += d * d.transpose();
  }
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 normal = eig.eigenvectors().col(0).normalized();

  if (options.view_origin) {
    if (normal.dot(*options.view_origin - centroid) < 0.0) normal = -normal;
  } else {
    int dominant = 0;
    normal.cwiseAbs().maxCoeff(&dominant);
    if (normal[dominant] < 0.0) normal = -normal;
  }

  const double tilt = std::acos(std::clamp(std::abs(normal.z()), 0.0, 1.0)) * 180.0 / M_PI;
  SurfaceKind kind;
  if (tilt <= options.max_tilt_deg) {
    kind = SurfaceKind::Horizontal;
  } else if (tilt >= 90.0 - options.max_tilt_deg) {
    kind = SurfaceKind::Vertical;
  } else {
    throw Error(ErrorCode::NotAxisAligned, "surface is tilted " + std::to_string(tilt) +
                                               " degrees; only horizontal or vertical supported");
  }
  const Vec3 on_plane = seed_point - normal * normal.dot(seed_point - centroid);
  return {on_plane, normal, kind, best_inliers.size()};
}

PrimitiveSpec primitive_on_plane(const SupportPlane& plane, const Vec3& dimensions,
                                 const Rgb& color) {
  const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), plane.normal);
  PrimitiveSpec spec;
  spec.pose.translation = plane.point + plane.normal * (0.5 * dimensions.z());
  spec.pose.wxyz = {q.w(), q.x(), q.y(), q.z()};
  spec.dimensions = dimensions;
  spec.color = color;
  return spec;
}

// --------------------------------------------------------------------------
// EditSession
// --------------------------------------------------------------------------

EditSession::EditSession(PointCloud initial, std::size_t history_cap)
    : history_cap_(history_cap) {
  load(std::move(initial));
}

void EditSession::load(PointCloud cloud) {
  ids_ = IdAllocator(std::max(ids_.peek(), cloud.next_free_id()));
  committed_ = std::make_shared<const PointCloud>(std::move(cloud));
  pending_.reset();
  history_.clear();
}

const PendingEdit& EditSession::preview(const ToolInvocation& invocation) {
  pending_ = compute_edit(*committed_, invocation, ids_);
  return *pending_;
}

const PendingEdit& EditSession::crop(const Aabb& box) { return preview(CropParams{box.min, box.max}); }

const PendingEdit& EditSession::remove_outliers(Level strength) {
  return preview(OutlierParams{strength});
}

const PendingEdit& EditSession::downsample(Level strength) {
  return preview(DownsampleParams{strength});
}

const PendingEdit& EditSession::create_primitive(const PrimitiveSpec& spec) { return preview(spec); }

const PendingEdit& EditSession::erase_sponge(const std::vector<Pose>& stroke, Size size) {
  SpongeParams p;
  p.size = size;
  for (const Pose& pose : stroke) p.stroke.push_back(PoseRecord::from_pose(pose));
  return preview(p);
}

const PendingEdit& EditSession::erase_spray(const std::vector<SprayStroke>& strokes) {
  return preview(SprayParams{strokes});
}

void EditSession::commit() {
  if (!pending_) throw Error(ErrorCode::NoPendingEdit, "nothing to commit");
  auto next = std::make_shared<const PointCloud>(apply_edit(*committed_, *pending_));
  history_.push_back(committed_);
  while (history_.size() > history_cap_) history_.pop_front();
  committed_ = std::move(next);
  pending_.reset();
}

void EditSession::discard() {
  if (!pending_) throw Error(ErrorCode::NoPendingEdit, "nothing to discard");
  pending_.reset();
}

void EditSession::undo() {
  if (history_.empty()) throw Error(ErrorCode::NothingToUndo, "no committed edit to undo");
  committed_ = history_.back();
  history_.pop_back();
  pending_.reset();
}

void EditSession::apply_script(const SessionScript& script) {
  for (std::size_t i = 0; i < script.size(); ++i) {
    try {
      preview(script[i]);
      commit();
    } catch (const Error& e) {
      pending_.reset();
      throw ScriptError(e, i);
    }
  }
}

}  // namespace pcsketch
