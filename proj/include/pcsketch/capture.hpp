#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcsketch/core.hpp"
#include "pcsketch/io.hpp"
#include "pcsketch/mesh.hpp"
#include "pcsketch/random.hpp"

namespace pcsketch {

/// Pinhole intrinsics of the depth grid. The camera looks along +z with +x
/// right and +y down in pixel space.
struct CameraIntrinsics {
  double fx;
  double fy;
  double cx;
  double cy;
  int width;
  int height;

  void validate() const;
};

struct CaptureConfig {
  int grid_cols = 50;
  int grid_rows = 40;
  double move_threshold = 0.01;   ///< meters
  double rotate_threshold = 1.0;  ///< degrees
  double max_range = 5.0;         ///< meters along the ray

  int points_per_frame() const { return grid_cols * grid_rows; }
  void validate() const;
};

/// 250x200 sensor sampled by the default 50x40 grid: 5 px between samples and
/// fx = 5 / 0.0087, so neighbouring rays are 8.7 mm apart at 1 m range.
CameraIntrinsics default_intrinsics();

/// Spacing between neighbouring grid rays at `range` meters, near the optical
/// axis: range * (width / cols) / fx.
double ray_spacing(const CameraIntrinsics& intr, const CaptureConfig& cfg, double range);

struct MaterialModel {
  double depth_noise_sigma = 0.0;  ///< meters, Gaussian depth error
  double outlier_prob = 0.0;       ///< chance of a mis-ranged (reflected) return
  double outlier_scale = 0.5;      ///< meters, upper bound of the extra range
  double dropout_prob = 0.0;       ///< chance the return is lost

  void validate() const;
};

struct SceneObject {
  TriangleMesh mesh;
  Pose pose;
  MaterialModel material;
  Rgb color;
};

struct SceneSpec {
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;
};

/// A SceneSpec flattened into world coordinates with one BVH for ray casting.
class Scene {
 public:
  /// Throws InvalidArgument for an empty scene.
  explicit Scene(const SceneSpec& spec);

  const TriangleBvh& bvh() const noexcept { return bvh_; }
  const SceneObject& object_of_triangle(std::size_t tri) const {
    return objects_[triangle_object_[tri]];
  }
  /// All object meshes in world coordinates.
  const TriangleMesh& world_mesh() const noexcept { return bvh_.mesh(); }
  std::uint64_t seed() const noexcept { return seed_; }

 private:
  static TriangleMesh flatten(const SceneSpec& spec, std::vector<std::uint32_t>& owner);

  std::vector<SceneObject> objects_;
  std::vector<std::uint32_t> triangle_object_;
  TriangleBvh bvh_;
  std::uint64_t seed_;
};

/// One noise stream per scan; see capture_frame for the draw order.
using CaptureRng = DeterministicRng;

/// True iff the device moved at least move_threshold or turned at least
/// rotate_threshold since `prev`.
bool should_capture(const Pose& prev, const Pose& curr, const CaptureConfig& cfg);

/// Pixel (u, v) at camera-frame depth `depth` to world coordinates.
Vec3 backproject(double u, double v, double depth, const CameraIntrinsics& intr,
                 const Pose& pose);

/// World point to (u, v, depth). Inverse of backproject for points in front.
Vec3 project(const Vec3& world, const CameraIntrinsics& intr, const Pose& pose);

/// Pixel coordinates of grid sample (col, row).
Eigen::Vector2d grid_pixel(int col, int row, const CameraIntrinsics& intr,
                           const CaptureConfig& cfg);

/**
 * Casts one ray per grid cell (row-major). For every hit within max_range the
 * stream supplies, in order: a dropout uniform, a depth-noise normal, an
 * outlier uniform and an outlier-magnitude uniform. Misses consume nothing.
 * Returned points carry sequential ids starting at 0.
 */
std::vector<Point> capture_frame(const Scene& scene, const Pose& pose,
                                 const CameraIntrinsics& intr, const CaptureConfig& cfg,
                                 CaptureRng& rng);

struct ScanStats {
  std::size_t frames = 0;
  std::size_t raw_points = 0;  ///< before cropping
};

/// Walks the trajectory, capturing at the first sample and whenever
/// should_capture fires against the last captured pose; keeps points inside
/// `crop` and numbers them 0..n-1. Throws EmptyTrajectory.
PointCloud simulate_scan(const Scene& scene, const std::vector<TrajectorySample>& trajectory,
                         const CameraIntrinsics& intr, const CaptureConfig& cfg,
                         const Aabb& crop, ScanStats* stats = nullptr);

/// Circular path around `target` at `radius` and `height`, looking at the
/// target, `samples` poses spaced `dt` seconds apart.
std::vector<TrajectorySample> make_orbit(const Vec3& target, double radius, double height,
                                         int samples, double dt = 0.1,
                                         double start_angle = 0.0, double sweep = 2.0 * M_PI);

struct SceneFile {
  SceneSpec spec;
  CameraIntrinsics intrinsics = default_intrinsics();
  CaptureConfig config;
};

/// JSON scene description; mesh paths resolve relative to the file.
SceneFile read_scene(const std::filesystem::path& path);

}  // namespace pcsketch
