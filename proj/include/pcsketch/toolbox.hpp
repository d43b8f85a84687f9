#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcsketch/core.hpp"
#include "pcsketch/script.hpp"

namespace pcsketch {

/// Proposed change to a cloud: points to add and ids to remove.
struct PendingEdit {
  ToolInvocation invocation;
  std::vector<Point> added;
  std::vector<PointId> removed;  ///< in cloud order

  std::string_view tool() const { return tool_name(invocation); }
};

/// Hands out ids that are never reused.
class IdAllocator {
 public:
  explicit IdAllocator(PointId next = 0) : next_(next) {}
  PointId next() { return next_++; }
  PointId peek() const noexcept { return next_; }

 private:
  PointId next_;
};

// Pure tools: each computes the edit it would make to `cloud`.

PendingEdit crop_edit(const PointCloud& cloud, const CropParams& params);
/// Statistical outlier removal with k = 20 neighbours; throws TooFewPoints
/// unless the cloud has more than k + 1 points.
PendingEdit remove_outliers_edit(const PointCloud& cloud, const OutlierParams& params);
PendingEdit downsample_edit(const PointCloud& cloud, const DownsampleParams& params,
                            IdAllocator& ids);
PendingEdit create_primitive_edit(const PrimitiveSpec& spec, IdAllocator& ids);
PendingEdit erase_sponge_edit(const PointCloud& cloud, const SpongeParams& params);
PendingEdit erase_spray_edit(const PointCloud& cloud, const SprayParams& params);

PendingEdit compute_edit(const PointCloud& cloud, const ToolInvocation& invocation,
                         IdAllocator& ids);

/// Survivors keep their order; added points are appended.
PointCloud apply_edit(const PointCloud& cloud, const PendingEdit& edit);

/// Surface samples of a primitive in world coordinates: every face gets a
/// (ceil(edge / spacing) + 1)-per-axis grid, shared edge samples appear once.
std::vector<Vec3> sample_primitive(const PrimitiveSpec& spec);

/// Voxel key floor(p / voxel) used by downsampling.
Eigen::Matrix<std::int64_t, 3, 1> voxel_key(const Vec3& p, double voxel);

struct PlaneFitOptions {
  double inlier_threshold = 0.01;  ///< meters
  int iterations = 200;
  std::uint64_t seed = 0;
  double min_inlier_ratio = 0.5;
  double max_tilt_deg = 15.0;
  /// Normal is flipped to face this point when given.
  std::optional<Vec3> view_origin;
};

enum class SurfaceKind { Horizontal, Vertical };

struct SupportPlane {
  Vec3 point;   ///< seed projected onto the plane
  Vec3 normal;  ///< unit
  SurfaceKind kind;
  std::size_t inliers;
};

/// RANSAC plane over points within `radius` of `seed_point`, refined by least
/// squares. Throws TooFewPoints, NoPlaneFound or NotAxisAligned.
SupportPlane fit_support_plane(const PointCloud& cloud, const Vec3& seed_point, double radius,
                               const PlaneFitOptions& options = {});

/// Prism resting on the plane: local z along the normal, bottom face on it.
PrimitiveSpec primitive_on_plane(const SupportPlane& plane, const Vec3& dimensions,
                                 const Rgb& color = {});

/// Thrown by EditSession::apply_script; `record()` is the 0-based index.
class ScriptError : public Error {
 public:
  ScriptError(const Error& cause, std::size_t record)
      : Error(cause.code(), "record " + std::to_string(record) + " (" +
                                std::string(error_code_name(cause.code())) + "): " +
                                cause.what()),
        record_(record) {}
  std::size_t record() const noexcept { return record_; }

 private:
  std::size_t record_;
};

/**
 * @brief Committed cloud plus at most one pending preview and an undo stack.
 *
 * Committed snapshots are immutable and shared, so readers can hold one while
 * the session moves on. Point ids are never reused within a session.
 */
class EditSession {
 public:
  static constexpr std::size_t kDefaultHistory = 32;

  explicit EditSession(PointCloud initial = {}, std::size_t history_cap = kDefaultHistory);

  std::shared_ptr<const PointCloud> committed() const noexcept { return committed_; }
  const std::optional<PendingEdit>& pending() const noexcept { return pending_; }
  std::size_t history_depth() const noexcept { return history_.size(); }

  /// Replaces the committed cloud and clears preview and history.
  void load(PointCloud cloud);

  /// Computes the tool's edit against the committed cloud and holds it as the
  /// pending preview, replacing any earlier preview.
  const PendingEdit& preview(const ToolInvocation& invocation);

  const PendingEdit& crop(const Aabb& box);
  const PendingEdit& remove_outliers(Level strength);
  const PendingEdit& downsample(Level strength);
  const PendingEdit& create_primitive(const PrimitiveSpec& spec);
  const PendingEdit& erase_sponge(const std::vector<Pose>& stroke, Size size);
  const PendingEdit& erase_spray(const std::vector<SprayStroke>& strokes);

  void commit();   ///< throws NoPendingEdit
  void discard();  ///< throws NoPendingEdit
  void undo();     ///< throws NothingToUndo; also drops any preview

  /// Runs every record as preview + commit. On failure the session stays at
  /// the last successful commit and ScriptError names the record.
  void apply_script(const SessionScript& script);

 private:
  std::shared_ptr<const PointCloud> committed_;
  std::optional<PendingEdit> pending_;
  std::deque<std::shared_ptr<const PointCloud>> history_;
  std::size_t history_cap_;
  IdAllocator ids_;
};

}  // namespace pcsketch
