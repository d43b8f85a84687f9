#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pcsketch/core.hpp"
#include "pcsketch/io.hpp"
#include "pcsketch/mesh.hpp"

namespace pcsketch {

/// Least-squares rotation and translation taking `source[i]` onto
/// `target[i]` (no scale). Throws DegenerateCorrespondences for fewer than
/// three pairs or collinear sources.
Pose fit_rigid_transform(std::span<const Vec3> source, std::span<const Vec3> target);

/// Rigid transform mapping cloud points onto their mesh-frame partners.
Pose align_from_correspondences(const CorrespondenceSet& corr, const PointCloud& cloud);

/// Area-weighted uniform surface samples; ids 0..n-1, white. Throws EmptyMesh.
PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed);

struct IcpConfig {
  int max_iterations = 50;
  double max_correspondence_distance = 0.05;  ///< meters
  double convergence_delta = 1e-7;            ///< meters of RMSE change

  void validate() const;
};

struct IcpResult {
  Pose pose;          ///< source -> target, includes the initial guess
  double rmse = 0.0;  ///< inlier RMSE at `pose`
  int iterations = 0;
  std::size_t inliers = 0;
  /// Inlier RMSE after each rigid update, measured against the pairs that
  /// produced it.
  std::vector<double> step_rmse;
  /// Inlier RMSE of each iteration's pairs before its update.
  std::vector<double> pair_rmse;
};

/// Point-to-point ICP. Throws NoCorrespondences when an iteration finds no
/// pair within max_correspondence_distance.
IcpResult icp_refine(const PointCloud& source, const PointCloud& target, const Pose& init,
                     const IcpConfig& cfg = {});

struct DistanceSummary {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;  ///< population (divide by N)
  double min = 0.0;
  double max = 0.0;
};

struct DistanceReport {
  std::vector<PointId> ids;
  std::vector<double> distances;  ///< meters, aligned with ids
  DistanceSummary summary;
};

/// Summary in fixed index order; median averages the middle pair for even N.
DistanceSummary summarize(std::span<const double> distances);

/// Distance from every point to the closest point on the mesh surface.
/// Throws EmptyCloud.
DistanceReport point_to_mesh_distance(const PointCloud& cloud, const TriangleBvh& bvh);

/// Blue (0) -> green (saturation / 2) -> red (>= saturation), linear between.
Rgb heat_color(double distance, double saturation);

/// Nearest-rank percentile of the report's distances, q in [0, 1].
double distance_percentile(const DistanceReport& report, double q);

/// Recolors points by distance. Throws MismatchedReport if ids differ.
PointCloud colorize_heatmap(const PointCloud& cloud, const DistanceReport& report,
                            double saturation);

struct EvaluationConfig {
  std::size_t samples = 100'000;
  std::uint64_t seed = 0;
  IcpConfig icp;
  /// Heat-map saturation; the 99th-percentile distance when unset.
  std::optional<double> saturation;
};

struct EvaluationResult {
  Pose coarse;  ///< from correspondences (identity when none given)
  IcpResult icp;
  PointCloud registered;  ///< input cloud in mesh frame
  DistanceReport report;
  PointCloud heatmap;
  double saturation = 0.0;
};

/// Correspondence alignment, mesh sampling, ICP onto the samples, then
/// point-to-mesh distances of the registered cloud against the mesh itself.
/// With no correspondences the initial pose is the identity.
EvaluationResult evaluate(const PointCloud& cloud, const TriangleMesh& mesh,
                          const std::optional<CorrespondenceSet>& corr,
                          const EvaluationConfig& cfg = {});

/// JSON report: summary always, per-point distances when requested; all
/// distances in meters with 9 decimals.
void write_report(const EvaluationResult& result, const std::filesystem::path& path,
                  bool per_point);

}  // namespace pcsketch
