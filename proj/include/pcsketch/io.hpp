#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "pcsketch/core.hpp"
#include "pcsketch/mesh.hpp"
#include "pcsketch/script.hpp"

namespace pcsketch {

enum class PlyFormat { Ascii, BinaryLittleEndian };

struct PlyWriteOptions {
  PlyFormat format = PlyFormat::BinaryLittleEndian;
  /// Appends a `uint64 id` vertex property so point ids survive the file.
  bool write_ids = false;
};

/// Reads x/y/z (float or double) and optional red/green/blue (uchar). Points
/// get ids from an `id` property when present, else 0..n-1 in file order.
PointCloud read_ply(const std::filesystem::path& path);
PointCloud read_ply(std::istream& in);

void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               const PlyWriteOptions& options = {});
void write_ply(const PointCloud& cloud, std::ostream& out, const PlyWriteOptions& options = {});

/// `v` and `f` directives only; polygons are fan-triangulated.
TriangleMesh read_obj(const std::filesystem::path& path);
TriangleMesh read_obj(std::istream& in);
void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path);

struct TrajectorySample {
  double timestamp = 0.0;
  Pose pose;
};

/// Line format: `t tx ty tz qw qx qy qz`. Quaternions within 1e-3 of unit
/// norm are renormalized.
std::vector<TrajectorySample> read_trajectory(const std::filesystem::path& path);
std::vector<TrajectorySample> read_trajectory(std::istream& in);
void write_trajectory(const std::vector<TrajectorySample>& samples,
                      const std::filesystem::path& path);

/// One JSON tool record per line; blank lines and `#` comments are skipped.
SessionScript read_script(const std::filesystem::path& path);
SessionScript read_script(std::istream& in);
void write_script(const SessionScript& script, const std::filesystem::path& path);
void write_script(const SessionScript& script, std::ostream& out);

struct Correspondence {
  PointId point_id = 0;
  Vec3 target = Vec3::Zero();  ///< mesh-frame position
};
using CorrespondenceSet = std::vector<Correspondence>;

/// Line format: `pointId qx qy qz`.
CorrespondenceSet read_correspondences(const std::filesystem::path& path);
CorrespondenceSet read_correspondences(std::istream& in);

}  // namespace pcsketch
