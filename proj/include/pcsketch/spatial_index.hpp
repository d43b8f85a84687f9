#pragma once

#include <cstddef>
#include <optional>
#include <unordered_map>
#include <vector>

#include "pcsketch/core.hpp"

namespace pcsketch {

struct Neighbor {
  std::size_t index;  ///< position in the indexed snapshot
  double distance;
};

/**
 * @brief Immutable k-d tree over a snapshot of point positions.
 *
 * Later edits to the source cloud do not affect the index. Queries are const
 * and may run concurrently.
 */
class SpatialIndex {
 public:
  /// Throws EmptyCloud for an empty cloud.
  explicit SpatialIndex(const PointCloud& cloud);
  explicit SpatialIndex(std::vector<Vec3> positions);

  std::size_t size() const noexcept { return positions_.size(); }
  const Vec3& position(std::size_t index) const { return positions_[index]; }
  /// Throws UnknownPointId. Only valid for indexes built from a PointCloud.
  std::size_t index_of(PointId id) const;

  /// k nearest snapshot points, ascending by distance (ties by index).
  /// `exclude` removes one snapshot index from consideration.
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k,
                            std::optional<std::size_t> exclude = std::nullopt) const;
  Neighbor nearest(const Vec3& query) const;
  /// Indices within `radius` (inclusive), ascending by index.
  std::vector<std::size_t> radius_search(const Vec3& query, double radius) const;

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  void build();
  std::int32_t build_node(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> positions_;
  std::vector<PointId> ids_;
  std::unordered_map<PointId, std::size_t> id_to_index_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

inline SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

/// Mean distance from a point to its k nearest other points.
/// Throws TooFewPoints when the index holds k points or fewer.
double knn_mean_distance(const SpatialIndex& index, PointId id, std::size_t k);

}  // namespace pcsketch
