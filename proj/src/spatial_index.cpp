#include "pcsketch/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <queue>

namespace pcsketch {

namespace {

constexpr std::uint32_t kLeafSize = 16;

struct Candidate {
  double dist2;
  std::size_t index;
  bool operator<(const Candidate& o) const {
    return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
  }
};

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cannot index an empty cloud");
  positions_.reserve(cloud.size());
  ids_.reserve(cloud.size());
  id_to_index_.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    positions_.push_back(cloud[i].position);
    ids_.push_back(cloud[i].id);
    id_to_index_.emplace(cloud[i].id, i);
  }
  build();
}

SpatialIndex::SpatialIndex(std::vector<Vec3> positions) : positions_(std::move(positions)) {
  if (positions_.empty()) throw Error(ErrorCode::EmptyCloud, "cannot index an empty cloud");
  build();
}

std::size_t SpatialIndex::index_of(PointId id) const {
  auto it = id_to_index_.find(id);
  if (it == id_to_index_.end()) {
    throw Error(ErrorCode::UnknownPointId, "point id " + std::to_string(id) + " not indexed");
  }
  return it->second;
}

void SpatialIndex::build() {
  order_.resize(positions_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.clear();
  nodes_.reserve(2 * positions_.size() / kLeafSize + 1);
  build_node(0, static_cast<std::uint32_t>(order_.size()));
}

std::int32_t SpatialIndex::build_node(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = positions_[order_[begin]];
  Vec3 hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(positions_[order_[i]]);
    hi = hi.cwiseMax(positions_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return positions_[a][axis] < positions_[b][axis];
                   });
  const double split = positions_[order_[mid]][axis];
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  const std::int32_t left = build_node(begin, mid);
  const std::int32_t right = build_node(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<Neighbor> SpatialIndex::knn(const Vec3& query, std::size_t k,
                                        std::optional<std::size_t> exclude) const {
  std::priority_queue<Candidate> heap;  // max-heap: worst candidate on top
  if (k == 0) return {};

  auto visit = [&](auto&& self, std::int32_t node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        if (exclude && *exclude == idx) continue;
        const Candidate c{(positions_[idx] - query).squaredNorm(), idx};
        if (heap.size() < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    const std::int32_t near = diff < 0.0 ? node.left : node.right;
    const std::int32_t far = diff < 0.0 ? node.right : node.left;
    self(self, near);
    if (heap.size() < k || diff * diff <= heap.top().dist2) self(self, far);
  };
  visit(visit, 0);

  std::vector<Candidate> found;
  found.reserve(heap.size());
  while (!heap.empty()) {
    found.push_back(heap.top());
    heap.pop();
  }
  std::sort(found.begin(), found.end());
  std::vector<Neighbor> out;
  out.reserve(found.size());
  for (const Candidate& c : found) {
    out.push_back({c.index, (positions_[c.index] - query).norm()});
  }
  return out;
}

Neighbor SpatialIndex::nearest(const Vec3& query) const { return knn(query, 1).front(); }

std::vector<std::size_t> SpatialIndex::radius_search(const Vec3& query, double radius) const {
  std::vector<std::size_t> out;
  const double r2 = radius * radius;
  auto visit = [&](auto&& self, std::int32_t node_id) -> void {
    const Node& node = nodes_[node_id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        if ((positions_[idx] - query).norm() <= radius) out.push_back(idx);
      }
      return;
    }
    const double diff = query[node.axis] - node.split;
    if (diff <= 0.0 || diff * diff <= r2 * (1.0 + 1e-12)) self(self, node.left);
    if (diff >= 0.0 || diff * diff <= r2 * (1.0 + 1e-12)) self(self, node.right);
  };
  visit(visit, 0);
  std::sort(out.begin(), out.end());
  return out;
}

double knn_mean_distance(const SpatialIndex& index, PointId id, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  if (index.size() <= k) {
    throw Error(ErrorCode::TooFewPoints,
                "need more than " + std::to_string(k) + " points for k-NN statistics");
  }
  const std::size_t self = index.index_of(id);
  const auto neighbors = index.knn(index.position(self), k, self);
  double sum = 0.0;
  for (const Neighbor& n : neighbors) sum += n.distance;
  return sum / static_cast<double>(k);
}

}  // namespace pcsketch
