#include "pcsketch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pcsketch/random.hpp"
#include "pcsketch/spatial_index.hpp"

namespace pcsketch {

Pose fit_rigid_transform(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (source.size() != target.size()) {
    throw Error(ErrorCode::InvalidArgument, "source and target sizes differ");
  }
  if (source.size() < 3) {
    throw Error(ErrorCode::DegenerateCorrespondences, "need at least 3 correspondences");
  }
  const auto n = static_cast<double>(source.size());
  Vec3 cs = Vec3::Zero();
  Vec3 ct = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    cs += source[i];
    ct += target[i];
  }
  cs /= n;
  ct /= n;

  Mat3 cross = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec3 ds = source[i] - cs;
    cross += ds * (target[i] - ct).transpose();
    spread += ds * ds.transpose();
  }
  // Collinear (or coincident) sources leave rotation about their line free.
  const Vec3 ev = Eigen::SelfAdjointEigenSolver<Mat3>(spread, Eigen::EigenvaluesOnly).eigenvalues();
  if (!(ev[2] > 0.0) || ev[1] <= 1e-12 * ev[2]) {
    throw Error(ErrorCode::DegenerateCorrespondences, "correspondences are collinear");
  }

  const Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 fix = Mat3::Identity();
  fix(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = v * fix * u.transpose();
  return Pose::from_matrix(r, ct - r * cs);
}

Pose align_from_correspondences(const CorrespondenceSet& corr, const PointCloud& cloud) {
  std::unordered_map<PointId, std::size_t> where;
  where.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) where.emplace(cloud[i].id, i);
  std::vector<Vec3> src;
  std::vector<Vec3> dst;
  for (const Correspondence& c : corr) {
    auto it = where.find(c.point_id);
    if (it == where.end()) {
      throw Error(ErrorCode::UnknownPointId,
                  "correspondence names point " + std::to_string(c.point_id) + " not in the cloud");
    }
    src.push_back(cloud[it->second].position);
    dst.push_back(c.target);
  }
  return fit_rigid_transform(src, dst);
}

PointCloud sample_mesh(const TriangleMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "cannot sample an empty mesh");
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  std::vector<double> cumulative(mesh.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mesh.size(); ++i) {
    total += mesh.area(i);
    cumulative[i] = total;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyMesh, "mesh has zero surface area");

  DeterministicRng rng(seed);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double pick = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    const std::size_t tri = std::min<std::size_t>(it - cumulative.begin(), mesh.size() - 1);
    const auto [a, b, c] = mesh.corners(tri);
    const double r1 = std::sqrt(rng.uniform());
    const double r2 = rng.uniform();
    Point p;
    p.id = s;
    p.position = (1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c;
    out.push_back(p);
  }
  return PointCloud(std::move(out));
}

void IcpConfig::validate() const {
  if (max_iterations < 1 || !(max_correspondence_distance > 0.0) || !(convergence_delta > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "ICP parameters must be positive");
  }
}

namespace {

struct Pairing {
  std::vector<Vec3> source;
  std::vector<Vec3> target;
  double rmse = 0.0;
};

Pairing pair_up(const std::vector<Vec3>& source, const Pose& pose, const SpatialIndex& target,
                double gate) {
  Pairing p;
  double ss = 0.0;
  for (const Vec3& s : source) {
    const Vec3 moved = pose.apply(s);
    const Neighbor nn = target.nearest(moved);
    if (nn.distance > gate) continue;
    p.source.push_back(moved);
    p.target.push_back(target.position(nn.index));
    ss += nn.distance * nn.distance;
  }
  if (p.source.empty()) {
    throw Error(ErrorCode::NoCorrespondences, "no point pairs within the correspondence distance");
  }
  p.rmse = std::sqrt(ss / static_cast<double>(p.source.size()));
  return p;
}

double rms_after(const Pose& delta, const Pairing& p) {
  double ss = 0.0;
  for (std::size_t i = 0; i < p.source.size(); ++i) {
    ss += (delta.apply(p.source[i]) - p.target[i]).squaredNorm();
  }
  return std::sqrt(ss / static_cast<double>(p.source.size()));
}

}  // namespace

IcpResult icp_refine(const PointCloud& source, const PointCloud& target, const Pose& init,
                     const IcpConfig& cfg) {
  cfg.validate();
  if (source.empty() || target.empty()) throw Error(ErrorCode::EmptyCloud, "ICP needs two clouds");
  const SpatialIndex index(target.positions());
  const std::vector<Vec3> src = source.positions();

  IcpResult result;
  result.pose = init;
  double previous = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const Pairing pairs = pair_up(src, result.pose, index, cfg.max_correspondence_distance);
    result.pair_rmse.push_back(pairs.rmse);
    if (std::abs(previous - pairs.rmse) < cfg.convergence_delta) break;
    previous = pairs.rmse;
    const Pose delta = fit_rigid_transform(pairs.source, pairs.target);
    result.step_rmse.push_back(rms_after(delta, pairs));
    result.pose = delta * result.pose;
    ++result.iterations;
  }
  const Pairing final_pairs = pair_up(src, result.pose, index, cfg.max_correspondence_distance);
  result.rmse = final_pairs.rmse;
  result.inliers = final_pairs.source.size();
  return result;
}

DistanceSummary summarize(std::span<const double> distances) {
  DistanceSummary s;
  if (distances.empty()) return s;
  const auto n = static_cast<double>(distances.size());
  double sum = 0.0;
  for (double d : distances) sum += d;
  s.mean = sum / n;
  double ss = 0.0;
  for (double d : distances) ss += (d - s.mean) * (d - s.mean);
  s.std = std::sqrt(ss / n);
  std::vector<double> sorted(distances.begin(), distances.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

DistanceReport point_to_mesh_distance(const PointCloud& cloud, const TriangleBvh& bvh) {
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "no points to measure");
  DistanceReport r;
  r.ids.reserve(cloud.size());
  r.distances.reserve(cloud.size());
  for (const Point& p : cloud) {
    r.ids.push_back(p.id);
    r.distances.push_back(bvh.distance(p.position));
  }
  r.summary = summarize(r.distances);
  return r;
}

Rgb heat_color(double distance, double saturation) {
  double s = 0.0;
  if (saturation > 0.0) {
    s = std::clamp(distance / saturation, 0.0, 1.0);
  } else {
    s = distance > 0.0 ? 1.0 : 0.0;
  }
  auto level = [](double t) { return static_cast<std::uint8_t>(std::lround(255.0 * t)); };
  if (s <= 0.5) {
    const double t = 2.0 * s;
    return {0, level(t), level(1.0 - t)};
  }
  const double t = 2.0 * (s - 0.5);
  return {level(t), level(1.0 - t), 0};
}

double distance_percentile(const DistanceReport& report, double q) {
  if (report.distances.empty()) throw Error(ErrorCode::EmptyCloud, "empty report");
  std::vector<double> sorted = report.distances;
  std::sort(sorted.begin(), sorted.end());
  const auto rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * sorted.size()));
  return sorted[rank == 0 ? 0 : rank - 1];
}

PointCloud colorize_heatmap(const PointCloud& cloud, const DistanceReport& report,
                            double saturation) {
  if (saturation < 0.0) throw Error(ErrorCode::InvalidArgument, "saturation must be >= 0");
  if (report.ids.size() != cloud.size() || report.distances.size() != cloud.size()) {
    throw Error(ErrorCode::MismatchedReport, "report and cloud sizes differ");
  }
  std::vector<Point> out(cloud.begin(), cloud.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (report.ids[i] != out[i].id) {
      throw Error(ErrorCode::MismatchedReport, "report ids do not match the cloud");
    }
    out[i].color = heat_color(report.distances[i], saturation);
  }
  return PointCloud(std::move(out));
}

EvaluationResult evaluate(const PointCloud& cloud, const TriangleMesh& mesh,
                          const std::optional<CorrespondenceSet>& corr,
                          const EvaluationConfig& cfg) {
  if (mesh.empty()) throw Error(ErrorCode::EmptyMesh, "ground-truth mesh has no triangles");
  if (cloud.empty()) throw Error(ErrorCode::EmptyCloud, "cloud to evaluate is empty");
  EvaluationResult r;
  r.coarse = corr ? align_from_correspondences(*corr, cloud) : Pose();
  const PointCloud samples = sample_mesh(mesh, cfg.samples, cfg.seed);
  r.icp = icp_refine(cloud, samples, r.coarse, cfg.icp);
  r.registered = transform_cloud(cloud, r.icp.pose);
  const TriangleBvh bvh(mesh);
  r.report = point_to_mesh_distance(r.registered, bvh);
  r.saturation = cfg.saturation ? *cfg.saturation : distance_percentile(r.report, 0.99);
  r.heatmap = colorize_heatmap(r.registered, r.report, r.saturation);
  return r;
}

void write_report(const EvaluationResult& result, const std::filesystem::path& path,
                  bool per_point) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  auto fixed = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9f", v);
    return std::string(buf);
  };
  const DistanceSummary& s = result.report.summary;
  const Eigen::Quaterniond q = result.icp.pose.quaternion();
  const Vec3& t = result.icp.pose.translation();
  out << "{\n";
  out << "  \"units\": \"m\",\n";
  out << "  \"points\": " << result.report.distances.size() << ",\n";
  out << "  \"summary\": {\"mean\": " << fixed(s.mean) << ", \"median\": " << fixed(s.median)
      << ", \"std\": " << fixed(s.std) << ", \"min\": " << fixed(s.min)
      << ", \"max\": " << fixed(s.max) << "},\n";
  out << "  \"registration\": {\"translation\": [" << fixed(t.x()) << ", " << fixed(t.y())
      << ", " << fixed(t.z()) << "], \"rotation\": [" << fixed(q.w()) << ", " << fixed(q.x())
      << ", " << fixed(q.y()) << ", " << fixed(q.z()) << "], \"icp_rmse\": "
      << fixed(result.icp.rmse) << ", \"icp_iterations\": " << result.icp.iterations << "},\n";
  out << "  \"heatmap_saturation\": " << fixed(result.saturation);
  if (per_point) {
    out << ",\n  \"distances\": [";
    for (std::size_t i = 0; i < result.report.distances.size(); ++i) {
      out << (i ? ",\n    " : "\n    ") << "{\"id\": " << result.report.ids[i]
          << ", \"distance\": " << fixed(result.report.distances[i]) << "}";
    }
    out << "\n  ]";
  }
  out << "\n}\n";
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace pcsketch
