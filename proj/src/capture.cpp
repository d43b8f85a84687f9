#include "pcsketch/capture.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "pcsketch/script_json.hpp"

namespace pcsketch {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "sensor extents must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must lie on the sensor");
  }
}

void CaptureConfig::validate() const {
  if (grid_cols < 1 || grid_rows < 1) throw Error(ErrorCode::InvalidArgument, "grid dims must be >= 1");
  if (!(move_threshold > 0.0) || !(rotate_threshold > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "capture thresholds must be positive");
  }
  if (!(max_range > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_range must be positive");
}

CameraIntrinsics default_intrinsics() {
  return CameraIntrinsics{5.0 / 0.0087, 5.0 / 0.0087, 125.0, 100.0, 250, 200};
}

double ray_spacing(const CameraIntrinsics& intr, const CaptureConfig& cfg, double range) {
  return range * (static_cast<double>(intr.width) / cfg.grid_cols) / intr.fx;
}

void MaterialModel::validate() const {
  auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(outlier_prob) || !prob(dropout_prob)) {
    throw Error(ErrorCode::InvalidArgument, "material probabilities must lie in [0, 1]");
  }
  if (!(depth_noise_sigma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise sigma must be >= 0");
  if (outlier_prob > 0.0 && !(outlier_scale >= 0.1)) {
    throw Error(ErrorCode::InvalidArgument, "outlier_scale must be >= 0.1 m");
  }
}

TriangleMesh Scene::flatten(const SceneSpec& spec, std::vector<std::uint32_t>& owner) {
  if (spec.objects.empty()) throw Error(ErrorCode::InvalidArgument, "scene has no objects");
  TriangleMesh world;
  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    spec.objects[i].material.validate();
    append_mesh(world, transform_mesh(spec.objects[i].mesh, spec.objects[i].pose));
    owner.resize(world.triangles.size(), static_cast<std::uint32_t>(i));
  }
  return world;
}

Scene::Scene(const SceneSpec& spec)
    : objects_(spec.objects),
      bvh_(flatten(spec, triangle_object_)),
      seed_(spec.seed) {}

bool should_capture(const Pose& prev, const Pose& curr, const CaptureConfig& cfg) {
  const double moved = (curr.translation() - prev.translation()).norm();
  const double turned_deg = rotation_angle(prev, curr) * 180.0 / M_PI;
  return moved >= cfg.move_threshold || turned_deg >= cfg.rotate_threshold;
}

Vec3 backproject(double u, double v, double depth, const CameraIntrinsics& intr,
                 const Pose& pose) {
  if (!(depth > 0.0)) throw Error(ErrorCode::NonPositiveDepth, "depth must be positive");
  const Vec3 cam((u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth);
  return pose.apply(cam);
}

Vec3 project(const Vec3& world, const CameraIntrinsics& intr, const Pose& pose) {
  const Vec3 cam = pose.apply_inverse(world);
  return {intr.fx * cam.x() / cam.z() + intr.cx, intr.fy * cam.y() / cam.z() + intr.cy, cam.z()};
}

Eigen::Vector2d grid_pixel(int col, int row, const CameraIntrinsics& intr,
                           const CaptureConfig& cfg) {
  return {(col + 0.5) * intr.width / cfg.grid_cols, (row + 0.5) * intr.height / cfg.grid_rows};
}

std::vector<Point> capture_frame(const Scene& scene, const Pose& pose,
                                 const CameraIntrinsics& intr, const CaptureConfig& cfg,
                                 CaptureRng& rng) {
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(cfg.points_per_frame()));
  for (int row = 0; row < cfg.grid_rows; ++row) {
    for (int col = 0; col < cfg.grid_cols; ++col) {
      const Eigen::Vector2d px = grid_pixel(col, row, intr, cfg);
      const Vec3 cam_dir((px.x() - intr.cx) / intr.fx, (px.y() - intr.cy) / intr.fy, 1.0);
      const double dir_norm = cam_dir.norm();
      const Vec3 dir = pose.rotation() * (cam_dir / dir_norm);
      const auto hit = scene.bvh().raycast(pose.translation(), dir, cfg.max_range);
      if (!hit) continue;

      const MaterialModel& mat = scene.object_of_triangle(hit->triangle).material;
      const double u_drop = rng.uniform();
      const double noise = rng.normal();
      const double u_out = rng.uniform();
      const double u_mag = rng.uniform();
      if (u_drop < mat.dropout_prob) continue;

      double depth = hit->t / dir_norm;
      if (mat.depth_noise_sigma > 0.0) depth += mat.depth_noise_sigma * noise;
      if (u_out < mat.outlier_prob) depth += 0.1 + (mat.outlier_scale - 0.1) * u_mag;
      if (!(depth > 0.0)) continue;

      Point p;
      p.id = out.size();
      p.position = backproject(px.x(), px.y(), depth, intr, pose);
      p.color = scene.object_of_triangle(hit->triangle).color;
      out.push_back(p);
    }
  }
  return out;
}

PointCloud simulate_scan(const Scene& scene, const std::vector<TrajectorySample>& trajectory,
                         const CameraIntrinsics& intr, const CaptureConfig& cfg,
                         const Aabb& crop, ScanStats* stats) {
  if (trajectory.empty()) throw Error(ErrorCode::EmptyTrajectory, "trajectory has no samples");
  intr.validate();
  cfg.validate();
  CaptureRng rng(scene.seed());
  std::vector<Point> kept;
  ScanStats local;
  const Pose* last = nullptr;
  for (const TrajectorySample& s : trajectory) {
    if (last && !should_capture(*last, s.pose, cfg)) continue;
    last = &s.pose;
    ++local.frames;
    for (Point& p : capture_frame(scene, s.pose, intr, cfg, rng)) {
      ++local.raw_points;
      if (!crop.contains(p.position)) continue;
      p.id = kept.size();
      kept.push_back(p);
    }
  }
  if (stats) *stats = local;
  return PointCloud(std::move(kept));
}

std::vector<TrajectorySample> make_orbit(const Vec3& target, double radius, double height,
                                         int samples, double dt, double start_angle,
                                         double sweep) {
  std::vector<TrajectorySample> out;
  for (int i = 0; i < samples; ++i) {
    const double a = start_angle + sweep * i / samples;
    const Vec3 eye(target.x() + radius * std::cos(a), target.y() + radius * std::sin(a), height);
    out.push_back({i * dt, Pose::look_at(eye, target)});
  }
  return out;
}

namespace {

using nlohmann::json;

double get_number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw Error(ErrorCode::ParseError, std::string("'") + key + "' must be a number");
  return obj[key].get<double>();
}

}  // namespace

SceneFile read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  SceneFile scene;
  try {
    scene.spec.seed = j.value("seed", std::uint64_t{0});
    if (!j.contains("objects") || !j["objects"].is_array()) {
      throw Error(ErrorCode::ParseError, "scene needs an 'objects' array");
    }
    for (const json& o : j["objects"]) {
      SceneObject obj;
      obj.mesh = read_obj(path.parent_path() / o.at("mesh").get<std::string>());
      if (o.contains("pose")) obj.pose = pose_from_json(o["pose"]).to_pose();
      if (o.contains("color")) {
        const auto c = o["color"].get<std::vector<int>>();
        if (c.size() != 3) throw Error(ErrorCode::ParseError, "color needs 3 components");
        obj.color = {static_cast<std::uint8_t>(c[0]), static_cast<std::uint8_t>(c[1]),
                     static_cast<std::uint8_t>(c[2])};
      }
      const json m = o.value("material", json::object());
      obj.material.depth_noise_sigma = get_number(m, "depth_noise_sigma", 0.0);
      obj.material.outlier_prob = get_number(m, "outlier_prob", 0.0);
      obj.material.outlier_scale = get_number(m, "outlier_scale", 0.5);
      obj.material.dropout_prob = get_number(m, "dropout_prob", 0.0);
      obj.material.validate();
      scene.spec.objects.push_back(std::move(obj));
    }
    if (j.contains("intrinsics")) {
      const json& i = j["intrinsics"];
      scene.intrinsics = {i.at("fx").get<double>(), i.at("fy").get<double>(),
                          i.at("cx").get<double>(), i.at("cy").get<double>(),
                          i.at("width").get<int>(), i.at("height").get<int>()};
    }
    if (j.contains("capture")) {
      const json& c = j["capture"];
      scene.config.grid_cols = c.value("grid_cols", scene.config.grid_cols);
      scene.config.grid_rows = c.value("grid_rows", scene.config.grid_rows);
      scene.config.move_threshold = get_number(c, "move_threshold", scene.config.move_threshold);
      scene.config.rotate_threshold = get_number(c, "rotate_threshold", scene.config.rotate_threshold);
      scene.config.max_range = get_number(c, "max_range", scene.config.max_range);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
  scene.intrinsics.validate();
  scene.config.validate();
  return scene;
}

}  // namespace pcsketch
