// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "generators.hpp"
#include "oracles.hpp"
#include "pcsketch/capture.hpp"
#include "pcsketch/evaluation.hpp"
#include "pcsketch/io.hpp"
#include "pcsketch/toolbox.hpp"

using namespace pcsketch;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

/// Sponge half extents and spray geometry, restated for the oracles.
Vec3 sponge_half(Size s) {
  switch (s) {
    case Size::Small: return {0.05, 0.035, 0.01};
    case Size::Medium: return {0.10, 0.07, 0.02};
    case Size::Big: return {0.15, 0.105, 0.04};
  }
  return {};
}
double spray_radius(Size s) { return s == Size::Small ? 0.05 : s == Size::Medium ? 0.10 : 0.20; }
double spray_depth(Depth d) { return d == Depth::Shallow ? 0.5 : d == Depth::Medium ? 1.0 : 2.0; }
double outlier_ratio(Level l) { return l == Level::Weak ? 3.0 : l == Level::Medium ? 2.0 : 1.0; }
double voxel(Level l) { return l == Level::Weak ? 0.01 : l == Level::Medium ? 0.02 : 0.04; }

Outcome oracle_equivalence() {
  std::mt19937_64 g(1001);
  std::uniform_int_distribution<std::size_t> count(22, 2000);
  std::size_t mismatches = 0;
  std::size_t cases = 0;
  auto compare = [&](const std::vector<PointId>& got, const std::set<PointId>& want) {
    ++cases;
    if (oracle::as_set(got) != want) ++mismatches;
  };

  for (int i = 0; i < 200; ++i) {
    const PointCloud c = oracle::random_cloud(g, count(g), -0.5, 0.5);
    const auto crop = std::get<CropParams>(gen::random_tool(g, 0, 0.5));
    compare(crop_edit(c, crop).removed, oracle::select(c, [&](const Vec3& p) {
              return !oracle::in_aabb(p, crop.min, crop.max);
            }));
  }
  for (int i = 0; i < 200; ++i) {
    const PointCloud c = oracle::random_cloud(g, count(g), -0.3, 0.3);
    const auto sponge = std::get<SpongeParams>(gen::random_tool(g, 4, 0.3));
    const Vec3 half = sponge_half(sponge.size);
    compare(erase_sponge_edit(c, sponge).removed, oracle::select(c, [&](const Vec3& p) {
              for (const PoseRecord& r : sponge.stroke) {
                const Pose pose = r.to_pose();
                if (oracle::in_oriented_box(p, pose.translation(), pose.rotation(), half)) return true;
              }
              return false;
            }));
  }
  for (int i = 0; i < 200; ++i) {
    const PointCloud c = oracle::random_cloud(g, count(g), -1.0, 1.0);
    const auto spray = std::get<SprayParams>(gen::random_tool(g, 5, 1.0));
    compare(erase_spray_edit(c, spray).removed, oracle::select(c, [&](const Vec3& p) {
              for (const SprayStroke& s : spray.strokes) {
                if (oracle::in_cone(p, s.ray_origin, s.ray_dir, spray_depth(s.depth),
                                    spray_radius(s.size))) {
                  return true;
                }
              }
              return false;
            }));
  }
  for (int i = 0; i < 200; ++i) {
    const PointCloud c = oracle::random_cloud(g, count(g), -1.0, 1.0);
    const Pose pose(oracle::random_rotation(g), oracle::random_vec(g, -0.5, 0.5));
    const Vec3 half = oracle::random_vec(g, 0.05, 0.6);
    compare(points_in_oriented_box(c, OrientedBox(pose, half)), oracle::select(c, [&](const Vec3& p) {
              return oracle::in_oriented_box(p, pose.translation(), pose.rotation(), half);
            }));
  }
  for (int i = 0; i < 200; ++i) {
    const PointCloud c = oracle::random_cloud(g, count(g), -1.0, 1.0);
    const Vec3 apex = oracle::random_vec(g, -1, 1);
    const Vec3 axis = oracle::random_vec(g, -1, 1).normalized();
    const double h = std::uniform_real_distribution<double>(0.2, 2.0)(g);
    const double r = std::uniform_real_distribution<double>(0.05, 1.0)(g);
    compare(points_in_cone(c, Cone(apex, axis, h, r)),
            oracle::select(c, [&](const Vec3& p) { return oracle::in_cone(p, apex, axis, h, r); }));
  }
  for (int i = 0; i < 200; ++i) {
    const PointCloud c = oracle::random_cloud(g, count(g), -1.0, 1.0);
    const Level level = gen::pick<Level>(g);
    compare(remove_outliers_edit(c, {level}).removed, oracle::outliers(c, 20, outlier_ratio(level)));
  }
  return {mismatches == 0, format("%zu cases, %zu mismatches", cases, mismatches)};
}

Outcome downsample_correctness() {
  std::mt19937_64 g(1002);
  std::size_t bad = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 3000)(g);
    const PointCloud c = oracle::random_cloud(g, n, -0.2, 0.2);
    const Level level = gen::pick<Level>(g);
    IdAllocator ids(c.next_free_id());
    const PendingEdit e = downsample_edit(c, {level}, ids);
    const auto ref = oracle::voxel_centroids(c, voxel(level));
    const PointCloud out = apply_edit(c, e);
    if (out.size() != ref.size()) {
      ++bad;
      continue;
    }
    std::set<oracle::VoxelKey> occupied;
    for (std::size_t k = 0; k < ref.size(); ++k) {
      worst = std::max(worst, (out[k].position - ref[k].centroid).norm());
      occupied.insert(ref[k].key);
    }
    if (occupied.size() != out.size()) ++bad;
  }
  return {bad == 0 && worst <= 1e-12,
          format("100 clouds, %zu count mismatches, max centroid error %.3g m", bad, worst)};
}

Outcome registration_recovery() {
  std::mt19937_64 g(1003);
  const TriangleMesh shape = make_box_mesh(Vec3(0.4, 0.3, 0.2));
  double worst_exact = 0.0;
  double worst_icp = 0.0;
  for (int i = 0; i < 50; ++i) {
    const PointCloud target = sample_mesh(shape, 5000, 100 + i);
    const Pose truth(oracle::small_rotation(g, 10.0),
                     oracle::random_vec(g, -1, 1).normalized() *
                         std::uniform_real_distribution<double>(0.0, 0.05)(g));
    const PointCloud source = transform_cloud(target, truth.inverse());

    CorrespondenceSet corr;
    for (std::size_t k = 0; k < source.size(); k += 97) corr.push_back({source[k].id, target[k].position});
    const Pose exact = align_from_correspondences(corr, source);
    const Pose icp = icp_refine(source, target, Pose()).pose;

    double exact_err = 0.0;
    double ss = 0.0;
    for (const Point& p : source) {
      exact_err = std::max(exact_err, (exact.apply(p.position) - truth.apply(p.position)).norm());
      ss += (icp.apply(p.position) - truth.apply(p.position)).squaredNorm();
    }
    worst_exact = std::max(worst_exact, exact_err);
    worst_icp = std::max(worst_icp, std::sqrt(ss / static_cast<double>(source.size())));
  }
  return {worst_exact <= 1e-9 && worst_icp < 1e-4,
          format("50 transforms, exact max error %.3g m, ICP max RMSE vs truth %.3g m", worst_exact,
                 worst_icp)};
}

Outcome distance_metric() {
  const TriangleBvh cube(make_box_mesh(Vec3::Ones()));
  const std::vector<std::pair<Vec3, double>> hand = {
      {Vec3(0, 0, 0.6), 0.1},     {Vec3(0, 0, 0), 0.5},       {Vec3(0.5, 0.5, 0.5), 0.0},
      {Vec3(1.5, 0, 0), 1.0},     {Vec3(0.8, 0.9, 0), 0.5},   {Vec3(0.3, 0, 0), 0.2},
      {Vec3(1.5, 1.5, 1.5), std::sqrt(3.0)}};
  double hand_err = 0.0;
  for (const auto& [p, d] : hand) hand_err = std::max(hand_err, std::abs(cube.distance(p) - d));

  std::mt19937_64 g(1004);
  double brute_err = 0.0;
  for (int i = 0; i < 20; ++i) {
    const std::size_t tris = std::uniform_int_distribution<std::size_t>(1, 5000)(g);
    const TriangleMesh mesh = oracle::random_mesh(g, tris);
    const PointCloud pts = oracle::random_cloud(g, 200, -1.5, 1.5);
    const DistanceReport r = point_to_mesh_distance(pts, TriangleBvh(mesh));
    for (std::size_t k = 0; k < pts.size(); ++k) {
      brute_err = std::max(brute_err,
                           std::abs(r.distances[k] - oracle::point_mesh_distance(pts[k].position, mesh)));
    }
  }
  return {hand_err <= 1e-12 && brute_err <= 1e-12,
          format("hand-computed max error %.3g m, brute force (20 meshes) max error %.3g m", hand_err,
                 brute_err)};
}

Outcome end_to_end() {
  const std::string dir = std::string(PCSKETCH_DATA_DIR) + "/cube_scene/";
  const SceneFile scene_file = read_scene(dir + "scene.json");
  const Scene scene(scene_file.spec);
  const auto trajectory = read_trajectory(dir + "orbit.traj");
  const Aabb everything(Vec3::Constant(-1e9), Vec3::Constant(1e9));
  const PointCloud raw =
      simulate_scan(scene, trajectory, scene_file.intrinsics, scene_file.config, everything);
  EditSession session(raw);
  session.apply_script(read_script(dir + "cleanup.jsonl"));
  const PointCloud processed = *session.committed();

  const TriangleMesh cube = read_obj(dir + "cube.obj");
  const double raw_mean = evaluate(raw, cube, std::nullopt).report.summary.mean;
  const double processed_mean = evaluate(processed, cube, std::nullopt).report.summary.mean;
  const double ratio = raw_mean / processed_mean;
  return {ratio >= 5.0 && processed_mean <= 0.0045,
          format("raw %zu pts mean %.2f mm, processed %zu pts mean %.2f mm, ratio %.1fx", raw.size(),
                 raw_mean * 1e3, processed.size(), processed_mean * 1e3, ratio)};
}

Outcome capture_trigger() {
  std::mt19937_64 g(1005);
  const CaptureConfig cfg;
  std::uniform_real_distribution<double> dist(0.0, 0.02), ang(0.0, 2.0), unit(0.0, 1.0);
  std::size_t iff_fail = 0;
  std::size_t monotone_fail = 0;
  auto pose_at = [](const Pose& base, const Vec3& axis, double deg, const Vec3& dir, double m) {
    return Pose(Eigen::Quaterniond(Eigen::AngleAxisd(deg * M_PI / 180.0, axis)) * base.quaternion(),
                base.translation() + dir * m);
  };
  for (int i = 0; i < 1000; ++i) {
    const Pose base(oracle::random_rotation(g), oracle::random_vec(g, -2, 2));
    const Vec3 axis = oracle::random_vec(g, -1, 1).normalized();
    const Vec3 dir = oracle::random_vec(g, -1, 1).normalized();
    const double m = dist(g);
    const double deg = ang(g);
    const Pose moved = pose_at(base, axis, deg, dir, m);
    const double dt = (moved.translation() - base.translation()).norm();
    const double dtheta = rotation_angle(base, moved) * 180.0 / M_PI;
    const bool fired = should_capture(base, moved, cfg);
    if (fired == (dt < 0.01 && dtheta < 1.0)) ++iff_fail;

    // Growing either motion never turns a trigger off.
    const Pose more_t = pose_at(base, axis, deg, dir, m + unit(g) * 0.01);
    const Pose more_r = pose_at(base, axis, std::min(deg + unit(g), 179.0), dir, m);
    if (fired && (!should_capture(base, more_t, cfg) || !should_capture(base, more_r, cfg))) {
      ++monotone_fail;
    }
  }
  return {iff_fail == 0 && monotone_fail == 0,
          format("1000 pose pairs, %zu iff violations, %zu monotonicity violations", iff_fail,
                 monotone_fail)};
}

Outcome session_algebra() {
  std::mt19937_64 g(1006);
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::uniform_int_distribution<int> op(0, 2), kind(0, 5), depth(1, 20);
  for (int seq = 0; seq < 200; ++seq) {
    EditSession s(oracle::random_cloud(g, 300, -0.3, 0.3));
    std::vector<PointCloud> model{*s.committed()};
    for (int step = depth(g); step > 0; --step) {
      const PointCloud before = *s.committed();
      try {
        s.preview(gen::random_tool(g, kind(g), 0.3));
      } catch (const Error&) {
        ++checks;
        failures += !(*s.committed() == before) || s.pending().has_value();
        continue;
      }
      switch (op(g)) {
        case 0:  // discard-identity
          s.discard();
          ++checks;
          failures += !(*s.committed() == before);
          break;
        case 1:  // commit-undo-identity
          s.commit();
          s.undo();
          ++checks;
          failures += !(*s.committed() == before);
          break;
        default:
          s.commit();
          model.push_back(*s.committed());
          break;
      }
      ++checks;
      failures += !(*s.committed() == model.back());
    }
    while (model.size() > 1) {
      s.undo();
      model.pop_back();
      ++checks;
      failures += !(*s.committed() == model.back());
    }
  }
  return {failures == 0, format("200 sequences, %zu identity checks, %zu failures", checks, failures)};
}

Outcome format_round_trips() {
  std::mt19937_64 g(1007);
  std::size_t unstable = 0;
  for (int i = 0; i < 50; ++i) {
    const PointCloud c = oracle::random_cloud(g, std::uniform_int_distribution<std::size_t>(0, 2000)(g),
                                              -100, 100, g() >> 20);
    for (PlyFormat fmt : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
      for (bool ids : {false, true}) {
        PlyWriteOptions opts;
        opts.format = fmt;
        opts.write_ids = ids;
        std::ostringstream first;
        write_ply(c, first, opts);
        std::istringstream in(first.str());
        const PointCloud back = read_ply(in);
        std::ostringstream second;
        write_ply(back, second, opts);
        unstable += first.str() != second.str();
        if (ids) unstable += back.size() != c.size() || (!c.empty() && back[0].id != c[0].id);
      }
    }
    const SessionScript script = gen::random_script(g, 1 + i % 12);
    std::ostringstream first;
    write_script(script, first);
    std::istringstream in(first.str());
    const SessionScript back = read_script(in);
    std::ostringstream second;
    write_script(back, second);
    unstable += first.str() != second.str() || !(back == script);
  }
  return {unstable == 0, format("50 clouds x 4 PLY variants + 50 scripts, %zu unstable", unstable)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"oracle equivalence", 60.0, oracle_equivalence},
      {"downsample correctness", 0.0, downsample_correctness},
      {"registration recovery", 120.0, registration_recovery},
      {"distance metric", 0.0, distance_metric},
      {"end-to-end trend", 300.0, end_to_end},
      {"capture trigger", 0.0, capture_trigger},
      {"session algebra", 0.0, session_algebra},
      {"format round-trips", 0.0, format_round_trips},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.budget_s > 0.0 && secs >= c.budget_s) {
      o.pass = false;
      o.detail += format(" (over the %.0f s budget)", c.budget_s);
    }
    std::printf("%s  %-24s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
