#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "generators.hpp"
#include "oracles.hpp"
#include "pcsketch/io.hpp"

using namespace pcsketch;

namespace {

std::string ply_bytes(const PointCloud& c, const PlyWriteOptions& o) {
  std::ostringstream out;
  write_ply(c, out, o);
  return out.str();
}

PointCloud ply_parse(const std::string& s) {
  std::istringstream in(s);
  return read_ply(in);
}

// gcc 11 -O3 can elide a float round trip inside an Eigen constructor; go
// through memory instead.
double to_f32(double v) {
  volatile float f = static_cast<float>(v);
  return f;
}

PointCloud quantized(const PointCloud& c, bool keep_ids) {
  std::vector<Point> pts;
  PointId next = 0;
  for (const Point& p : c) {
    pts.push_back({keep_ids ? p.id : next++, Vec3(to_f32(p.position.x()), to_f32(p.position.y()), to_f32(p.position.z())), p.color});
  }
  return PointCloud(std::move(pts));
}

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

TriangleMesh obj_parse(const std::string& s) {
  std::istringstream in(s);
  return read_obj(in);
}

std::vector<TrajectorySample> traj_parse(const std::string& s) {
  std::istringstream in(s);
  return read_trajectory(in);
}

}  // namespace

TEST_CASE("ply: ascii vertex with color") {
  const PointCloud c = ply_parse(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
      "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
      "end_header\n0 0 0 255 0 0\n");
  REQUIRE(c.size() == 1);
  CHECK(c[0].position == Vec3::Zero());
  CHECK(c[0].color == Rgb{255, 0, 0});
}

TEST_CASE("ply: missing colors default to white, doubles accepted, extra elements skipped") {
  const PointCloud c = ply_parse(
      "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\nproperty double x\nproperty double y\n"
      "property double z\nproperty float nx\nelement face 1\nproperty list uchar int vertex_indices\n"
      "end_header\n0.1 0.2 0.3 1\n1 2 3 0\n3 0 1 1\n");
  REQUIRE(c.size() == 2);
  CHECK(c[0].color == Rgb{255, 255, 255});
  CHECK(c[1].position == Vec3(1, 2, 3));
  CHECK(c[1].id == 1);
}

TEST_CASE("ply: header layout") {
  const PointCloud c({{0, Vec3(1, 2, 3), {}}});
  const std::string s = ply_bytes(c, {PlyFormat::Ascii, false});
  CHECK(s.rfind(
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
            "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
            "end_header\n",
            0) == 0);
}

TEST_CASE("ply: error paths") {
  CHECK(code_of([] {
          ply_parse("ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\n"
                    "property float y\nproperty float z\nend_header\n");
        }) == ErrorCode::UnsupportedFormat);
  CHECK(code_of([] {
          ply_parse("ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                    "end_header\n0 0\n");
        }) == ErrorCode::UnsupportedFormat);
  CHECK(code_of([] { ply_parse("not a ply\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] {
          ply_parse("ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
                    "property float z\nend_header\n0 0 0\n");
        }) == ErrorCode::ParseError);
  const std::string binary = ply_bytes(PointCloud({{0, Vec3::Ones(), {}}}), {});
  CHECK(code_of([&] { ply_parse(binary.substr(0, binary.size() - 2)); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_ply("/nonexistent/file.ply"); }) == ErrorCode::IoError);
}

TEST_CASE("ply: empty cloud") {
  for (auto fmt : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
    const std::string s = ply_bytes(PointCloud(), {fmt, false});
    CHECK(s.find("element vertex 0\n") != std::string::npos);
    CHECK(ply_parse(s).empty());
  }
}

TEST_CASE("ply: round trips are exact after float32 quantization") {
  std::mt19937_64 g(11);
  const PointCloud c = oracle::random_cloud(g, 10'000, -10, 10, 1000);
  for (auto fmt : {PlyFormat::Ascii, PlyFormat::BinaryLittleEndian}) {
    CAPTURE(static_cast<int>(fmt));
    CHECK(ply_parse(ply_bytes(c, {fmt, false})) == quantized(c, false));
    CHECK(ply_parse(ply_bytes(c, {fmt, true})) == quantized(c, true));
    CHECK(ply_bytes(c, {fmt, true}) == ply_bytes(c, {fmt, true}));
  }
  const PointCloud three({{0, Vec3(0.1, 0.2, 0.3), {1, 2, 3}},
                          {1, Vec3(-1, 0, 1e-7), {4, 5, 6}},
                          {2, Vec3(1e6, -2.5, 3), {7, 8, 9}}});
  CHECK(ply_parse(ply_bytes(three, {PlyFormat::Ascii, false})) ==
        ply_parse(ply_bytes(three, {PlyFormat::BinaryLittleEndian, false})));
}

TEST_CASE("ply: file round trip") {
  const auto path = std::filesystem::temp_directory_path() / "pcsketch_io_test.ply";
  std::mt19937_64 g(12);
  const PointCloud c = oracle::random_cloud(g, 100, -1, 1);
  write_ply(c, path);
  CHECK(read_ply(path) == quantized(c, false));
  std::filesystem::remove(path);
}

TEST_CASE("obj: cube, fan triangulation, errors") {
  const TriangleMesh cube = read_obj(std::filesystem::path(PCSKETCH_DATA_DIR) / "cube_scene/cube.obj");
  CHECK(cube.vertices.size() == 8);
  CHECK(cube.triangles.size() == 12);

  const TriangleMesh quad = obj_parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  REQUIRE(quad.triangles.size() == 2);
  CHECK(quad.triangles[0] == Triangle{0, 1, 2});
  CHECK(quad.triangles[1] == Triangle{0, 2, 3});

  const TriangleMesh mixed = obj_parse(
      "# comment\nvn 0 0 1\nvt 0 0\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0.5 1.5 0\n"
      "usemtl x\nf 1/1/1 2/1/1 3/1/1 4//1 5\nf -3 -2 -1\n");
  CHECK(mixed.triangles.size() == (5 - 2) + (3 - 2));

  CHECK(code_of([] { obj_parse("v 0 0 0\nv 1 0 0\nf 1 2 3\n"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { obj_parse("v 0 0 0\nv 1 0 0\nv 2 0 0\n"); }) == ErrorCode::EmptyMesh);
  CHECK(code_of([] { obj_parse("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n"); }) == ErrorCode::EmptyMesh);
  try {
    obj_parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
    FAIL("expected ParseError");
  } catch (const LineError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("obj: triangle count equals sum of (face size - 2)") {
  std::mt19937_64 g(13);
  std::uniform_int_distribution<int> sides(3, 8);
  std::ostringstream s;
  const int ring = 8;
  for (int i = 0; i < ring; ++i) {
    s << "v " << std::cos(2 * M_PI * i / ring) << ' ' << std::sin(2 * M_PI * i / ring) << " 0\n";
  }
  std::size_t expected = 0;
  for (int f = 0; f < 30; ++f) {
    const int n = sides(g);
    s << 'f';
    for (int k = 1; k <= n; ++k) s << ' ' << k;
    s << '\n';
    expected += n - 2;
  }
  CHECK(obj_parse(s.str()).triangles.size() == expected);
}

TEST_CASE("trajectory parsing") {
  const auto one = traj_parse("0 0 0 0 1 0 0 0\n");
  REQUIRE(one.size() == 1);
  CHECK(one[0].pose.is_identity());

  CHECK(code_of([] { traj_parse("0 0 0 0 1 0 0 0\n0 1 0 0 1 0 0 0\n"); }) == ErrorCode::NonMonotonicTime);
  CHECK(code_of([] { traj_parse("0 0 0 0 0.5 0 0 0\n"); }) == ErrorCode::InvalidRotation);
  CHECK(code_of([] { traj_parse("0 0 0 0 1 0 0\n"); }) == ErrorCode::ParseError);

  const auto renorm = traj_parse("# header\n\n0.5 1 2 3 1.0005 0 0 0\n");
  CHECK(renorm[0].pose.rotation() == Mat3::Identity());
  CHECK(renorm[0].pose.translation() == Vec3(1, 2, 3));

  const auto path = std::filesystem::temp_directory_path() / "pcsketch_traj_test.traj";
  std::mt19937_64 g(14);
  std::vector<TrajectorySample> samples;
  for (int i = 0; i < 20; ++i) {
    samples.push_back({0.1 * i, Pose(oracle::random_rotation(g), oracle::random_vec(g, -1, 1))});
  }
  write_trajectory(samples, path);
  const auto back = read_trajectory(path);
  REQUIRE(back.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(back[i].timestamp == samples[i].timestamp);
    CHECK((back[i].pose.translation() - samples[i].pose.translation()).norm() < 1e-12);
    CHECK(rotation_angle(back[i].pose, samples[i].pose) < 1e-7);
  }
  std::filesystem::remove(path);

  const auto bundled = read_trajectory(std::filesystem::path(PCSKETCH_DATA_DIR) / "cube_scene/orbit.traj");
  CHECK(bundled.size() == 144);
}

TEST_CASE("script: fixed example round-trips") {
  const SessionScript s{OutlierParams{Level::Medium}, DownsampleParams{Level::Weak}};
  std::ostringstream out;
  write_script(s, out);
  CHECK(out.str() ==
        "{\"strength\":\"medium\",\"tool\":\"remove_outliers\"}\n"
        "{\"strength\":\"weak\",\"tool\":\"downsample\"}\n");
  std::istringstream in(out.str());
  CHECK(read_script(in) == s);
}

TEST_CASE("script: errors carry their line") {
  std::istringstream bad("{\"strength\":\"weak\",\"tool\":\"downsample\"}\n\n{\"tool\":\"frobnicate\"}\n");
  try {
    read_script(bad);
    FAIL("expected UnknownTool");
  } catch (const LineError& e) {
    CHECK(e.code() == ErrorCode::UnknownTool);
    CHECK(e.line() == 3);
  }
  std::istringstream no_ray(R"({"strokes":[{"origin":[0,0,0],"size":"small","depth":"deep"}],"tool":"erase_spray"})");
  CHECK(code_of([&] { read_script(no_ray); }) == ErrorCode::InvalidParams);
  std::istringstream bad_json("{not json\n");
  CHECK(code_of([&] { read_script(bad_json); }) == ErrorCode::ParseError);
  std::istringstream bad_level(R"({"strength":"extreme","tool":"downsample"})");
  CHECK(code_of([&] { read_script(bad_level); }) == ErrorCode::InvalidParams);
  std::istringstream extra_key(R"({"strength":"weak","tool":"downsample","voxel":0.5})");
  CHECK(code_of([&] { read_script(extra_key); }) == ErrorCode::InvalidParams);
}

TEST_CASE("script: random scripts round-trip") {
  std::mt19937_64 g(15);
  for (int i = 0; i < 20; ++i) {
    const SessionScript s = gen::random_script(g, 10);
    std::ostringstream a;
    write_script(s, a);
    std::istringstream in(a.str());
    const SessionScript back = read_script(in);
    CHECK(back == s);
    std::ostringstream b;
    write_script(back, b);
    CHECK(a.str() == b.str());
  }
}

TEST_CASE("script: bundled cleanup script") {
  const SessionScript s = read_script(std::filesystem::path(PCSKETCH_DATA_DIR) / "cube_scene/cleanup.jsonl");
  REQUIRE(s.size() == 3);
  CHECK(tool_name(s[0]) == "crop");
  CHECK(tool_name(s[1]) == "remove_outliers");
  CHECK(tool_name(s[2]) == "downsample");
}

TEST_CASE("correspondences") {
  std::istringstream in("# id x y z\n3 0.5 1 2\n7 -1 0 0\n");
  const auto c = read_correspondences(in);
  REQUIRE(c.size() == 2);
  CHECK(c[0].point_id == 3);
  CHECK(c[1].target == Vec3(-1, 0, 0));
  std::istringstream bad("3 0.5 1\n");
  CHECK(code_of([&] { read_correspondences(bad); }) == ErrorCode::ParseError);
}
