// pcsketch command-line front end: capture, process, evaluate, serve.

#include <cstdio>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcsketch/capture.hpp"
#include "pcsketch/evaluation.hpp"
#include "pcsketch/io.hpp"
#include "pcsketch/service.hpp"
#include "pcsketch/toolbox.hpp"

namespace {

using namespace pcsketch;

struct CaptureArgs {
  std::string scene;
  std::string trajectory;
  std::vector<double> crop;
  std::string out;
  bool ascii = false;
  bool ids = false;
};

struct ProcessArgs {
  std::string in;
  std::string script;
  std::string out;
  bool ascii = false;
  bool ids = false;
};

struct EvaluateArgs {
  std::string cloud;
  std::string mesh;
  std::string correspondences;
  std::size_t samples = 100'000;
  std::uint64_t seed = 0;
  double max_corr_dist = 0.05;
  int max_iterations = 50;
  std::optional<double> saturation;
  std::string report;
  std::string heatmap;
  bool per_point = false;
};

struct ServeArgs {
  std::uint16_t port = 7878;
  std::string host = "127.0.0.1";
  std::string in;
};

PlyWriteOptions ply_options(bool ascii, bool ids) {
  PlyWriteOptions o;
  o.format = ascii ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian;
  o.write_ids = ids;
  return o;
}

int run_capture(const CaptureArgs& a) {
  const SceneFile file = read_scene(a.scene);
  const Scene scene(file.spec);
  const auto trajectory = read_trajectory(a.trajectory);
  const double inf = std::numeric_limits<double>::max();
  Aabb crop(Vec3::Constant(-inf), Vec3::Constant(inf));
  if (!a.crop.empty()) crop = Aabb({a.crop[0], a.crop[1], a.crop[2]}, {a.crop[3], a.crop[4], a.crop[5]});
  ScanStats stats;
  const PointCloud cloud = simulate_scan(scene, trajectory, file.intrinsics, file.config, crop, &stats);
  write_ply(cloud, a.out, ply_options(a.ascii, a.ids));
  std::printf("captured %zu frames, %zu raw points, %zu kept -> %s\n", stats.frames,
              stats.raw_points, cloud.size(), a.out.c_str());
  return 0;
}

int run_process(const ProcessArgs& a) {
  EditSession session(read_ply(a.in));
  const SessionScript script = read_script(a.script);
  const std::size_t before = session.committed()->size();
  session.apply_script(script);
  write_ply(*session.committed(), a.out, ply_options(a.ascii, a.ids));
  std::printf("applied %zu records: %zu -> %zu points -> %s\n", script.size(), before,
              session.committed()->size(), a.out.c_str());
  return 0;
}

int run_evaluate(const EvaluateArgs& a) {
  const PointCloud cloud = read_ply(a.cloud);
  const TriangleMesh mesh = read_obj(a.mesh);
  std::optional<CorrespondenceSet> corr;
  if (!a.correspondences.empty()) corr = read_correspondences(a.correspondences);

  EvaluationConfig cfg;
  cfg.samples = a.samples;
  cfg.seed = a.seed;
  cfg.icp.max_correspondence_distance = a.max_corr_dist;
  cfg.icp.max_iterations = a.max_iterations;
  cfg.saturation = a.saturation;
  const EvaluationResult r = evaluate(cloud, mesh, corr, cfg);

  if (!a.report.empty()) write_report(r, a.report, a.per_point);
  if (!a.heatmap.empty()) write_ply(r.heatmap, a.heatmap);
  const DistanceSummary& s = r.report.summary;
  std::printf("points %zu  mean %.6f  median %.6f  std %.6f  min %.6f  max %.6f  (m)  icp_rmse %.6f\n",
              r.report.distances.size(), s.mean, s.median, s.std, s.min, s.max, r.icp.rmse);
  return 0;
}

int run_serve(const ServeArgs& a) {
  EditSession session(a.in.empty() ? PointCloud() : read_ply(a.in));
  service::Server server(session, a.port, a.host);
  std::printf("listening on %s:%u\n", a.host.c_str(), static_cast<unsigned>(server.port()));
  std::fflush(stdout);
  server.run();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point cloud capture, editing and evaluation", "pcsketch"};
  app.require_subcommand(1);

  CaptureArgs cap;
  auto* capture = app.add_subcommand("capture", "Simulate a scan of a scene along a trajectory");
  capture->add_option("--scene", cap.scene, "Scene description (JSON)")->required()->check(CLI::ExistingFile);
  capture->add_option("--trajectory", cap.trajectory, "Trajectory file")->required()->check(CLI::ExistingFile);
  capture->add_option("--crop", cap.crop, "Capture box x0,y0,z0,x1,y1,z1")->delimiter(',')->expected(6);
  capture->add_option("--out", cap.out, "Output PLY")->required();
  capture->add_flag("--ascii", cap.ascii, "Write ASCII PLY");
  capture->add_flag("--ids", cap.ids, "Store point ids in the PLY");

  ProcessArgs proc;
  auto* process = app.add_subcommand("process", "Apply a session script to a cloud");
  process->add_option("--in", proc.in, "Input PLY")->required()->check(CLI::ExistingFile);
  process->add_option("--script", proc.script, "Session script")->required()->check(CLI::ExistingFile);
  process->add_option("--out", proc.out, "Output PLY")->required();
  process->add_flag("--ascii", proc.ascii, "Write ASCII PLY");
  process->add_flag("--ids", proc.ids, "Store point ids in the PLY");

  EvaluateArgs ev;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Register a cloud to a mesh and measure distances");
  evaluate_cmd->add_option("--cloud", ev.cloud, "Input PLY")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--mesh", ev.mesh, "Reference OBJ")->required()->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--correspondences", ev.correspondences, "pointId qx qy qz per line")
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--samples", ev.samples, "Mesh samples for ICP")->capture_default_str();
  evaluate_cmd->add_option("--seed", ev.seed, "Sampling seed")->capture_default_str();
  evaluate_cmd->add_option("--max-corr-dist", ev.max_corr_dist, "ICP pair gate (m)")->capture_default_str();
  evaluate_cmd->add_option("--max-iterations", ev.max_iterations, "ICP iterations")->capture_default_str();
  evaluate_cmd->add_option("--saturation", ev.saturation, "Heat-map saturation (m); default p99");
  evaluate_cmd->add_option("--report", ev.report, "JSON report path");
  evaluate_cmd->add_option("--heatmap", ev.heatmap, "Heat-map PLY path");
  evaluate_cmd->add_flag("--per-point", ev.per_point, "Include per-point distances in the report");

  ServeArgs srv;
  auto* serve = app.add_subcommand("serve", "Serve an edit session over TCP");
  serve->add_option("--port", srv.port, "TCP port (0 picks one)")->capture_default_str();
  serve->add_option("--host", srv.host, "Listen address")->capture_default_str();
  serve->add_option("--in", srv.in, "Initial PLY")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "pcsketch: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*capture) return run_capture(cap);
    if (*process) return run_process(proc);
    if (*evaluate_cmd) return run_evaluate(ev);
    if (*serve) return run_serve(srv);
  } catch (const Error& e) {
    std::cerr << "pcsketch: " << error_code_name(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "pcsketch: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
