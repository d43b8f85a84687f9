#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>

#include "pcsketch/capture.hpp"
#include "pcsketch/evaluation.hpp"
#include "pcsketch/io.hpp"
#include "pcsketch/script_json.hpp"
#include "pcsketch/service.hpp"
#include "pcsketch/toolbox.hpp"

namespace py = pybind11;
using namespace pcsketch;

namespace {

using IdArray = py::array_t<std::uint64_t, py::array::c_style | py::array::forcecast>;
using PosArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using RgbArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

PointCloud cloud_from_arrays(const PosArray& positions, std::optional<IdArray> ids,
                             std::optional<RgbArray> colors) {
  if (positions.ndim() != 2 || positions.shape(1) != 3) {
    throw Error(ErrorCode::InvalidArgument, "positions must have shape (n, 3)");
  }
  const auto n = static_cast<std::size_t>(positions.shape(0));
  if (ids && static_cast<std::size_t>(ids->size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "ids must have n entries");
  }
  if (colors && (colors->ndim() != 2 || static_cast<std::size_t>(colors->shape(0)) != n ||
                 colors->shape(1) != 3)) {
    throw Error(ErrorCode::InvalidArgument, "colors must have shape (n, 3)");
  }
  auto p = positions.unchecked<2>();
  std::vector<Point> pts(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i].id = ids ? ids->at(i) : i;
    pts[i].position = Vec3(p(i, 0), p(i, 1), p(i, 2));
    if (colors) {
      auto c = colors->unchecked<2>();
      pts[i].color = {c(i, 0), c(i, 1), c(i, 2)};
    }
  }
  return PointCloud(std::move(pts));
}

IdArray ids_of(const PointCloud& c) {
  IdArray out(static_cast<py::ssize_t>(c.size()));
  auto o = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < c.size(); ++i) o(i) = c[i].id;
  return out;
}

PosArray positions_of(const PointCloud& c) {
  PosArray out({static_cast<py::ssize_t>(c.size()), py::ssize_t{3}});
  auto o = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (int k = 0; k < 3; ++k) o(i, k) = c[i].position[k];
  }
  return out;
}

RgbArray colors_of(const PointCloud& c) {
  RgbArray out({static_cast<py::ssize_t>(c.size()), py::ssize_t{3}});
  auto o = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < c.size(); ++i) {
    o(i, 0) = c[i].color.r;
    o(i, 1) = c[i].color.g;
    o(i, 2) = c[i].color.b;
  }
  return out;
}

nlohmann::json to_json(const py::object& obj) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return nlohmann::json::parse(dumps(obj).cast<std::string>());
}

py::object from_json(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::dict summary_dict(const DistanceSummary& s) {
  py::dict d;
  d["mean"] = s.mean;
  d["median"] = s.median;
  d["std"] = s.std;
  d["min"] = s.min;
  d["max"] = s.max;
  return d;
}

py::dict edit_dict(const PendingEdit& e) {
  py::dict d;
  d["tool"] = std::string(e.tool());
  d["added"] = PointCloud(e.added);
  d["removed"] = e.removed;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Point-cloud sketching toolbox: editing, capture simulation and evaluation.";

  // Library errors surface as pcsketch.Error("CODE: message").
  static py::handle error_type = py::exception<Error>(m, "Error", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const std::string text = std::string(error_code_name(e.code())) + ": " + e.what();
      PyErr_SetString(error_type.ptr(), text.c_str());
    }
  });

  py::class_<PointCloud>(m, "PointCloud")
      .def(py::init<>())
      .def(py::init(&cloud_from_arrays), py::arg("positions"), py::arg("ids") = py::none(),
           py::arg("colors") = py::none())
      .def("__len__", &PointCloud::size)
      .def_property_readonly("ids", &ids_of)
      .def_property_readonly("positions", &positions_of)
      .def_property_readonly("colors", &colors_of)
      .def("next_free_id", &PointCloud::next_free_id)
      .def(py::self == py::self)
      .def("__repr__", [](const PointCloud& c) {
        return "<PointCloud with " + std::to_string(c.size()) + " points>";
      });

  py::class_<TriangleMesh>(m, "TriangleMesh")
      .def_property_readonly("vertices",
                             [](const TriangleMesh& mesh) {
                               PosArray out({static_cast<py::ssize_t>(mesh.vertices.size()), py::ssize_t{3}});
                               auto o = out.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
                                 for (int k = 0; k < 3; ++k) o(i, k) = mesh.vertices[i][k];
                               }
                               return out;
                             })
      .def("__len__", &TriangleMesh::size);

  m.def("read_ply", py::overload_cast<const std::filesystem::path&>(&read_ply), py::arg("path"));
  m.def(
      "write_ply",
      [](const PointCloud& c, const std::string& path, bool ascii, bool ids) {
        PlyWriteOptions o;
        o.format = ascii ? PlyFormat::Ascii : PlyFormat::BinaryLittleEndian;
        o.write_ids = ids;
        write_ply(c, std::filesystem::path(path), o);
      },
      py::arg("cloud"), py::arg("path"), py::arg("ascii") = false, py::arg("ids") = false);
  m.def("read_obj", py::overload_cast<const std::filesystem::path&>(&read_obj), py::arg("path"));
  m.def("make_box_mesh",
        [](const std::array<double, 3>& dims) { return make_box_mesh(Vec3(dims[0], dims[1], dims[2])); },
        py::arg("dimensions"));

  m.def(
      "simulate_scan",
      [](const std::string& scene_path, const std::string& trajectory_path,
         std::optional<std::array<double, 6>> crop) {
        const SceneFile f = read_scene(scene_path);
        const Scene scene(f.spec);
        const auto traj = read_trajectory(std::filesystem::path(trajectory_path));
        Aabb box(Vec3::Constant(-1e300), Vec3::Constant(1e300));
        if (crop) box = Aabb(Vec3((*crop)[0], (*crop)[1], (*crop)[2]), Vec3((*crop)[3], (*crop)[4], (*crop)[5]));
        ScanStats stats;
        PointCloud cloud = simulate_scan(scene, traj, f.intrinsics, f.config, box, &stats);
        return py::make_tuple(std::move(cloud), stats.frames, stats.raw_points);
      },
      py::arg("scene"), py::arg("trajectory"), py::arg("crop") = py::none(),
      "Returns (cloud, frames, raw_points).");

  m.def(
      "compute_edit",
      [](const PointCloud& c, const py::dict& tool) {
        IdAllocator ids(c.next_free_id());
        return edit_dict(compute_edit(c, tool_from_json(to_json(tool)), ids));
      },
      py::arg("cloud"), py::arg("tool"), "Edit a tool record would make, without applying it.");

  py::class_<EditSession>(m, "EditSession")
      .def(py::init<PointCloud>(), py::arg("cloud") = PointCloud())
      .def("load", &EditSession::load, py::arg("cloud"))
      .def(
          "preview",
          [](EditSession& s, const py::dict& tool) { return edit_dict(s.preview(tool_from_json(to_json(tool)))); },
          py::arg("tool"))
      .def("commit", &EditSession::commit)
      .def("discard", &EditSession::discard)
      .def("undo", &EditSession::undo)
      .def("apply_script",
           [](EditSession& s, const std::string& path) { s.apply_script(read_script(std::filesystem::path(path))); },
           py::arg("path"))
      .def_property_readonly("committed", [](const EditSession& s) { return *s.committed(); })
      .def_property_readonly("pending",
                             [](const EditSession& s) -> py::object {
                               if (!s.pending()) return py::none();
                               return edit_dict(*s.pending());
                             })
      .def_property_readonly("history_depth", &EditSession::history_depth);

  m.def(
      "point_to_mesh_distance",
      [](const PointCloud& c, const TriangleMesh& mesh) {
        const DistanceReport r = point_to_mesh_distance(c, TriangleBvh(mesh));
        return py::make_tuple(py::array_t<double>(static_cast<py::ssize_t>(r.distances.size()),
                                                  r.distances.data()),
                              summary_dict(r.summary));
      },
      py::arg("cloud"), py::arg("mesh"), "Returns (distances, summary).");

  m.def(
      "evaluate",
      [](const PointCloud& c, const TriangleMesh& mesh, std::optional<std::string> correspondences,
         std::size_t samples, std::uint64_t seed, double max_correspondence_distance) {
        EvaluationConfig cfg;
        cfg.samples = samples;
        cfg.seed = seed;
        cfg.icp.max_correspondence_distance = max_correspondence_distance;
        std::optional<CorrespondenceSet> corr;
        if (correspondences) corr = read_correspondences(std::filesystem::path(*correspondences));
        const EvaluationResult r = evaluate(c, mesh, corr, cfg);
        py::dict out;
        out["summary"] = summary_dict(r.report.summary);
        out["distances"] = py::array_t<double>(static_cast<py::ssize_t>(r.report.distances.size()),
                                               r.report.distances.data());
        out["icp_rmse"] = r.icp.rmse;
        out["icp_iterations"] = r.icp.iterations;
        out["registered"] = r.registered;
        out["heatmap"] = r.heatmap;
        return out;
      },
      py::arg("cloud"), py::arg("mesh"), py::arg("correspondences") = py::none(),
      py::arg("samples") = 100000, py::arg("seed") = 0, py::arg("max_correspondence_distance") = 0.05);

  py::class_<service::Server>(m, "Server")
      .def(py::init([](EditSession& s, std::uint16_t port, const std::string& host) {
             return std::make_unique<service::Server>(s, port, host);
           }),
           py::arg("session"), py::arg("port") = 0, py::arg("host") = "127.0.0.1",
           py::keep_alive<1, 2>())
      .def_property_readonly("port", &service::Server::port)
      .def("run", &service::Server::run, py::call_guard<py::gil_scoped_release>())
      .def("stop", &service::Server::stop);

  py::class_<service::Client>(m, "Client")
      .def(py::init<const std::string&, std::uint16_t>(), py::arg("host"), py::arg("port"))
      .def(
          "request",
          [](service::Client& c, const std::string& verb, const py::object& params) {
            const nlohmann::json p = params.is_none() ? nlohmann::json::object() : to_json(params);
            service::Client::Response r;
            {
              py::gil_scoped_release release;
              r = c.request(verb, p);
            }
            return py::make_tuple(from_json(r.message), PointCloud(std::move(r.points)));
          },
          py::arg("verb"), py::arg("params") = py::none(),
          "Returns (response message, points carried by chunk frames).");
}
