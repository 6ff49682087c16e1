#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "inpaint_gan/classifier.hpp"
#include "inpaint_gan/cli.hpp"
#include "inpaint_gan/dataset.hpp"
#include "inpaint_gan/errors.hpp"
#include "inpaint_gan/metrics.hpp"
#include "inpaint_gan/patch_pipeline.hpp"
#include "inpaint_gan/seeding.hpp"
#include "inpaint_gan/volume_io.hpp"

namespace py = pybind11;
using namespace inpaint_gan;

namespace {

using Triple = std::tuple<double, double, double>;

Vec3 vec(const Triple& t) { return {std::get<0>(t), std::get<1>(t), std::get<2>(t)}; }
Triple triple(const Vec3& v) { return {v.x, v.y, v.z}; }

// Arrays cross the boundary as numpy [Z, Y, X] float32, matching the x-fastest storage order.
py::array_t<float> to_numpy(const Array3f& a) {
  const auto s = a.shape();
  py::array_t<float> out({s.z, s.y, s.x});
  std::copy(a.values().begin(), a.values().end(), out.mutable_data());
  return out;
}

Array3f from_numpy(const py::array_t<float, py::array::c_style | py::array::forcecast>& array) {
  if (array.ndim() != 3) throw ValidationError("expected a 3-D array indexed [z, y, x]");
  const Shape3 shape{array.shape(2), array.shape(1), array.shape(0)};
  return Array3f(shape, std::vector<float>(array.data(), array.data() + array.size()));
}

py::dict metrics_dict(const MetricsReport& m) {
  py::dict d;
  d["acc"] = m.acc;
  d["sen"] = m.sen;
  d["spe"] = m.spe;
  d["auc"] = m.auc;
  d["tp"] = m.tp;
  d["tn"] = m.tn;
  d["fp"] = m.fp;
  d["fn"] = m.fn;
  d["n"] = m.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Class-conditional 3D nodule in-painting: core operations and the command-line entry point";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "run",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "inpaint_gan");
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run one CLI subcommand; returns (exit_code, stdout, stderr).");

  m.def("derive_seed", &derive_seed, py::arg("root"), py::arg("label"), py::arg("index") = 0);

  m.def(
      "make_spherical_mask",
      [](double diameter_mm, const Triple& spacing, const std::tuple<int, int, int>& shape) {
        const auto [x, y, z] = shape;
        return to_numpy(make_spherical_mask(diameter_mm, vec(spacing), Shape3{x, y, z}));
      },
      py::arg("diameter_mm"), py::arg("spacing"), py::arg("shape"),
      "Binary sphere mask; spacing and shape are (x, y, z), the result is indexed [z, y, x].");

  m.def(
      "normalize_hu",
      [](const py::array_t<float, py::array::c_style | py::array::forcecast>& patch, double low, double high) {
        return to_numpy(normalize_hu(from_numpy(patch), HuWindow{low, high}));
      },
      py::arg("patch"), py::arg("low") = -1000.0, py::arg("high") = 400.0);

  m.def(
      "load_volume",
      [](const std::filesystem::path& path) {
        const auto v = load_volume(path);
        return py::make_tuple(to_numpy(v.voxels), triple(v.spacing), triple(v.origin));
      },
      py::arg("path"), "Returns (voxels [z, y, x], spacing (x, y, z), origin (x, y, z)).");

  m.def(
      "save_volume",
      [](const std::filesystem::path& path, const py::array_t<float, py::array::c_style | py::array::forcecast>& voxels,
         const Triple& spacing, const Triple& origin) {
        save_volume(Volume{from_numpy(voxels), vec(spacing), vec(origin)}, path);
      },
      py::arg("path"), py::arg("voxels"), py::arg("spacing"), py::arg("origin") = Triple{0.0, 0.0, 0.0});

  m.def(
      "read_manifest",
      [](const std::filesystem::path& path) {
        py::list rows;
        for (const auto& r : read_manifest(path)) {
          py::dict d;
          d["patch_file"] = r.patch_file;
          d["label"] = to_string(r.label);
          d["diameter_mm"] = r.diameter_mm;
          d["split"] = r.split;
          d["synthetic"] = r.synthetic;
          rows.append(d);
        }
        return rows;
      },
      py::arg("path"));

  m.def(
      "auc", [](const std::vector<double>& scores, const std::vector<int>& labels) { return auc(scores, labels); },
      py::arg("scores"), py::arg("labels"));

  m.def(
      "metrics_from_scores",
      [](const std::vector<double>& scores, const std::vector<int>& labels, double threshold) {
        return metrics_dict(metrics_from_scores(scores, labels, threshold));
      },
      py::arg("scores"), py::arg("labels"), py::arg("threshold") = 0.5);

  m.def("inverse_frequency_weights", &inverse_frequency_weights, py::arg("n_benign"), py::arg("n_malignant"));
}
