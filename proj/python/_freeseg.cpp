/* Copyright 2026 The freeseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <memory>
#include <optional>
#include <set>

#include <json.hpp>

#include "freeseg/clustering.hpp"
#include "freeseg/commands.hpp"
#include "freeseg/config.hpp"
#include "freeseg/errors.hpp"
#include "freeseg/eval.hpp"
#include "freeseg/image.hpp"
#include "freeseg/pipeline.hpp"
#include "freeseg/refine.hpp"
#include "freeseg/report.hpp"
#include "freeseg/vocabulary.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace freeseg {
namespace {

py::object to_python(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_python(const py::object& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

PipelineConfig config_from(const py::object& o) {
  if (o.is_none()) return {};
  if (py::isinstance<py::str>(o) || py::hasattr(o, "__fspath__"))
    return load_config(py::module_::import("os").attr("fspath")(o).cast<std::string>());
  // JSON is a subset of YAML, so the config parser reads dicts directly.
  return parse_config(from_python(o).dump());
}

template <typename T>
Grid<T> grid_from(const py::array_t<T, py::array::c_style | py::array::forcecast>& a,
                  const char* what) {
  if (a.ndim() != 2) throw ShapeMismatch(std::string(what) + " must be a 2-D array");
  Grid<T> g(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.data.begin());
  return g;
}

template <typename T>
py::array_t<T> grid_to(const Grid<T>& g) {
  py::array_t<T> a({g.height, g.width});
  std::copy(g.data.begin(), g.data.end(), a.mutable_data());
  return a;
}

ImageRecord image_from(const py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>& a,
                       const std::string& id) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw ShapeMismatch("image must be an HxWx3 uint8 array");
  ImageRecord img(id, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

SegmentationMap seg_from(const py::array_t<std::int32_t, py::array::c_style | py::array::forcecast>& a) {
  SegmentationMap s;
  s.labels = grid_from<std::int32_t>(a, "labels");
  return s;
}

std::vector<int> active_of(const SegmentationMap& s, std::optional<std::vector<int>> active) {
  if (active) return *active;
  std::set<int> set{0};
  set.insert(s.labels.data.begin(), s.labels.data.end());
  return {set.begin(), set.end()};
}

CrfParams crf_from(const py::dict& kw) {
  CrfParams p;
  for (auto [k, v] : kw) {
    const auto key = k.cast<std::string>();
    if (key == "iterations") p.iterations = v.cast<int>();
    else if (key == "w_smooth") p.w_smooth = v.cast<double>();
    else if (key == "w_bilateral") p.w_bilateral = v.cast<double>();
    else if (key == "theta_xy_smooth") p.theta_xy_smooth = v.cast<double>();
    else if (key == "theta_xy_bilateral") p.theta_xy_bilateral = v.cast<double>();
    else if (key == "theta_rgb") p.theta_rgb = v.cast<double>();
    else if (key == "unary_confidence") p.unary_confidence = v.cast<double>();
    else if (key == "exact_max_pixels") p.exact_max_pixels = v.cast<int>();
    else throw ConfigError("unknown CRF parameter '" + key + "'");
  }
  return p;
}

class PyPipeline {
 public:
  PyPipeline(const py::object& config, std::optional<std::vector<std::string>> classes,
             std::optional<std::string> data_dir)
      : config_(config_from(config)) {
    apply_environment(config_);
    std::vector<std::string> names;
    if (config_.candidate_mode == CandidateMode::kClosed) {
      if (classes) names = *classes;
      else if (!config_.classes.empty()) names = read_class_list(config_.classes);
      else
        names = make_dataset_spec(config_.dataset,
                                  data_dir ? std::filesystem::path(*data_dir) : default_data_dir())
                    .classes;
    }
    pipeline_ = std::make_unique<Pipeline>(config_, make_backends(config_), names);
  }

  py::dict segment(const py::object& image, const std::string& image_id) const {
    ImageRecord img;
    if (py::isinstance<py::array>(image)) {
      img = image_from(image.cast<py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>>(),
                       image_id);
    } else {
      img = read_image(py::module_::import("os").attr("fspath")(image).cast<std::string>());
    }
    SegmentResult r;
    {
      py::gil_scoped_release release;
      r = pipeline_->segment(img);
    }
    py::dict out = to_python(segment_to_json(r));
    out["labels"] = grid_to(r.labels.labels);
    out["coarse"] = grid_to(r.coarse.labels);
    out["clusters"] = grid_to(r.cluster_map);
    return out;
  }

  py::object config() const { return to_python(config_to_json(config_)); }

 private:
  PipelineConfig config_;
  std::unique_ptr<Pipeline> pipeline_;
};

}  // namespace
}  // namespace freeseg

PYBIND11_MODULE(_freeseg, m) {
  using namespace freeseg;
  m.doc() = "Training-free zero-shot segmentation from diffusion features";

  // Handles live for the life of the process, so the translator never
  // touches a finalized object.
  static PyObject* base = nullptr;
  static PyObject* by_category[4] = {};
  base = py::exception<Error>(m, "FreesegError", PyExc_RuntimeError).inc_ref().ptr();
  const char* names[4] = {"ConfigError", "BackendError", "DataIoError", "DataError"};
  for (int i = 0; i < 4; ++i)
    by_category[i] = py::exception<Error>(m, names[i], base).inc_ref().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const int c = static_cast<int>(e.category());
      PyErr_SetString(c >= 0 && c < 4 ? by_category[c] : base, e.what());
    }
  });

  m.def("extract_keywords",
        [](const std::string& caption) { return extract_entities(caption).keywords; },
        py::arg("caption"), "Lowercase singular nouns of a caption, first occurrence order.");

  m.def("decide_keyword",
        [](const std::vector<double>& d) {
          const auto k = decide_keyword(d);
          py::dict out;
          out["argmin"] = k.argmin;
          out["min_distance"] = k.min_distance;
          out["mean_distance"] = k.mean_distance;
          out["accepted"] = k.accepted;
          return out;
        },
        py::arg("distances"));

  m.def("kmeans",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> points, int k,
           std::uint64_t seed, int max_iters, double tol, bool standardize) {
          if (points.ndim() != 2) throw ShapeMismatch("points must be an N x C array");
          MatrixD p(points.shape(0), points.shape(1));
          std::copy(points.data(), points.data() + points.size(), p.data.begin());
          if (standardize) {
            MatrixF f(p.rows, p.cols);
            std::copy(p.data.begin(), p.data.end(), f.data.begin());
            p = standardize_columns(f);
          }
          KMeansOptions o;
          o.k = k;
          o.seed = seed;
          o.max_iters = max_iters;
          o.tol = tol;
          ClusterResult r;
          {
            py::gil_scoped_release release;
            r = kmeans(p, o);
          }
          py::array_t<double> centroids({r.centroids.rows, r.centroids.cols});
          std::copy(r.centroids.data.begin(), r.centroids.data.end(), centroids.mutable_data());
          py::dict out;
          py::array_t<int> assignments(static_cast<py::ssize_t>(r.assignments.size()));
          std::copy(r.assignments.begin(), r.assignments.end(), assignments.mutable_data());
          out["assignments"] = assignments;
          out["centroids"] = centroids;
          out["inertia"] = r.inertia;
          out["iterations"] = r.iterations;
          return out;
        },
        py::arg("points"), py::arg("k") = 4, py::arg("seed") = 0, py::arg("max_iters") = 300,
        py::arg("tol") = 1e-4, py::arg("standardize") = false);

  py::class_<EvalAccumulator>(m, "EvalAccumulator")
      .def(py::init<int, int>(), py::arg("num_classes"), py::arg("ignore_index") = 255)
      .def("update",
           [](EvalAccumulator& a, py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> gt,
              py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> pred) {
             a.update(grid_from<std::int32_t>(gt, "gt"), grid_from<std::int32_t>(pred, "pred"));
           },
           py::arg("gt"), py::arg("pred"))
      .def("merge", &EvalAccumulator::merge)
      .def("miou", &EvalAccumulator::miou)
      .def("pixel_accuracy", &EvalAccumulator::pixel_accuracy)
      .def("per_class_iou", &EvalAccumulator::per_class_iou)
      .def_property_readonly("total", &EvalAccumulator::total)
      .def_property_readonly("num_classes", &EvalAccumulator::num_classes)
      .def("confusion", [](const EvalAccumulator& a) {
        const int n = a.num_classes();
        py::array_t<std::uint64_t> c({n, n});
        std::copy(a.confusion().begin(), a.confusion().end(), c.mutable_data());
        return c;
      });

  m.def("rle_encode",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> mask) {
          const Rle r = rle_encode(grid_from<std::uint8_t>(mask, "mask"));
          py::dict out;
          out["size"] = std::vector<int>{r.height, r.width};
          out["counts"] = rle_to_string(r);
          return out;
        },
        py::arg("mask"), "COCO compressed RLE of a binary mask.");
  m.def("rle_decode",
        [](const py::dict& rle) {
          const auto size = rle["size"].cast<std::vector<int>>();
          if (size.size() != 2) throw CorruptRle("size must be [height, width]");
          const py::object counts = rle["counts"];
          Rle r;
          if (py::isinstance<py::str>(counts) || py::isinstance<py::bytes>(counts)) {
            r = rle_from_string(counts.cast<std::string>(), size[0], size[1]);
          } else {
            r = Rle{size[0], size[1], counts.cast<std::vector<std::uint32_t>>()};
          }
          return grid_to(rle_decode(r));
        },
        py::arg("rle"));
  m.def("polygon_to_mask",
        [](const std::vector<double>& xy, int height, int width) {
          return grid_to(rle_decode(rle_from_polygon(xy, height, width)));
        },
        py::arg("xy"), py::arg("height"), py::arg("width"));

  m.def("dense_crf",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> image,
           py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> labels,
           std::optional<std::vector<int>> active, const py::kwargs& params) {
          const ImageRecord img = image_from(image, "array");
          const SegmentationMap coarse = seg_from(labels);
          const CrfParams p = crf_from(params);
          const auto act = active_of(coarse, active);
          SegmentationMap out;
          {
            py::gil_scoped_release release;
            out = dense_crf(img, labels_to_unary(coarse, act, p.unary_confidence), p);
          }
          return grid_to(out.labels);
        },
        py::arg("image"), py::arg("labels"), py::arg("active_labels") = py::none());
  m.def("pamr",
        [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> image,
           py::array_t<std::int32_t, py::array::c_style | py::array::forcecast> labels,
           std::optional<std::vector<int>> active, int iterations, std::vector<int> dilations,
           double confidence) {
          const ImageRecord img = image_from(image, "array");
          const SegmentationMap coarse = seg_from(labels);
          const auto act = active_of(coarse, active);
          SegmentationMap out;
          {
            py::gil_scoped_release release;
            out = pamr(img, labels_to_unary(coarse, act, confidence), iterations, dilations);
          }
          return grid_to(out.labels);
        },
        py::arg("image"), py::arg("labels"), py::arg("active_labels") = py::none(),
        py::arg("iterations") = 10, py::arg("dilations") = std::vector<int>{1, 2, 4, 8, 12, 24},
        py::arg("confidence") = 0.8);

  m.def("load_config", [](const py::object& path) { return to_python(config_to_json(config_from(path))); },
        py::arg("path"), "Parse a YAML config and return the fully resolved settings.");

  py::class_<PyPipeline>(m, "Pipeline")
      .def(py::init<const py::object&, std::optional<std::vector<std::string>>,
                    std::optional<std::string>>(),
           py::arg("config") = py::none(), py::arg("classes") = py::none(),
           py::arg("data_dir") = py::none())
      .def("segment", &PyPipeline::segment, py::arg("image"), py::arg("image_id") = "array")
      .def_property_readonly("config", &PyPipeline::config);

  m.def("bench",
        [](const py::object& config, std::optional<std::size_t> limit, int jobs,
           std::optional<std::string> data_dir) {
          PipelineConfig c = config_from(config);
          apply_environment(c);
          BenchmarkOptions o;
          o.limit = limit;
          o.jobs = jobs;
          json j;
          {
            py::gil_scoped_release release;
            const auto report = bench_from_config(
                c, o, data_dir ? std::filesystem::path(*data_dir) : default_data_dir());
            j = report_to_json(report);
          }
          return to_python(j);
        },
        py::arg("config"), py::arg("limit") = py::none(), py::arg("jobs") = 1,
        py::arg("data_dir") = py::none());
}
