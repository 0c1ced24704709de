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

#include "freeseg/report.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <yaml-cpp/yaml.h>

#include "freeseg/errors.hpp"
#include "freeseg/image.hpp"

namespace freeseg {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

json timings_to_json(const StageTimings& t) {
  return json{{"caption_s", t.caption_s},         {"features_s", t.features_s},
              {"clustering_s", t.clustering_s},   {"classification_s", t.classification_s},
              {"refinement_s", t.refinement_s},   {"total_s", t.total_s}};
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string lpad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

BenchmarkReport run_benchmark(const Dataset& dataset, const Pipeline& pipeline,
                              const BenchmarkOptions& options) {
  const DatasetSpec& spec = dataset.spec();
  if (pipeline.config().candidate_mode != CandidateMode::kClosed)
    throw ConfigError("benchmarks need the closed vocabulary of the dataset");
  if (pipeline.classes() != spec.classes)
    throw ConfigError("pipeline classes differ from the dataset class list");

  std::vector<std::string> ids = dataset.image_ids();
  if (options.limit && *options.limit < ids.size()) ids.resize(*options.limit);
  if (!options.overlay_dir.empty()) fs::create_directories(options.overlay_dir);

  const int num_classes = static_cast<int>(spec.classes.size());
  std::vector<EvalAccumulator> partial(ids.size(), EvalAccumulator(num_classes));
  std::vector<ImageOutcome> outcomes(ids.size());
  std::vector<std::exception_ptr> errors(ids.size());

  auto work = [&](std::size_t i) {
    try {
      ImageRecord image = read_image(dataset.image_path(ids[i]));
      image.id = ids[i];
      const SegmentationMap gt = dataset.load_ground_truth(ids[i]);
      if (gt.labels.height != image.height || gt.labels.width != image.width)
        throw ShapeMismatch("ground truth of '" + ids[i] + "' does not match its image");
      const SegmentResult r = pipeline.segment(image);
      partial[i].update(gt.labels, r.labels.labels);
      ImageOutcome& o = outcomes[i];
      o.id = ids[i];
      o.height = image.height;
      o.width = image.width;
      o.prediction_sha256 = sha256_hex(r.labels.labels.data.data(),
                                       r.labels.labels.data.size() * sizeof(std::int32_t));
      o.timings = r.timings;
      if (!options.overlay_dir.empty())
        write_png_rgb(options.overlay_dir / (ids[i] + ".png"), overlay(image, r.labels.labels));
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(ids.size())));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      work(i);
      if (errors[i]) std::rethrow_exception(errors[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) work(i);
      });
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  BenchmarkReport report;
  report.dataset = to_string(spec.kind);
  report.classes = spec.classes;
  report.accumulator = EvalAccumulator(num_classes);
  for (const auto& p : partial) report.accumulator.merge(p);
  report.images = std::move(outcomes);
  report.config = config_to_json(pipeline.config());
  std::string digest;
  for (const auto& o : report.images) digest += o.id + ":" + o.prediction_sha256 + "\n";
  report.checksum = sha256_hex(digest.data(), digest.size());
  return report;
}

json report_to_json(const BenchmarkReport& report, bool include_timing) {
  json j;
  j["dataset"] = report.dataset;
  j["classes"] = report.classes;
  j["num_images"] = report.images.size();
  const bool scored = report.accumulator.total() > 0;
  j["miou"] = scored ? json(report.miou()) : json(nullptr);
  j["pixel_accuracy"] = scored ? json(report.pixel_accuracy()) : json(nullptr);
  json per_class = json::array();
  const auto iou = report.accumulator.per_class_iou();
  for (std::size_t c = 0; c < report.classes.size(); ++c)
    per_class.push_back({{"class", report.classes[c]},
                         {"iou", iou[c] ? json(*iou[c]) : json(nullptr)}});
  j["per_class_iou"] = per_class;
  j["confusion"] = report.accumulator.confusion();
  json images = json::array();
  for (const auto& o : report.images)
    images.push_back({{"id", o.id},
                      {"height", o.height},
                      {"width", o.width},
                      {"prediction_sha256", o.prediction_sha256}});
  j["images"] = images;
  j["checksum"] = report.checksum;
  j["config"] = report.config;
  if (include_timing) {
    json per_image = json::array();
    double total = 0.0;
    for (const auto& o : report.images) {
      json t = timings_to_json(o.timings);
      t["id"] = o.id;
      per_image.push_back(t);
      total += o.timings.total_s;
    }
    j["timing"] = {{"total_s", total}, {"per_image", per_image}};
  }
  return j;
}

std::string render_table(const BenchmarkReport& report) {
  std::ostringstream os;
  std::size_t width = 8;
  for (const auto& c : report.classes) width = std::max(width, c.size() + 2);
  os << pad("class", width) << lpad("IoU", 8) << "\n";
  os << std::string(width + 8, '-') << "\n";
  const auto iou = report.accumulator.per_class_iou();
  for (std::size_t c = 0; c < report.classes.size(); ++c)
    os << pad(report.classes[c], width) << lpad(iou[c] ? percent(*iou[c]) : "-", 8) << "\n";
  os << std::string(width + 8, '-') << "\n";
  const bool scored = report.accumulator.total() > 0;
  os << pad("mIoU", width) << lpad(scored ? percent(report.miou()) : "-", 8) << "\n";
  os << pad("pixel acc", width) << lpad(scored ? percent(report.pixel_accuracy()) : "-", 8)
     << "\n";
  os << "dataset " << report.dataset << ", " << report.images.size() << " images, checksum "
     << report.checksum.substr(0, 16) << "\n";
  return os.str();
}

BenchmarkReport bench_from_config(const PipelineConfig& config, const BenchmarkOptions& options,
                                  const fs::path& data_dir) {
  const DatasetSpec spec = make_dataset_spec(config.dataset, data_dir);
  const auto dataset = open_dataset(spec);
  Pipeline pipeline(config, make_backends(config), spec.classes);
  return run_benchmark(*dataset, pipeline, options);
}

PipelineConfig patch_config(const PipelineConfig& base, const json& patch) {
  json merged = config_to_json(base);
  merged.merge_patch(patch);
  return parse_config(merged.dump());
}

std::vector<AblationCell> AblationGrid::cells(const PipelineConfig& base) const {
  std::vector<AblationCell> out{AblationCell{{}, base}};
  for (const auto& axis : axes) {
    if (axis.values.empty()) throw ConfigError("ablation axis '" + axis.name + "' has no values");
    std::vector<AblationCell> next;
    for (const auto& cell : out)
      for (const auto& v : axis.values) {
        AblationCell c{cell.labels, patch_config(cell.config, v.patch)};
        c.labels.push_back(v.label);
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

namespace {

std::string resolution_label(const std::vector<int>& res) {
  std::string s;
  for (std::size_t i = 0; i < res.size(); ++i) s += (i ? "+" : "") + std::to_string(res[i]);
  return s;
}

AxisValue k_value(int k) { return {std::to_string(k), {{"clustering", {{"k", k}}}}}; }

AxisValue resolution_value(const std::vector<int>& res) {
  return {resolution_label(res), {{"features", {{"resolutions", res}}}}};
}

AxisValue maps_value(const std::string& m) {
  if (m == "F") return {"F", {{"features", {{"include_attention", false}}}}};
  if (m == "A+F") return {"A+F", {{"features", {{"include_attention", true}}}}};
  throw ConfigError("maps axis takes F or A+F, got '" + m + "'");
}

AxisValue refinement_value(const std::string& r) {
  parse_refinement(r);
  static const std::map<std::string, std::string> names{
      {"none", "No Refinement"}, {"crf", "CRF"}, {"crf-region", "CRF (per region)"},
      {"pamr", "PAMR"}};
  return {names.at(r), {{"refinement", {{"method", r}}}}};
}

AxisValue dataset_value(const std::string& d) {
  parse_dataset_kind(d);
  static const std::map<std::string, std::string> names{
      {"voc21", "VOC"}, {"voc-c", "VOC-C"}, {"coco81", "COCO"}, {"coco27", "COCO-27"},
      {"custom", "custom"}};
  return {names.at(d), {{"dataset", {{"name", d}}}}};
}

AxisValue stage_value(const std::string& s) {
  if (s == "baseline")
    return {"Baseline",
            {{"vocabulary", {{"use_caption", false}}},
             {"refinement", {{"method", "none"}}},
             {"features", {{"include_attention", false}}}}};
  if (s == "caption")
    return {"BLIP",
            {{"vocabulary", {{"use_caption", true}}},
             {"refinement", {{"method", "none"}}},
             {"features", {{"include_attention", false}}}}};
  if (s == "caption+refinement")
    return {"BLIP+Refinement",
            {{"vocabulary", {{"use_caption", true}}},
             {"refinement", {{"method", "crf"}}},
             {"features", {{"include_attention", false}}}}};
  if (s == "caption+refinement+attention")
    return {"BLIP+Refinement+Attn",
            {{"vocabulary", {{"use_caption", true}}},
             {"refinement", {{"method", "crf"}}},
             {"features", {{"include_attention", true}}}}};
  throw ConfigError("unknown stage '" + s + "'");
}

AblationAxis k_axis() { return {"K", {k_value(3), k_value(4), k_value(5)}}; }
AblationAxis maps_axis() { return {"maps", {maps_value("F"), maps_value("A+F")}}; }

AxisValue shorthand_value(const std::string& axis, const YAML::Node& v) {
  try {
    if (axis == "k") return k_value(v.as<int>());
    if (axis == "resolution") {
      if (v.IsSequence()) return resolution_value(v.as<std::vector<int>>());
      return resolution_value({v.as<int>()});
    }
    if (axis == "timestep") {
      const int t = v.as<int>();
      return {std::to_string(t), {{"features", {{"timestep", t}}}}};
    }
    const std::string s = v.as<std::string>();
    if (axis == "maps") return maps_value(s);
    if (axis == "refinement") return refinement_value(s);
    if (axis == "dataset") return dataset_value(s);
    if (axis == "stage") return stage_value(s);
    if (axis == "backbone") return {s, {{"backbone", s}}};
    if (axis == "mask_fill") {
      parse_mask_fill(s);
      return {s, {{"assignment", {{"mask_fill", s}}}}};
    }
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value on ablation axis '" + axis + "'");
  }
  throw ConfigError("axis '" + axis + "' has no shorthand values; use {label, set}");
}

json yaml_to_json(const YAML::Node& node) {
  if (node.IsMap()) {
    json j = json::object();
    for (const auto& kv : node) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
    return j;
  }
  if (node.IsSequence()) {
    json j = json::array();
    for (const auto& v : node) j.push_back(yaml_to_json(v));
    return j;
  }
  if (node.IsNull()) return nullptr;
  const std::string s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  bool b;
  if (YAML::convert<bool>::decode(node, b)) return b;
  try {
    std::size_t pos = 0;
    long long i = std::stoll(s, &pos);
    if (pos == s.size()) return i;
  } catch (...) {
  }
  try {
    std::size_t pos = 0;
    double d = std::stod(s, &pos);
    if (pos == s.size()) return d;
  } catch (...) {
  }
  return s;
}

}  // namespace

std::vector<std::string> ablation_preset_names() {
  return {"stages", "resolution", "refinement", "coco", "backbones"};
}

AblationGrid ablation_preset(const std::string& name) {
  AblationGrid g;
  g.name = name;
  if (name == "stages") {
    g.axes.push_back({"stage",
                      {stage_value("baseline"), stage_value("caption"),
                       stage_value("caption+refinement"),
                       stage_value("caption+refinement+attention")}});
  } else if (name == "resolution") {
    g.axes.push_back({"resolution",
                      {resolution_value({16}), resolution_value({32}), resolution_value({64}),
                       resolution_value({16, 32}), resolution_value({32, 64}),
                       resolution_value({16, 32, 64})}});
    g.axes.push_back(k_axis());
    g.axes.push_back(maps_axis());
  } else if (name == "refinement") {
    g.axes.push_back(
        {"refinement", {refinement_value("none"), refinement_value("crf"), refinement_value("pamr")}});
    g.axes.push_back(k_axis());
    g.axes.push_back(maps_axis());
  } else if (name == "coco") {
    g.axes.push_back({"dataset", {dataset_value("coco27"), dataset_value("coco81")}});
    g.axes.push_back(k_axis());
    g.axes.push_back(maps_axis());
  } else if (name == "backbones") {
    AblationAxis axis{"backbone", {}};
    for (const char* b : {"clip-vit", "vit", "dinov2", "sd15"})
      axis.values.push_back({b, {{"backbone", b}, {"refinement", {{"method", "none"}}}}});
    g.axes.push_back(std::move(axis));
  } else {
    throw ConfigError("unknown ablation preset '" + name + "'");
  }
  return g;
}

AblationGrid parse_ablation_grid(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("ablation grid is not valid YAML: ") + e.what());
  }
  if (!root.IsMap() || !root["axes"] || !root["axes"].IsSequence())
    throw ConfigError("ablation grid needs an 'axes' list");
  AblationGrid g;
  g.name = root["name"] ? root["name"].as<std::string>() : "custom";
  for (const auto& a : root["axes"]) {
    if (!a.IsMap() || !a["name"] || !a["values"] || !a["values"].IsSequence())
      throw ConfigError("each axis needs a name and a values list");
    AblationAxis axis;
    axis.name = a["name"].as<std::string>();
    for (const auto& v : a["values"]) {
      if (v.IsMap() && v["set"]) {
        const std::string label = v["label"] ? v["label"].as<std::string>()
                                             : std::to_string(axis.values.size());
        axis.values.push_back({label, yaml_to_json(v["set"])});
      } else {
        axis.values.push_back(shorthand_value(axis.name, v));
      }
    }
    g.axes.push_back(std::move(axis));
  }
  return g;
}

AblationGrid load_ablation_grid(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read ablation grid " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ablation_grid(ss.str());
}

std::string render_ablation_table(const AblationResult& result) {
  const auto& axes = result.grid.axes;
  std::ostringstream os;
  auto score = [&](std::size_t i) {
    const auto& acc = result.reports[i].accumulator;
    return acc.total() > 0 ? percent(acc.miou()) : std::string("-");
  };
  if (axes.size() < 2) {
    const std::string head = axes.empty() ? "cell" : axes[0].name;
    std::size_t w = head.size() + 2;
    for (const auto& c : result.cells)
      if (!c.labels.empty()) w = std::max(w, c.labels[0].size() + 2);
    os << pad(head, w) << lpad("mIoU", 8) << lpad("PixAcc", 8) << "\n";
    os << std::string(w + 16, '-') << "\n";
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
      const auto& acc = result.reports[i].accumulator;
      const std::string label = result.cells[i].labels.empty() ? "-" : result.cells[i].labels[0];
      os << pad(label, w) << lpad(score(i), 8)
         << lpad(acc.total() > 0 ? percent(acc.pixel_accuracy()) : "-", 8) << "\n";
    }
    return os.str();
  }

  const std::size_t cols = axes.back().values.size();
  std::vector<std::size_t> widths;
  for (std::size_t a = 0; a + 1 < axes.size(); ++a) {
    std::size_t w = axes[a].name.size() + 2;
    for (const auto& v : axes[a].values) w = std::max(w, v.label.size() + 2);
    widths.push_back(w);
  }
  std::size_t total_width = 0;
  for (std::size_t a = 0; a + 1 < axes.size(); ++a) {
    os << pad(axes[a].name, widths[a]);
    total_width += widths[a];
  }
  for (const auto& v : axes.back().values) {
    os << lpad(v.label, 8);
    total_width += 8;
  }
  os << "\n" << std::string(total_width, '-') << "\n";
  for (std::size_t row = 0; row * cols < result.cells.size(); ++row) {
    const auto& labels = result.cells[row * cols].labels;
    for (std::size_t a = 0; a + 1 < axes.size(); ++a) {
      // Outer labels are printed only when they change, like merged cells.
      bool repeat = row > 0;
      for (std::size_t b = 0; repeat && b <= a; ++b)
        repeat = result.cells[(row - 1) * cols].labels[b] == labels[b];
      os << pad(repeat ? "" : labels[a], widths[a]);
    }
    for (std::size_t c = 0; c < cols; ++c) os << lpad(score(row * cols + c), 8);
    os << "\n";
  }
  return os.str();
}

json ablation_to_json(const AblationResult& result, bool include_timing) {
  json j;
  j["grid"] = result.grid.name;
  json axes = json::array();
  for (const auto& a : result.grid.axes) {
    json values = json::array();
    for (const auto& v : a.values) values.push_back({{"label", v.label}, {"set", v.patch}});
    axes.push_back({{"name", a.name}, {"values", values}});
  }
  j["axes"] = axes;
  json cells = json::array();
  for (std::size_t i = 0; i < result.cells.size(); ++i)
    cells.push_back({{"labels", result.cells[i].labels},
                     {"report", report_to_json(result.reports[i], include_timing)}});
  j["cells"] = cells;
  return j;
}

}  // namespace freeseg
