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

#include "freeseg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "freeseg/errors.hpp"
#include "freeseg/vocabulary.hpp"

#ifndef FREESEG_SOURCE_DATA_DIR
#define FREESEG_SOURCE_DATA_DIR "data"
#endif

namespace freeseg {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(CandidateMode mode) {
  return mode == CandidateMode::kOpen ? "open" : "closed";
}

std::string to_string(MaskFill fill) {
  switch (fill) {
    case MaskFill::kBlack: return "black";
    case MaskFill::kMean: return "mean";
    case MaskFill::kCrop: return "crop";
  }
  return "black";
}

std::string to_string(Refinement refinement) {
  switch (refinement) {
    case Refinement::kCrf: return "crf";
    case Refinement::kCrfPerRegion: return "crf-region";
    case Refinement::kPamr: return "pamr";
    case Refinement::kNone: return "none";
  }
  return "none";
}

CandidateMode parse_candidate_mode(const std::string& s) {
  if (s == "closed") return CandidateMode::kClosed;
  if (s == "open") return CandidateMode::kOpen;
  throw ConfigError("candidate mode must be closed or open, got '" + s + "'");
}

MaskFill parse_mask_fill(const std::string& s) {
  if (s == "black") return MaskFill::kBlack;
  if (s == "mean") return MaskFill::kMean;
  if (s == "crop") return MaskFill::kCrop;
  throw ConfigError("mask fill must be black, mean or crop, got '" + s + "'");
}

Refinement parse_refinement(const std::string& s) {
  if (s == "crf") return Refinement::kCrf;
  if (s == "crf-region") return Refinement::kCrfPerRegion;
  if (s == "pamr") return Refinement::kPamr;
  if (s == "none") return Refinement::kNone;
  throw ConfigError("refinement must be crf, crf-region, pamr or none, got '" + s + "'");
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (timestep < 0) fail("timestep must be >= 0");
  if (resolutions.empty()) fail("at least one feature resolution is required");
  for (int r : resolutions)
    if (r <= 0) fail("feature resolutions must be positive");
  if (grid_size <= 0) fail("grid_size must be positive");
  if (k < 1) fail("k must be >= 1");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (!(tol >= 0.0)) fail("tol must be >= 0");
  if (crf.iterations < 0) fail("crf iterations must be >= 0");
  if (crf.theta_xy_smooth <= 0 || crf.theta_xy_bilateral <= 0 || crf.theta_rgb <= 0)
    fail("crf kernel widths must be positive");
  if (crf.w_smooth < 0 || crf.w_bilateral < 0) fail("crf weights must be >= 0");
  if (!(crf.unary_confidence > 0.0 && crf.unary_confidence < 1.0))
    fail("crf unary_confidence must lie in (0, 1)");
  if (pamr.iterations < 0) fail("pamr iterations must be >= 0");
  for (int d : pamr.dilations)
    if (d < 1) fail("pamr dilations must be >= 1");
  if (backend != "replay" && backend != "http") fail("backend must be replay or http");
  if (jobs < 1) fail("jobs must be >= 1");
  if (prompt_template.find("{}") == std::string::npos)
    fail("prompt_template must contain '{}'");
}

namespace {

class Reader {
 public:
  Reader(const YAML::Node& node, std::string path) : node_(node), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_ + " must be a mapping");
  }

  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0 || !node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      const std::string key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError("unknown key '" + qualified(key) + "'");
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap() || !node_[key]) return;
    try {
      out = node_[key].template as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError("bad value for '" + qualified(key) + "'");
    }
  }

  void get_path(const std::string& key, fs::path& out) {
    std::string s;
    bool present = has(key);
    get(key, s);
    if (present) out = s;
  }

  template <typename E, typename Parse>
  void get_enum(const std::string& key, E& out, Parse parse) {
    std::string s;
    bool present = has(key);
    get(key, s);
    if (present) out = parse(s);
  }

  YAML::Node child(const std::string& key) {
    seen_.insert(key);
    if (!node_ || !node_.IsMap()) return YAML::Node();
    return node_[key];
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_crf(const YAML::Node& node, CrfParams& crf) {
  Reader r(node, "refinement.crf");
  r.get("iterations", crf.iterations);
  r.get("w_smooth", crf.w_smooth);
  r.get("w_bilateral", crf.w_bilateral);
  r.get("theta_xy_smooth", crf.theta_xy_smooth);
  r.get("theta_xy_bilateral", crf.theta_xy_bilateral);
  r.get("theta_rgb", crf.theta_rgb);
  r.get("unary_confidence", crf.unary_confidence);
  r.get("exact_max_pixels", crf.exact_max_pixels);
}

void apply_yaml(const YAML::Node& root, PipelineConfig& c) {
  if (!root || root.IsNull()) return;
  Reader r(root, "");
  r.get("backbone", c.backbone);
  r.get("jobs", c.jobs);
  r.get_path("cache_root", c.cache_root);
  {
    Reader f(r.child("features"), "features");
    f.get("timestep", c.timestep);
    f.get("resolutions", c.resolutions);
    f.get("grid_size", c.grid_size);
    f.get("include_attention", c.include_attention);
  }
  {
    Reader k(r.child("clustering"), "clustering");
    k.get("k", c.k);
    k.get("seed", c.seed);
    k.get("standardize", c.standardize);
    k.get("max_iters", c.max_iters);
    k.get("tol", c.tol);
  }
  {
    Reader v(r.child("vocabulary"), "vocabulary");
    v.get_enum("mode", c.candidate_mode, parse_candidate_mode);
    v.get("use_caption", c.use_caption);
    v.get("prompt_template", c.prompt_template);
    v.get_path("classes", c.classes);
  }
  {
    Reader a(r.child("assignment"), "assignment");
    a.get_enum("mask_fill", c.mask_fill, parse_mask_fill);
  }
  {
    Reader f(r.child("refinement"), "refinement");
    f.get_enum("method", c.refinement, parse_refinement);
    read_crf(f.child("crf"), c.crf);
    Reader p(f.child("pamr"), "refinement.pamr");
    p.get("iterations", c.pamr.iterations);
    p.get("dilations", c.pamr.dilations);
  }
  {
    Reader b(r.child("backend"), "backend");
    b.get("kind", c.backend);
    b.get("url", c.backend_url);
    b.get("timeout_s", c.backend_timeout_s);
  }
  {
    Reader d(r.child("dataset"), "dataset");
    d.get("name", c.dataset.name);
    d.get_path("root", c.dataset.root);
    d.get_path("classes", c.dataset.classes);
    d.get_path("split", c.dataset.split);
    d.get_path("annotations", c.dataset.annotations);
    d.get_path("image_dir", c.dataset.image_dir);
    d.get_path("label_dir", c.dataset.label_dir);
    d.get_path("remap", c.dataset.remap);
  }
}

}  // namespace

PipelineConfig parse_config(const std::string& text, PipelineConfig base) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  apply_yaml(root, base);
  return base;
}

PipelineConfig load_config(const fs::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(base));
}

void apply_environment(PipelineConfig& config) {
  if (const char* env = std::getenv("FREESEG_CACHE"); env && *env) config.cache_root = env;
}

json config_to_json(const PipelineConfig& c) {
  return json{
      {"backbone", c.backbone},
      {"jobs", c.jobs},
      {"cache_root", c.cache_root.string()},
      {"features",
       {{"timestep", c.timestep},
        {"resolutions", c.resolutions},
        {"grid_size", c.grid_size},
        {"include_attention", c.include_attention}}},
      {"clustering",
       {{"k", c.k},
        {"seed", c.seed},
        {"standardize", c.standardize},
        {"max_iters", c.max_iters},
        {"tol", c.tol}}},
      {"vocabulary",
       {{"mode", to_string(c.candidate_mode)},
        {"use_caption", c.use_caption},
        {"prompt_template", c.prompt_template},
        {"classes", c.classes.string()}}},
      {"assignment", {{"mask_fill", to_string(c.mask_fill)}}},
      {"refinement",
       {{"method", to_string(c.refinement)},
        {"crf",
         {{"iterations", c.crf.iterations},
          {"w_smooth", c.crf.w_smooth},
          {"w_bilateral", c.crf.w_bilateral},
          {"theta_xy_smooth", c.crf.theta_xy_smooth},
          {"theta_xy_bilateral", c.crf.theta_xy_bilateral},
          {"theta_rgb", c.crf.theta_rgb},
          {"unary_confidence", c.crf.unary_confidence},
          {"exact_max_pixels", c.crf.exact_max_pixels}}},
        {"pamr", {{"iterations", c.pamr.iterations}, {"dilations", c.pamr.dilations}}}}},
      {"backend",
       {{"kind", c.backend}, {"url", c.backend_url}, {"timeout_s", c.backend_timeout_s}}},
      {"dataset",
       {{"name", c.dataset.name},
        {"root", c.dataset.root.string()},
        {"classes", c.dataset.classes.string()},
        {"split", c.dataset.split.string()},
        {"annotations", c.dataset.annotations.string()},
        {"image_dir", c.dataset.image_dir.string()},
        {"label_dir", c.dataset.label_dir.string()},
        {"remap", c.dataset.remap.string()}}},
  };
}

fs::path default_data_dir() {
  if (const char* env = std::getenv("FREESEG_DATA_DIR"); env && *env) return env;
  return FREESEG_SOURCE_DATA_DIR;
}

DatasetSpec make_dataset_spec(const DatasetConfig& d, const fs::path& data_dir) {
  DatasetSpec spec;
  spec.kind = parse_dataset_kind(d.name);
  spec.root = d.root;
  spec.split_file = d.split;
  spec.annotation_file = d.annotations;
  spec.image_dir = d.image_dir;
  spec.label_dir = d.label_dir;

  fs::path classes = d.classes;
  if (classes.empty()) {
    switch (spec.kind) {
      case DatasetKind::kVoc21:
      case DatasetKind::kVocC: classes = data_dir / "classes" / "voc21.txt"; break;
      case DatasetKind::kCoco81: classes = data_dir / "classes" / "coco81.txt"; break;
      case DatasetKind::kCoco27: classes = data_dir / "classes" / "coco27.txt"; break;
      case DatasetKind::kCustom:
        throw ConfigError("dataset 'custom' needs dataset.classes");
    }
  }
  spec.classes = read_class_list(classes);

  if (spec.kind == DatasetKind::kCoco27) {
    const fs::path remap = d.remap.empty() ? data_dir / "coco27_remap.json" : d.remap;
    spec.remap = read_remap(remap);
  }
  if (spec.kind == DatasetKind::kVocC && spec.split_file.empty())
    throw ConfigError("dataset 'voc-c' needs dataset.split listing its image ids");
  return spec;
}

}  // namespace freeseg
