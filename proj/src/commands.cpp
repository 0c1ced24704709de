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

#include "freeseg/commands.hpp"

#include <algorithm>
#include <fstream>

#include "freeseg/errors.hpp"
#include "freeseg/image.hpp"

namespace freeseg {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(const Error& error) {
  switch (error.category()) {
    case Error::Category::kConfig: return kExitConfig;
    case Error::Category::kBackend: return kExitBackend;
    case Error::Category::kIo: return kExitIo;
    case Error::Category::kData: return kExitData;
  }
  return kExitData;
}

json segment_to_json(const SegmentResult& r) {
  const auto& names = r.candidates.dataset_classes;
  auto name_of = [&](int i) {
    return i >= 0 && static_cast<std::size_t>(i) < names.size() ? names[i] : std::string("?");
  };
  json j;
  j["image_id"] = r.image_id;
  j["caption"] = r.caption;
  j["keywords"] = r.entities.keywords;
  j["classes"] = names;
  json cand = json::array();
  for (int c : r.candidates.candidates) cand.push_back(name_of(c));
  j["candidates"] = cand;
  json kw = json::array();
  for (const auto& m : r.candidates.per_keyword)
    kw.push_back({{"keyword", m.keyword},
                  {"nearest_class", name_of(m.nearest_class)},
                  {"matched_class", m.matched_class ? json(name_of(*m.matched_class)) : json(nullptr)},
                  {"min_distance", m.min_distance},
                  {"mean_distance", m.mean_distance}});
  j["per_keyword"] = kw;
  json masks = json::array();
  for (const auto& m : r.mask_labels) {
    std::size_t pixels = 0;
    for (auto v : r.cluster_map.data) pixels += v == m.mask_id;
    masks.push_back({{"mask_id", m.mask_id},
                     {"class_index", m.class_index},
                     {"class", name_of(m.class_index)},
                     {"nearest_class", name_of(m.nearest_class)},
                     {"distance", m.distance},
                     {"tie", m.tie},
                     {"pixels", pixels}});
  }
  j["masks"] = masks;
  j["kmeans"] = {{"k", r.clusters.k},
                 {"iterations", r.clusters.iterations},
                 {"inertia", r.clusters.inertia},
                 {"seed", r.clusters.seed}};
  return j;
}

std::vector<fs::path> write_segment_outputs(const SegmentResult& r, const ImageRecord& image,
                                            const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const std::string& id = r.image_id;
  const auto& labels = r.labels.labels;
  Grid<std::uint8_t> bytes(labels.height, labels.width);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels.data[i] < 0 || labels.data[i] > 254)
      throw UnknownLabel("label " + std::to_string(labels.data[i]) + " does not fit a PNG palette");
    bytes.data[i] = static_cast<std::uint8_t>(labels.data[i]);
  }
  std::vector<fs::path> paths{out_dir / (id + "_labels.png"), out_dir / (id + "_overlay.png"),
                              out_dir / (id + "_clusters.png"), out_dir / (id + "_masks.json"),
                              out_dir / (id + "_caption.txt")};
  write_label_png(paths[0], bytes);
  write_png_rgb(paths[1], overlay(image, labels));
  write_label_png(paths[2], r.cluster_map);
  {
    std::ofstream out(paths[3]);
    if (!out) throw IoError("cannot write " + paths[3].string());
    out << segment_to_json(r).dump(2) << "\n";
  }
  {
    std::ofstream out(paths[4]);
    if (!out) throw IoError("cannot write " + paths[4].string());
    out << r.caption << "\n";
  }
  return paths;
}

std::vector<fs::path> list_images(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

CacheSummary populate_cache(const std::vector<fs::path>& images, const PipelineConfig& config,
                            Backends live, const std::vector<std::string>& classes,
                            std::ostream& log) {
  CacheSummary summary;
  if (images.empty()) return summary;
  auto cache = std::make_shared<TensorCache>(config.cache_root);
  auto recording = std::make_shared<RecordingBackend>(std::move(live), cache, config.backbone);
  PipelineConfig run = config;
  run.refinement = Refinement::kNone;
  Pipeline pipeline(run, RecordingBackend::as_backends(recording), classes);
  for (const auto& path : images) {
    ++summary.images;
    try {
      pipeline.segment(read_image(path));
      log << "cached " << path.filename().string() << "\n";
    } catch (const std::exception& e) {
      ++summary.failures;
      log << "failed " << path.filename().string() << ": " << e.what() << "\n";
    }
  }
  summary.live_calls = recording->live_calls();
  return summary;
}

AblationResult run_ablation(const AblationGrid& grid, const PipelineConfig& base,
                            const BenchmarkOptions& options, const fs::path& data_dir) {
  AblationResult result;
  result.grid = grid;
  result.cells = grid.cells(base);
  for (const auto& cell : result.cells)
    result.reports.push_back(bench_from_config(cell.config, options, data_dir));
  return result;
}

}  // namespace freeseg
