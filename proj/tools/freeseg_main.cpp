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

// freeseg: zero-shot segmentation from diffusion features.
//
//   freeseg segment IMAGE... --out DIR [--classes FILE | --open-vocab]
//   freeseg cache IMAGE_DIR [--classes FILE]
//   freeseg bench --out DIR [--limit N] [--preset stages|refinement]
//   freeseg ablate --out DIR (--preset NAME | --grid FILE)
//
// Settings come from built-in defaults, then --config, then FREESEG_CACHE,
// then the flags below.

#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "freeseg/commands.hpp"
#include "freeseg/errors.hpp"
#include "freeseg/http_backend.hpp"
#include "freeseg/image.hpp"

namespace fs = std::filesystem;
using namespace freeseg;

namespace {

struct Overrides {
  std::string config_file;
  std::string cache_root;
  std::string backend;
  std::string backend_url;
  std::optional<int> jobs;
  std::optional<int> k;
  std::optional<std::uint64_t> seed;
  std::optional<int> timestep;
  std::vector<int> resolutions;
  bool attention = false;
  bool no_caption = false;
  std::string refinement;
  std::string mask_fill;
  std::string classes;
  std::string data_dir;
  std::string dataset;
  std::string dataset_root;
  std::string split;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "YAML config file");
  app->add_option("--cache", o.cache_root, "Cache root (overrides FREESEG_CACHE)");
  app->add_option("--backend", o.backend, "replay or http");
  app->add_option("--backend-url", o.backend_url, "Model server URL for the http backend");
  app->add_option("--jobs", o.jobs, "Images processed in parallel");
  app->add_option("--k", o.k, "Number of clusters");
  app->add_option("--seed", o.seed, "K-means seed");
  app->add_option("--timestep", o.timestep, "Diffusion timestep");
  app->add_option("--resolutions", o.resolutions, "Feature map resolutions")->delimiter(',');
  app->add_flag("--attention", o.attention, "Cluster attention maps with the features");
  app->add_flag("--no-caption", o.no_caption, "Skip the caption gate (all classes are candidates)");
  app->add_option("--refinement", o.refinement, "crf, crf-region, pamr or none");
  app->add_option("--mask-fill", o.mask_fill, "black, mean or crop");
  app->add_option("--data-dir", o.data_dir, "Directory with bundled class lists");
}

void add_dataset(CLI::App* app, Overrides& o) {
  app->add_option("--dataset", o.dataset, "voc21, voc-c, coco81, coco27 or custom");
  app->add_option("--root", o.dataset_root, "Dataset root (never written to)");
  app->add_option("--split", o.split, "Split file with image ids");
}

PipelineConfig resolve(const Overrides& o) {
  PipelineConfig c;
  if (!o.config_file.empty()) c = load_config(o.config_file, c);
  apply_environment(c);
  if (!o.cache_root.empty()) c.cache_root = o.cache_root;
  if (!o.backend.empty()) c.backend = o.backend;
  if (!o.backend_url.empty()) c.backend_url = o.backend_url;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.k) c.k = *o.k;
  if (o.seed) c.seed = *o.seed;
  if (o.timestep) c.timestep = *o.timestep;
  if (!o.resolutions.empty()) c.resolutions = o.resolutions;
  if (o.attention) c.include_attention = true;
  if (o.no_caption) c.use_caption = false;
  if (!o.refinement.empty()) c.refinement = parse_refinement(o.refinement);
  if (!o.mask_fill.empty()) c.mask_fill = parse_mask_fill(o.mask_fill);
  if (!o.classes.empty()) c.classes = o.classes;
  if (!o.dataset.empty()) c.dataset.name = o.dataset;
  if (!o.dataset_root.empty()) c.dataset.root = o.dataset_root;
  if (!o.split.empty()) c.dataset.split = o.split;
  c.validate();
  return c;
}

fs::path data_dir_of(const Overrides& o) {
  return o.data_dir.empty() ? default_data_dir() : fs::path(o.data_dir);
}

std::vector<std::string> closed_classes(const PipelineConfig& c, const fs::path& data_dir) {
  if (!c.classes.empty()) return read_class_list(c.classes);
  return make_dataset_spec(c.dataset, data_dir).classes;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

int cmd_segment(const Overrides& o, const std::vector<std::string>& images, bool open_vocab,
                const fs::path& out_dir) {
  PipelineConfig c = resolve(o);
  if (open_vocab) c.candidate_mode = CandidateMode::kOpen;
  std::vector<std::string> classes;
  if (c.candidate_mode == CandidateMode::kClosed) classes = closed_classes(c, data_dir_of(o));
  const Pipeline pipeline(c, make_backends(c), classes);

  std::vector<std::exception_ptr> errors(images.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < images.size(); i = next++) {
      try {
        const ImageRecord image = read_image(images[i]);
        const SegmentResult r = pipeline.segment(image);
        write_segment_outputs(r, image, out_dir);
        std::lock_guard<std::mutex> lock(log_mutex);
        std::cout << image.id << ": " << r.mask_labels.size() << " masks, caption \""
                  << r.caption << "\"\n";
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::max(1, std::min<int>(c.jobs, static_cast<int>(images.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return kExitOk;
}

int cmd_cache(const Overrides& o, const fs::path& image_dir) {
  PipelineConfig c = resolve(o);
  const auto images = list_images(image_dir);
  if (images.empty()) {
    std::cout << "no images under " << image_dir.string() << "\n";
    return kExitOk;
  }
  if (c.backend != "http")
    throw ConfigError("caching needs a live model backend (--backend http --backend-url URL)");
  const auto classes = c.candidate_mode == CandidateMode::kClosed
                           ? closed_classes(c, data_dir_of(o))
                           : std::vector<std::string>{};
  auto http = std::make_shared<HttpBackend>(c.backend_url,
                                            std::max(1, static_cast<int>(c.backend_timeout_s)));
  const CacheSummary s = populate_cache(images, c, HttpBackend::as_backends(http), classes, std::cerr);
  std::cout << s.images << " images, " << s.failures << " failures, " << s.live_calls
            << " model calls\n";
  return s.failures ? kExitBackend : kExitOk;
}

void emit_ablation(const AblationResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir / "cells");
  for (std::size_t i = 0; i < result.cells.size(); ++i) {
    std::string name = std::to_string(i);
    for (const auto& l : result.cells[i].labels) name += "_" + l;
    for (auto& ch : name)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '-';
    write_text(out_dir / "cells" / (name + ".json"),
               report_to_json(result.reports[i]).dump(2) + "\n");
  }
  const std::string table = render_ablation_table(result);
  write_text(out_dir / "summary.txt", table);
  write_text(out_dir / "summary.json", ablation_to_json(result).dump(2) + "\n");
  std::cout << table;
}

BenchmarkOptions bench_options(const PipelineConfig& c, std::optional<std::size_t> limit,
                               bool overlays, const fs::path& out_dir) {
  BenchmarkOptions opts;
  opts.limit = limit;
  opts.jobs = c.jobs;
  if (overlays) opts.overlay_dir = out_dir / "overlays";
  return opts;
}

int cmd_bench(const Overrides& o, std::optional<std::size_t> limit, bool overlays,
              const std::string& preset, const fs::path& out_dir) {
  const PipelineConfig c = resolve(o);
  const auto opts = bench_options(c, limit, overlays, out_dir);
  if (!preset.empty()) {
    if (preset != "stages" && preset != "refinement")
      throw ConfigError("bench presets are stages and refinement; use ablate for other grids");
    emit_ablation(run_ablation(ablation_preset(preset), c, opts, data_dir_of(o)), out_dir);
    return kExitOk;
  }
  const BenchmarkReport report = bench_from_config(c, opts, data_dir_of(o));
  fs::create_directories(out_dir);
  write_text(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  const std::string table = render_table(report);
  write_text(out_dir / "report.txt", table);
  std::cout << table;
  return kExitOk;
}

int cmd_ablate(const Overrides& o, std::optional<std::size_t> limit, const std::string& preset,
               const std::string& grid_file, const fs::path& out_dir) {
  const PipelineConfig c = resolve(o);
  if (preset.empty() == grid_file.empty())
    throw ConfigError("ablate needs exactly one of --preset and --grid");
  const AblationGrid grid =
      preset.empty() ? load_ablation_grid(grid_file) : ablation_preset(preset);
  emit_ablation(run_ablation(grid, c, bench_options(c, limit, false, out_dir), data_dir_of(o)),
                out_dir);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot open-vocabulary segmentation from diffusion features"};
  app.require_subcommand(1);

  Overrides o;
  std::vector<std::string> images;
  std::string out_dir, image_dir, preset, grid_file;
  bool open_vocab = false, overlays = false;
  std::optional<std::size_t> limit;

  auto* segment = app.add_subcommand("segment", "Segment one or more images");
  add_common(segment, o);
  add_dataset(segment, o);
  segment->add_option("images", images, "Input images")->required();
  segment->add_option("--out", out_dir, "Output directory")->required();
  auto* classes_opt = segment->add_option("--classes", o.classes, "Class list, 'unlabeled' first");
  segment->add_flag("--open-vocab", open_vocab, "Use the caption's nouns as the class list")
      ->excludes(classes_opt);

  auto* cache = app.add_subcommand("cache", "Record backbone outputs for offline runs");
  add_common(cache, o);
  add_dataset(cache, o);
  cache->add_option("image_dir", image_dir, "Directory of images")->required();
  cache->add_option("--classes", o.classes, "Class list, 'unlabeled' first");

  auto* bench = app.add_subcommand("bench", "Evaluate on a dataset");
  add_common(bench, o);
  add_dataset(bench, o);
  bench->add_option("--out", out_dir, "Output directory")->required();
  bench->add_option("--limit", limit, "Evaluate only the first N images");
  bench->add_flag("--overlays", overlays, "Write overlay PNGs");
  bench->add_option("--preset", preset, "stages or refinement");

  auto* ablate = app.add_subcommand("ablate", "Run a grid of benchmarks");
  add_common(ablate, o);
  add_dataset(ablate, o);
  ablate->add_option("--out", out_dir, "Output directory")->required();
  ablate->add_option("--limit", limit, "Evaluate only the first N images");
  ablate->add_option("--preset", preset, "stages, resolution, refinement, coco or backbones");
  ablate->add_option("--grid", grid_file, "YAML grid file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (segment->parsed()) return cmd_segment(o, images, open_vocab, out_dir);
    if (cache->parsed()) return cmd_cache(o, image_dir);
    if (bench->parsed()) return cmd_bench(o, limit, overlays, preset, out_dir);
    if (ablate->parsed()) return cmd_ablate(o, limit, preset, grid_file, out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}
