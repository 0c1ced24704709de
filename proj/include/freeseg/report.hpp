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

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeseg/config.hpp"
#include "freeseg/eval.hpp"
#include "freeseg/pipeline.hpp"

namespace freeseg {

struct ImageOutcome {
  std::string id;
  int height = 0;
  int width = 0;
  std::string prediction_sha256;  // over the int32 label buffer
  StageTimings timings;
};

struct BenchmarkReport {
  std::string dataset;
  std::vector<std::string> classes;
  EvalAccumulator accumulator{1};
  std::vector<ImageOutcome> images;
  nlohmann::json config;
  std::string checksum;  // sha256 over the per-image prediction hashes, in order

  double miou() const { return accumulator.miou(); }
  double pixel_accuracy() const { return accumulator.pixel_accuracy(); }
};

struct BenchmarkOptions {
  std::optional<std::size_t> limit;
  int jobs = 1;
  std::filesystem::path overlay_dir;  // empty: no overlays
};

// Segments every image of the split (up to `limit`) and scores it.
// Per-image accumulators are merged in split order, so `jobs` cannot change
// the result.
BenchmarkReport run_benchmark(const Dataset& dataset, const Pipeline& pipeline,
                              const BenchmarkOptions& options = {});

// Timing fields live under "timing" only, so two runs differ nowhere else.
nlohmann::json report_to_json(const BenchmarkReport& report, bool include_timing = true);
std::string render_table(const BenchmarkReport& report);

// Opens the configured dataset and backends and runs the benchmark.
BenchmarkReport bench_from_config(const PipelineConfig& config, const BenchmarkOptions& options,
                                  const std::filesystem::path& data_dir = default_data_dir());

// One ablation axis: each value is a config patch with a display label.
struct AxisValue {
  std::string label;
  nlohmann::json patch;
};

struct AblationAxis {
  std::string name;
  std::vector<AxisValue> values;
};

struct AblationCell {
  std::vector<std::string> labels;  // one per axis
  PipelineConfig config;
};

struct AblationGrid {
  std::string name;
  std::vector<AblationAxis> axes;

  // Cartesian product, first axis outermost.
  std::vector<AblationCell> cells(const PipelineConfig& base) const;
};

// Named grids: stages (pipeline stages), resolution (resolution x K x maps),
// refinement (refinement x K x maps), coco (dataset x K x maps), backbones.
AblationGrid ablation_preset(const std::string& name);
std::vector<std::string> ablation_preset_names();

// YAML document: {name: ..., axes: [{name, values: [...]}, ...]}. Values
// are either scalars for the known axes (k, resolution, maps, refinement,
// dataset, backbone, timestep, mask_fill, stage) or {label, set: <patch>}.
AblationGrid parse_ablation_grid(const std::string& text);
AblationGrid load_ablation_grid(const std::filesystem::path& path);

struct AblationResult {
  AblationGrid grid;
  std::vector<AblationCell> cells;
  std::vector<BenchmarkReport> reports;
};

// With two or more axes the last one becomes the table's columns.
std::string render_ablation_table(const AblationResult& result);
nlohmann::json ablation_to_json(const AblationResult& result, bool include_timing = true);

// Applies a JSON patch (deep merge) over a config.
PipelineConfig patch_config(const PipelineConfig& base, const nlohmann::json& patch);

}  // namespace freeseg
