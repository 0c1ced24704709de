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
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeseg/errors.hpp"
#include "freeseg/pipeline.hpp"
#include "freeseg/report.hpp"

namespace freeseg {

// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitBackend = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitData = 4;

int exit_code_for(const Error& error);

nlohmann::json segment_to_json(const SegmentResult& result);

// Writes <id>_labels.png, <id>_overlay.png, <id>_clusters.png,
// <id>_masks.json and <id>_caption.txt. Returns the paths in that order.
std::vector<std::filesystem::path> write_segment_outputs(const SegmentResult& result,
                                                         const ImageRecord& image,
                                                         const std::filesystem::path& out_dir);

// Images directly under `dir` with a PNG or JPEG extension, sorted by name.
std::vector<std::filesystem::path> list_images(const std::filesystem::path& dir);

struct CacheSummary {
  int images = 0;
  int failures = 0;
  int live_calls = 0;
};

// Runs the pipeline (without refinement) through a recording cache so that a
// later replay run with the same config needs no model. Per-image failures
// are logged to `log` and counted.
CacheSummary populate_cache(const std::vector<std::filesystem::path>& images,
                            const PipelineConfig& config, Backends live,
                            const std::vector<std::string>& classes, std::ostream& log);

// Runs every cell of the grid as a benchmark.
AblationResult run_ablation(const AblationGrid& grid, const PipelineConfig& base,
                            const BenchmarkOptions& options,
                            const std::filesystem::path& data_dir = default_data_dir());

}  // namespace freeseg
