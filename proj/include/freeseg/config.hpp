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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "freeseg/assignment.hpp"
#include "freeseg/eval.hpp"
#include "freeseg/refine.hpp"

namespace freeseg {

enum class CandidateMode { kClosed, kOpen };
enum class Refinement { kCrf, kCrfPerRegion, kPamr, kNone };

std::string to_string(CandidateMode mode);
std::string to_string(MaskFill fill);
std::string to_string(Refinement refinement);
CandidateMode parse_candidate_mode(const std::string& s);
MaskFill parse_mask_fill(const std::string& s);
Refinement parse_refinement(const std::string& s);

struct DatasetConfig {
  std::string name = "voc21";
  std::filesystem::path root;
  std::filesystem::path classes;  // empty -> bundled list for the dataset
  std::filesystem::path split;
  std::filesystem::path annotations;
  std::filesystem::path image_dir;
  std::filesystem::path label_dir;
  std::filesystem::path remap;    // empty -> bundled COCO-27 remap
};

struct PipelineConfig {
  std::string backbone = "sd15";
  int timestep = 0;
  std::vector<int> resolutions{16};
  int grid_size = 32;
  bool include_attention = false;

  int k = 4;
  std::uint64_t seed = 0;
  bool standardize = true;
  int max_iters = 300;
  double tol = 1e-4;

  CandidateMode candidate_mode = CandidateMode::kClosed;
  bool use_caption = true;  // false: every dataset class is a candidate
  std::string prompt_template = "a photo of a {}";
  std::filesystem::path classes;  // closed-vocabulary class list for `segment`

  MaskFill mask_fill = MaskFill::kBlack;

  Refinement refinement = Refinement::kCrf;
  CrfParams crf;
  PamrParams pamr;

  std::string backend = "replay";  // replay | http
  std::string backend_url = "http://127.0.0.1:8765";
  double backend_timeout_s = 120.0;
  std::filesystem::path cache_root = "freeseg_cache";

  DatasetConfig dataset;
  int jobs = 1;

  // Throws ConfigError for out-of-range values.
  void validate() const;
};

// Layers a YAML (or JSON) document over `base`. Unknown keys are errors.
PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
PipelineConfig parse_config(const std::string& text, PipelineConfig base = {});

// FREESEG_CACHE overrides cache_root when set and non-empty.
void apply_environment(PipelineConfig& config);

// Round-trips through parse_config.
nlohmann::json config_to_json(const PipelineConfig& config);

// Resolved class list, remap and layout for the configured dataset.
// `data_dir` holds the bundled class lists.
DatasetSpec make_dataset_spec(const DatasetConfig& dataset, const std::filesystem::path& data_dir);

// Directory with the bundled class lists: FREESEG_DATA_DIR, or the source
// tree's data/ directory recorded at build time.
std::filesystem::path default_data_dir();

}  // namespace freeseg
