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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "freeseg/grid.hpp"

namespace freeseg {

// Confusion counts, rows = ground truth, columns = prediction.
class EvalAccumulator {
 public:
  explicit EvalAccumulator(int num_classes, int ignore_index = 255);

  int num_classes() const { return num_classes_; }
  int ignore_index() const { return ignore_index_; }

  // Throws ShapeMismatch when the maps differ in size and UnknownLabel for
  // a non-ignored value outside [0, num_classes).
  void update(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred);
  void merge(const EvalAccumulator& other);

  std::uint64_t at(int gt, int pred) const {
    return confusion_[static_cast<std::size_t>(gt) * num_classes_ + pred];
  }
  std::uint64_t total() const;
  const std::vector<std::uint64_t>& confusion() const { return confusion_; }

  // nullopt for classes absent from both maps (TP + FP + FN == 0).
  std::vector<std::optional<double>> per_class_iou() const;
  // Mean over present classes, background included. Throws EmptyAccumulator.
  double miou() const;
  double pixel_accuracy() const;

 private:
  int num_classes_;
  int ignore_index_;
  std::vector<std::uint64_t> confusion_;
};

// COCO run-length encoding: column-major runs starting with zeros.
struct Rle {
  int height = 0;
  int width = 0;
  std::vector<std::uint32_t> counts;

  bool operator==(const Rle&) const = default;
};

Rle rle_encode(const Grid<std::uint8_t>& mask);
// Throws CorruptRle when the runs do not cover exactly H*W pixels.
Grid<std::uint8_t> rle_decode(const Rle& rle);
// Compressed "counts" strings as used by COCO annotation files.
std::string rle_to_string(const Rle& rle);
Rle rle_from_string(const std::string& counts, int height, int width);
// Polygon [x0, y0, x1, y1, ...] rasterised the way the COCO tools do.
Rle rle_from_polygon(const std::vector<double>& xy, int height, int width);

enum class DatasetKind { kVoc21, kVocC, kCoco81, kCoco27, kCustom };

DatasetKind parse_dataset_kind(const std::string& name);
std::string to_string(DatasetKind kind);

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kVoc21;
  std::filesystem::path root;
  std::vector<std::string> classes;        // [0] == "unlabeled"
  std::filesystem::path split_file;        // image ids, one per line
  std::filesystem::path annotation_file;   // COCO JSON
  std::filesystem::path image_dir;         // defaults per dataset kind
  std::filesystem::path label_dir;         // VOC-style label PNGs
  std::map<std::string, std::string> remap;  // fine class -> supercategory
};

// Dataset access: ids in evaluation order, images and ground truth in the
// dataset's class space.
class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual const DatasetSpec& spec() const = 0;
  virtual std::vector<std::string> image_ids() const = 0;
  virtual std::filesystem::path image_path(const std::string& id) const = 0;
  // Throws MissingAnnotation / CorruptRle.
  virtual SegmentationMap load_ground_truth(const std::string& id) const = 0;
};

std::unique_ptr<Dataset> open_dataset(const DatasetSpec& spec);

std::vector<std::string> read_split_file(const std::filesystem::path& path);

}  // namespace freeseg
