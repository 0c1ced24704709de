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

#include "freeseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unordered_map>

#include "freeseg/errors.hpp"
#include "freeseg/image.hpp"

namespace freeseg {

using nlohmann::json;
namespace fs = std::filesystem;

EvalAccumulator::EvalAccumulator(int num_classes, int ignore_index)
    : num_classes_(num_classes), ignore_index_(ignore_index) {
  if (num_classes < 1) throw ConfigError("accumulator needs at least one class");
  confusion_.assign(static_cast<std::size_t>(num_classes) * num_classes, 0);
}

void EvalAccumulator::update(const Grid<std::int32_t>& gt, const Grid<std::int32_t>& pred) {
  if (gt.height != pred.height || gt.width != pred.width)
    throw ShapeMismatch("ground truth is " + std::to_string(gt.height) + "x" +
                        std::to_string(gt.width) + ", prediction is " +
                        std::to_string(pred.height) + "x" + std::to_string(pred.width));
  // Validate first so a bad map leaves the counts untouched.
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt.data[i];
    if (g == ignore_index_) continue;
    const int p = pred.data[i];
    if (g < 0 || g >= num_classes_)
      throw UnknownLabel("ground-truth label " + std::to_string(g) + " outside [0, " +
                         std::to_string(num_classes_) + ")");
    if (p < 0 || p >= num_classes_)
      throw UnknownLabel("predicted label " + std::to_string(p) + " outside [0, " +
                         std::to_string(num_classes_) + ")");
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int g = gt.data[i];
    if (g == ignore_index_) continue;
    ++confusion_[static_cast<std::size_t>(g) * num_classes_ + pred.data[i]];
  }
}

void EvalAccumulator::merge(const EvalAccumulator& other) {
  if (other.num_classes_ != num_classes_)
    throw ShapeMismatch("cannot merge accumulators over different class counts");
  for (std::size_t i = 0; i < confusion_.size(); ++i) confusion_[i] += other.confusion_[i];
}

std::uint64_t EvalAccumulator::total() const {
  std::uint64_t n = 0;
  for (auto v : confusion_) n += v;
  return n;
}

std::vector<std::optional<double>> EvalAccumulator::per_class_iou() const {
  std::vector<std::optional<double>> iou(num_classes_);
  for (int c = 0; c < num_classes_; ++c) {
    std::uint64_t row = 0, col = 0;
    for (int j = 0; j < num_classes_; ++j) {
      row += at(c, j);
      col += at(j, c);
    }
    const std::uint64_t tp = at(c, c);
    const std::uint64_t uni = row + col - tp;
    if (uni > 0) iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  return iou;
}

double EvalAccumulator::miou() const {
  if (total() == 0) throw EmptyAccumulator("no scored pixels");
  double sum = 0.0;
  int n = 0;
  for (const auto& v : per_class_iou())
    if (v) {
      sum += *v;
      ++n;
    }
  return sum / n;
}

double EvalAccumulator::pixel_accuracy() const {
  const std::uint64_t t = total();
  if (t == 0) throw EmptyAccumulator("no scored pixels");
  std::uint64_t trace = 0;
  for (int c = 0; c < num_classes_; ++c) trace += at(c, c);
  return static_cast<double>(trace) / static_cast<double>(t);
}

Rle rle_encode(const Grid<std::uint8_t>& mask) {
  Rle rle{mask.height, mask.width, {}};
  std::uint8_t prev = 0;
  std::uint32_t run = 0;
  for (int x = 0; x < mask.width; ++x)
    for (int y = 0; y < mask.height; ++y) {
      const std::uint8_t v = mask(y, x) ? 1 : 0;
      if (v != prev) {
        rle.counts.push_back(run);
        run = 0;
        prev = v;
      }
      ++run;
    }
  rle.counts.push_back(run);
  return rle;
}

Grid<std::uint8_t> rle_decode(const Rle& rle) {
  if (rle.height < 0 || rle.width < 0) throw CorruptRle("negative canvas size");
  const std::uint64_t area = static_cast<std::uint64_t>(rle.height) * rle.width;
  std::uint64_t sum = 0;
  for (auto c : rle.counts) sum += c;
  if (sum != area)
    throw CorruptRle("runs cover " + std::to_string(sum) + " pixels, canvas has " +
                     std::to_string(area));
  Grid<std::uint8_t> mask(rle.height, rle.width, 0);
  std::uint64_t pos = 0;
  std::uint8_t value = 0;
  for (auto c : rle.counts) {
    for (std::uint32_t k = 0; k < c; ++k, ++pos) {
      const int x = static_cast<int>(pos / rle.height);
      const int y = static_cast<int>(pos % rle.height);
      mask(y, x) = value;
    }
    value ^= 1;
  }
  return mask;
}

std::string rle_to_string(const Rle& rle) {
  std::string s;
  const auto& cnts = rle.counts;
  for (std::size_t i = 0; i < cnts.size(); ++i) {
    long long x = cnts[i];
    if (i > 2) x -= static_cast<long long>(cnts[i - 2]);
    bool more = true;
    while (more) {
      long long c = x & 0x1f;
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

Rle rle_from_string(const std::string& counts, int height, int width) {
  Rle rle{height, width, {}};
  std::size_t p = 0;
  while (p < counts.size()) {
    long long x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= counts.size()) throw CorruptRle("truncated counts string");
      const long long c = static_cast<long long>(counts[p]) - 48;
      if (c < 0 || c > 63) throw CorruptRle("invalid character in counts string");
      x |= (c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= -1LL << (5 * k);
    }
    if (rle.counts.size() > 2) x += static_cast<long long>(rle.counts[rle.counts.size() - 2]);
    if (x < 0 || x > 0xffffffffLL) throw CorruptRle("run length out of range");
    rle.counts.push_back(static_cast<std::uint32_t>(x));
  }
  std::uint64_t sum = 0;
  for (auto c : rle.counts) sum += c;
  if (sum != static_cast<std::uint64_t>(height) * static_cast<std::uint64_t>(width))
    throw CorruptRle("runs cover " + std::to_string(sum) + " pixels, canvas has " +
                     std::to_string(static_cast<std::uint64_t>(height) * width));
  return rle;
}

Rle rle_from_polygon(const std::vector<double>& xy, int height, int width) {
  const std::size_t k = xy.size() / 2;
  const double scale = 5.0;
  const long h = height, w = width;
  if (k == 0) return Rle{height, width, {static_cast<std::uint32_t>(h * w)}};

  // Dense boundary points at 5x resolution.
  std::vector<int> x(k + 1), y(k + 1);
  for (std::size_t j = 0; j < k; ++j) x[j] = static_cast<int>(scale * xy[2 * j] + 0.5);
  for (std::size_t j = 0; j < k; ++j) y[j] = static_cast<int>(scale * xy[2 * j + 1] + 0.5);
  x[k] = x[0];
  y[k] = y[0];
  std::vector<int> u, v;
  for (std::size_t j = 0; j < k; ++j) {
    int xs = x[j], xe = x[j + 1], ys = y[j], ye = y[j + 1];
    const int dx = std::abs(xe - xs), dy = std::abs(ys - ye);
    const bool flip = (dx >= dy && xs > xe) || (dx < dy && ys > ye);
    if (flip) {
      std::swap(xs, xe);
      std::swap(ys, ye);
    }
    const double s = dx >= dy ? static_cast<double>(ye - ys) / dx
                              : static_cast<double>(xe - xs) / dy;
    if (dx >= dy) {
      for (int d = 0; d <= dx; ++d) {
        const int t = flip ? dx - d : d;
        u.push_back(t + xs);
        v.push_back(static_cast<int>(ys + s * t + 0.5));
      }
    } else {
      for (int d = 0; d <= dy; ++d) {
        const int t = flip ? dy - d : d;
        v.push_back(t + ys);
        u.push_back(static_cast<int>(xs + s * t + 0.5));
      }
    }
  }

  // Column crossings back at pixel resolution.
  std::vector<long> bx, by;
  for (std::size_t j = 1; j < u.size(); ++j) {
    if (u[j] == u[j - 1]) continue;
    double xd = static_cast<double>(u[j] < u[j - 1] ? u[j] : u[j] - 1);
    xd = (xd + 0.5) / scale - 0.5;
    if (std::floor(xd) != xd || xd < 0 || xd > w - 1) continue;
    double yd = static_cast<double>(v[j] < v[j - 1] ? v[j] : v[j - 1]);
    yd = (yd + 0.5) / scale - 0.5;
    if (yd < 0)
      yd = 0;
    else if (yd > h)
      yd = h;
    yd = std::ceil(yd);
    bx.push_back(static_cast<long>(xd));
    by.push_back(static_cast<long>(yd));
  }

  std::vector<std::uint32_t> a;
  for (std::size_t j = 0; j < bx.size(); ++j)
    a.push_back(static_cast<std::uint32_t>(bx[j] * h + by[j]));
  a.push_back(static_cast<std::uint32_t>(h * w));
  std::sort(a.begin(), a.end());
  std::uint32_t prev = 0;
  for (auto& t : a) {
    const std::uint32_t cur = t;
    t -= prev;
    prev = cur;
  }
  std::vector<std::uint32_t> b;
  std::size_t j = 0;
  b.push_back(a[j++]);
  while (j < a.size()) {
    if (a[j] > 0) {
      b.push_back(a[j++]);
    } else {
      ++j;
      if (j < a.size()) b.back() += a[j++];
    }
  }
  return Rle{height, width, std::move(b)};
}

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "voc21") return DatasetKind::kVoc21;
  if (name == "voc-c") return DatasetKind::kVocC;
  if (name == "coco81") return DatasetKind::kCoco81;
  if (name == "coco27") return DatasetKind::kCoco27;
  if (name == "custom") return DatasetKind::kCustom;
  throw ConfigError("unknown dataset '" + name + "' (voc21, voc-c, coco81, coco27, custom)");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::kVoc21: return "voc21";
    case DatasetKind::kVocC: return "voc-c";
    case DatasetKind::kCoco81: return "coco81";
    case DatasetKind::kCoco27: return "coco27";
    case DatasetKind::kCustom: return "custom";
  }
  return "custom";
}

std::vector<std::string> read_split_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read split file " + path.string());
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    ids.push_back(line.substr(b, e - b + 1));
  }
  return ids;
}

namespace {

void check_classes(const DatasetSpec& spec) {
  if (spec.classes.empty() || spec.classes[0] != "unlabeled")
    throw ConfigError("dataset class list must start with 'unlabeled'");
}

class VocDataset : public Dataset {
 public:
  explicit VocDataset(DatasetSpec spec) : spec_(std::move(spec)) {
    check_classes(spec_);
    if (spec_.image_dir.empty()) spec_.image_dir = spec_.root / "JPEGImages";
    if (spec_.label_dir.empty()) spec_.label_dir = spec_.root / "SegmentationClass";
    if (spec_.split_file.empty())
      spec_.split_file = spec_.root / "ImageSets" / "Segmentation" / "val.txt";
  }

  const DatasetSpec& spec() const override { return spec_; }

  std::vector<std::string> image_ids() const override { return read_split_file(spec_.split_file); }

  fs::path image_path(const std::string& id) const override {
    for (const char* ext : {".jpg", ".png", ".jpeg"}) {
      fs::path p = spec_.image_dir / (id + ext);
      if (fs::exists(p)) return p;
    }
    throw IoError("no image for '" + id + "' under " + spec_.image_dir.string());
  }

  SegmentationMap load_ground_truth(const std::string& id) const override {
    const fs::path p = spec_.label_dir / (id + ".png");
    if (!fs::exists(p)) throw MissingAnnotation("no label map " + p.string());
    const auto raw = read_label_png(p);
    SegmentationMap seg;
    seg.palette = spec_.classes;
    seg.labels = Grid<std::int32_t>(raw.height, raw.width);
    for (std::size_t i = 0; i < raw.size(); ++i) seg.labels.data[i] = raw.data[i];
    return seg;
  }

 private:
  DatasetSpec spec_;
};

class CocoDataset : public Dataset {
 public:
  explicit CocoDataset(DatasetSpec spec) : spec_(std::move(spec)) {
    check_classes(spec_);
    if (spec_.annotation_file.empty()) spec_.annotation_file = spec_.root / "annotations.json";
    if (spec_.image_dir.empty()) spec_.image_dir = spec_.root / "images";
    std::ifstream in(spec_.annotation_file);
    if (!in) throw MissingAnnotation("cannot read " + spec_.annotation_file.string());
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw IoError("malformed annotation file " + spec_.annotation_file.string() + ": " +
                    e.what());
    }
    for (std::size_t i = 0; i < spec_.classes.size(); ++i) class_index_[spec_.classes[i]] = i;

    for (const auto& c : doc.value("categories", json::array())) {
      const int cid = c.at("id").get<int>();
      category_name_[cid] = c.at("name").get<std::string>();
      category_super_[cid] = c.value("supercategory", std::string());
    }
    for (const auto& im : doc.value("images", json::array())) {
      ImageInfo info;
      info.coco_id = im.at("id").get<long long>();
      info.file_name = im.at("file_name").get<std::string>();
      info.height = im.at("height").get<int>();
      info.width = im.at("width").get<int>();
      const std::string id = fs::path(info.file_name).stem().string();
      by_coco_id_[info.coco_id] = id;
      order_.push_back(id);
      images_[id] = std::move(info);
    }
    for (const auto& a : doc.value("annotations", json::array())) {
      const long long img = a.at("image_id").get<long long>();
      auto it = by_coco_id_.find(img);
      if (it == by_coco_id_.end()) continue;
      images_[it->second].annotations.push_back(a);
    }
  }

  const DatasetSpec& spec() const override { return spec_; }

  std::vector<std::string> image_ids() const override {
    if (!spec_.split_file.empty()) return read_split_file(spec_.split_file);
    return order_;
  }

  fs::path image_path(const std::string& id) const override {
    return spec_.image_dir / info(id).file_name;
  }

  SegmentationMap load_ground_truth(const std::string& id) const override {
    const ImageInfo& im = info(id);
    SegmentationMap seg;
    seg.palette = spec_.classes;
    seg.labels = Grid<std::int32_t>(im.height, im.width, 0);
    for (const auto& a : im.annotations) {
      const int cls = class_of(a.at("category_id").get<int>());
      const auto mask = rasterize(a.at("segmentation"), im.height, im.width);
      for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask.data[i]) seg.labels.data[i] = cls;
    }
    return seg;
  }

 private:
  struct ImageInfo {
    long long coco_id = 0;
    std::string file_name;
    int height = 0;
    int width = 0;
    std::vector<json> annotations;
  };

  const ImageInfo& info(const std::string& id) const {
    auto it = images_.find(id);
    if (it == images_.end())
      throw MissingAnnotation("'" + id + "' is not in " + spec_.annotation_file.string());
    return it->second;
  }

  // Fine category first; the coarse set goes through the remap table and
  // falls back to the category's own supercategory.
  int class_of(int category_id) const {
    auto nit = category_name_.find(category_id);
    if (nit == category_name_.end())
      throw UnknownLabel("annotation uses undeclared category id " + std::to_string(category_id));
    std::string name = nit->second;
    if (spec_.kind == DatasetKind::kCoco27) {
      auto rit = spec_.remap.find(name);
      if (rit != spec_.remap.end())
        name = rit->second;
      else if (!category_super_.at(category_id).empty())
        name = category_super_.at(category_id);
    }
    auto cit = class_index_.find(name);
    if (cit == class_index_.end())
      throw UnknownLabel("category '" + name + "' is not in the dataset class list");
    return static_cast<int>(cit->second);
  }

  static Grid<std::uint8_t> rasterize(const json& seg, int height, int width) {
    if (seg.is_array()) {
      Grid<std::uint8_t> mask(height, width, 0);
      for (const auto& poly : seg) {
        const auto part = rle_decode(rle_from_polygon(poly.get<std::vector<double>>(), height, width));
        for (std::size_t i = 0; i < mask.size(); ++i) mask.data[i] |= part.data[i];
      }
      return mask;
    }
    if (seg.is_object() && seg.contains("counts")) {
      const auto& size = seg.at("size");
      const int h = size.at(0).get<int>(), w = size.at(1).get<int>();
      if (h != height || w != width)
        throw CorruptRle("RLE size " + std::to_string(h) + "x" + std::to_string(w) +
                         " does not match the image");
      const auto& counts = seg.at("counts");
      Rle rle;
      if (counts.is_string())
        rle = rle_from_string(counts.get<std::string>(), h, w);
      else
        rle = Rle{h, w, counts.get<std::vector<std::uint32_t>>()};
      return rle_decode(rle);
    }
    throw CorruptRle("unrecognised segmentation encoding");
  }

  DatasetSpec spec_;
  std::unordered_map<std::string, std::size_t> class_index_;
  std::unordered_map<int, std::string> category_name_;
  std::unordered_map<int, std::string> category_super_;
  std::unordered_map<long long, std::string> by_coco_id_;
  std::unordered_map<std::string, ImageInfo> images_;
  std::vector<std::string> order_;
};

}  // namespace

std::unique_ptr<Dataset> open_dataset(const DatasetSpec& spec) {
  switch (spec.kind) {
    case DatasetKind::kVoc21:
    case DatasetKind::kVocC:
    case DatasetKind::kCustom:
      return std::make_unique<VocDataset>(spec);
    case DatasetKind::kCoco81:
    case DatasetKind::kCoco27:
      return std::make_unique<CocoDataset>(spec);
  }
  throw ConfigError("unsupported dataset kind");
}

}  // namespace freeseg
