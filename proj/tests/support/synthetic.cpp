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

#include "synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "freeseg/errors.hpp"

namespace freeseg::testing {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint32_t pixel_hash(int x, int y, int c) {
  std::uint32_t h = static_cast<std::uint32_t>(x) * 73856093u ^
                    static_cast<std::uint32_t>(y) * 19349663u ^
                    static_cast<std::uint32_t>(c + 1) * 83492791u;
  h ^= h >> 13;
  h *= 0x5bd1e995u;
  h ^= h >> 15;
  return h;
}

struct Canvas {
  Scene& scene;

  void fill(int proto, auto inside) {
    for (int y = 0; y < scene.image.height; ++y)
      for (int x = 0; x < scene.image.width; ++x)
        if (inside(x, y)) scene.owner(y, x) = proto;
  }
  void rect(int proto, int x0, int x1, int y0, int y1) {
    fill(proto, [=](int x, int y) { return x >= x0 && x < x1 && y >= y0 && y < y1; });
  }
  void ellipse(int proto, double cx, double cy, double rx, double ry) {
    fill(proto, [=](int x, int y) {
      const double dx = (x - cx) / rx, dy = (y - cy) / ry;
      return dx * dx + dy * dy <= 1.0;
    });
  }
};

void paint(Scene& s) {
  for (int y = 0; y < s.image.height; ++y)
    for (int x = 0; x < s.image.width; ++x) {
      const auto& rgb = s.prototypes[s.owner(y, x)].rgb;
      for (int c = 0; c < 3; ++c) {
        const int noise = static_cast<int>(pixel_hash(x, y, c) % 13) - 6;
        s.image.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(rgb[c] + noise, 1, 255));
      }
    }
}

std::vector<std::string> content_words(const std::string& text) {
  static const std::vector<std::string> stop{"a", "an", "the", "photo", "of", "on", "in", "to"};
  std::vector<std::string> words;
  std::string w;
  std::istringstream in(text);
  while (in >> w) {
    std::string clean;
    for (unsigned char c : w)
      if (std::isalnum(c)) clean.push_back(static_cast<char>(std::tolower(c)));
    if (clean.empty() || std::find(stop.begin(), stop.end(), clean) != stop.end()) continue;
    words.push_back(clean);
  }
  return words;
}

void normalize(std::vector<float>& v) {
  double n = 0.0;
  for (float x : v) n += static_cast<double>(x) * x;
  n = std::sqrt(n);
  if (n > 0)
    for (float& x : v) x = static_cast<float>(x / n);
}

// Area-average of a per-pixel quantity over an r x r cell grid.
template <typename F>
void pool(const ImageRecord& im, int r, int channels, F per_pixel, std::vector<float>& out) {
  out.assign(static_cast<std::size_t>(channels) * r * r, 0.0f);
  std::vector<double> acc(channels);
  std::vector<double> px(channels);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) {
      const int y0 = i * im.height / r, y1 = std::max(y0 + 1, (i + 1) * im.height / r);
      const int x0 = j * im.width / r, x1 = std::max(x0 + 1, (j + 1) * im.width / r);
      std::fill(acc.begin(), acc.end(), 0.0);
      int n = 0;
      for (int y = y0; y < std::min(y1, im.height); ++y)
        for (int x = x0; x < std::min(x1, im.width); ++x) {
          per_pixel(x, y, px);
          for (int c = 0; c < channels; ++c) acc[c] += px[c];
          ++n;
        }
      for (int c = 0; c < channels; ++c)
        out[(static_cast<std::size_t>(c) * r + i) * r + j] = static_cast<float>(acc[c] / std::max(n, 1));
    }
}

}  // namespace

Scene make_scene(const std::string& name, const std::string& id) {
  Scene s;
  s.id = id;
  auto init = [&](int w, int h) {
    s.image = ImageRecord(id, h, w);
    s.owner = Grid<std::int32_t>(h, w, 0);
  };
  if (name == "bird") {
    s.caption = "A small bird perched on a branch of a tree";
    s.prototypes = {{{135, 190, 235}, "sky", 0},
                    {{40, 120, 50}, "tree", 0},
                    {{90, 60, 30}, "tree", 0},
                    {{165, 115, 60}, "branch", 0},
                    {{240, 200, 40}, "bird", 3}};
    init(120, 90);
    Canvas c{s};
    c.ellipse(1, 95, 28, 28, 26);
    c.rect(2, 88, 101, 40, 90);
    c.rect(3, 18, 92, 55, 62);
    c.ellipse(4, 44, 47, 14, 8);
    c.ellipse(4, 58, 40, 5, 5);
  } else if (name == "dog") {
    s.caption = "A dog sitting on a sofa next to a potted plant";
    s.prototypes = {{{220, 210, 180}, "wall", 0},
                    {{170, 40, 40}, "sofa", 18},
                    {{110, 90, 80}, "dog", 12},
                    {{190, 90, 50}, "potted plant", 16},
                    {{50, 150, 60}, "potted plant", 16}};
    init(100, 80);
    Canvas c{s};
    c.rect(1, 5, 70, 32, 76);
    c.ellipse(2, 35, 38, 16, 10);
    c.ellipse(2, 50, 27, 7, 7);
    c.rect(3, 78, 95, 58, 77);
    c.ellipse(4, 86, 44, 11, 15);
  } else if (name == "cat") {
    s.caption = "A cat lying on a chair in a room";
    s.prototypes = {{{200, 200, 215}, "wall", 0},
                    {{150, 120, 90}, "floor", 0},
                    {{50, 70, 160}, "chair", 9},
                    {{230, 140, 40}, "cat", 8}};
    init(96, 72);
    Canvas c{s};
    c.rect(1, 0, 96, 60, 72);
    c.rect(2, 20, 71, 40, 48);
    c.rect(2, 22, 27, 48, 70);
    c.rect(2, 64, 69, 48, 70);
    c.rect(2, 20, 27, 12, 40);
    c.ellipse(3, 48, 33, 17, 7);
    c.ellipse(3, 64, 27, 6, 6);
  } else {
    throw ConfigError("unknown synthetic scene '" + name + "'");
  }
  paint(s);
  return s;
}

Grid<std::uint8_t> voc_ground_truth(const Scene& scene) {
  const int h = scene.image.height, w = scene.image.width;
  Grid<std::uint8_t> gt(h, w, 0);
  auto label = [&](int y, int x) { return scene.prototypes[scene.owner(y, x)].voc_label; };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int l = label(y, x);
      bool edge = false;
      const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
      for (int n = 0; n < 4; ++n) {
        const int yy = y + dy[n], xx = x + dx[n];
        if (yy >= 0 && yy < h && xx >= 0 && xx < w && label(yy, xx) != l) edge = true;
      }
      gt(y, x) = edge ? 255 : static_cast<std::uint8_t>(l);
    }
  return gt;
}

void SyntheticBackend::add_scene(const Scene& scene) { scenes_.push_back(scene); }

const Scene* SyntheticBackend::find(const std::string& id) const {
  for (const auto& s : scenes_)
    if (s.id == id) return &s;
  return nullptr;
}

std::vector<float> SyntheticBackend::word_vector(const std::string& word) {
  std::mt19937_64 rng(fnv1a(word));
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<float> v(kDim);
  for (auto& x : v) x = static_cast<float>(n(rng));
  normalize(v);
  return v;
}

std::vector<FeatureMap> SyntheticBackend::extract(const ImageRecord& image,
                                                  const FeatureRequest& request) {
  std::vector<FeatureMap> maps;
  const double jitter = request.timestep / 1000.0;
  for (int r : request.resolutions) {
    FeatureMap f;
    f.native_resolution = r;
    f.kind = MapKind::kFeature;
    f.block = 0;
    const int channels = 8;
    f.tensor.shape = {channels, r, r};
    pool(image, r, channels,
         [&](int x, int y, std::vector<double>& px) {
           const double R = image.at(y, x, 0) / 255.0, G = image.at(y, x, 1) / 255.0,
                        B = image.at(y, x, 2) / 255.0;
           const double mx = std::max({R, G, B}), mn = std::min({R, G, B});
           px[0] = R;
           px[1] = G;
           px[2] = B;
           px[3] = R - G;
           px[4] = G - B;
           px[5] = 0.299 * R + 0.587 * G + 0.114 * B;
           px[6] = mx - mn;
           px[7] = jitter * ((pixel_hash(x, y, 7 + r) % 1000) / 1000.0 - 0.5);
         },
         f.tensor.data);
    maps.push_back(std::move(f));

    FeatureMap a;
    a.native_resolution = r;
    a.kind = MapKind::kAttention;
    a.block = 1;
    a.tensor.shape = {3, r, r};
    pool(image, r, 3,
         [&](int x, int y, std::vector<double>& px) {
           px[0] = static_cast<double>(x) / image.width;
           px[1] = static_cast<double>(y) / image.height;
           px[2] = (image.at(y, x, 0) + image.at(y, x, 1) + image.at(y, x, 2)) / 765.0;
         },
         a.tensor.data);
    maps.push_back(std::move(a));
  }
  return maps;
}

std::string SyntheticBackend::caption(const ImageRecord& image) {
  if (const Scene* s = find(image.id)) return s->caption;
  return "A picture of a thing";
}

std::vector<float> SyntheticBackend::embed_text(const std::string& text) {
  std::vector<float> v(kDim, 0.0f);
  const auto words = content_words(text);
  for (const auto& w : words) {
    const auto wv = word_vector(w);
    for (int i = 0; i < kDim; ++i) v[i] += wv[i];
  }
  if (words.empty()) v = word_vector("nothing");
  normalize(v);
  return v;
}

std::vector<float> SyntheticBackend::embed_image(const ImageRecord& image) {
  const Scene* s = find(image.id);
  std::vector<float> v(kDim, 0.0f);
  if (!s) return embed_text("thing");
  std::vector<std::size_t> counts(s->prototypes.size(), 0);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const int r = image.at(y, x, 0), g = image.at(y, x, 1), b = image.at(y, x, 2);
      if (r == 0 && g == 0 && b == 0) continue;  // masked out
      std::size_t best = 0;
      int best_d = 1 << 30;
      for (std::size_t p = 0; p < s->prototypes.size(); ++p) {
        const auto& c = s->prototypes[p].rgb;
        const int d = (r - c[0]) * (r - c[0]) + (g - c[1]) * (g - c[1]) + (b - c[2]) * (b - c[2]);
        if (d < best_d) {
          best_d = d;
          best = p;
        }
      }
      ++counts[best];
    }
  for (std::size_t p = 0; p < counts.size(); ++p) {
    if (!counts[p]) continue;
    const auto tv = embed_text(s->prototypes[p].concept_text);
    for (int i = 0; i < kDim; ++i) v[i] += static_cast<float>(counts[p]) * tv[i];
  }
  normalize(v);
  if (std::all_of(v.begin(), v.end(), [](float x) { return x == 0.0f; })) return embed_text("nothing");
  return v;
}

Backends synthetic_backends(std::shared_ptr<SyntheticBackend> backend) {
  return Backends{backend, backend, backend};
}

}  // namespace freeseg::testing
