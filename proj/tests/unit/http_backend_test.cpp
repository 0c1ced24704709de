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

#include "freeseg/http_backend.hpp"

#include <gtest/gtest.h>

#include <random>

#include "freeseg/errors.hpp"
#include "model_server.hpp"

namespace freeseg {
namespace {

TEST(Base64, KnownVectorsAndRoundTrip) {
  const std::string s = "foobar";
  EXPECT_EQ(base64_encode(s.data(), 0), "");
  EXPECT_EQ(base64_encode(s.data(), 1), "Zg==");
  EXPECT_EQ(base64_encode(s.data(), 2), "Zm8=");
  EXPECT_EQ(base64_encode(s.data(), 6), "Zm9vYmFy");
  std::mt19937 rng(1);
  for (int n = 0; n < 40; ++n) {
    std::vector<std::uint8_t> bytes(n);
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(bytes.data(), bytes.size())), bytes);
  }
  EXPECT_THROW(base64_decode("abc"), ShapeMismatch);
}

TEST(Wire, ImageAndFeatureMapRoundTrip) {
  const auto scene = testing::make_scene("cat", "c1");
  EXPECT_EQ(image_from_json(image_to_json(scene.image)), scene.image);

  FeatureMap m;
  m.native_resolution = 2;
  m.kind = MapKind::kAttention;
  m.block = 3;
  m.tensor = Tensor{{2, 2, 2}, {0.5f, -1, 3, 4, 5, 6, 7, -0.0f}};
  const auto back = feature_map_from_json(feature_map_to_json(m));
  EXPECT_EQ(back.tensor.shape, m.tensor.shape);
  EXPECT_EQ(back.tensor.data, m.tensor.data);
  EXPECT_EQ(back.kind, MapKind::kAttention);
  EXPECT_EQ(back.block, 3);

  auto j = feature_map_to_json(m);
  j["shape"] = {3, 2, 2};
  EXPECT_THROW(feature_map_from_json(j), ShapeMismatch);
}

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    synthetic_ = std::make_shared<testing::SyntheticBackend>();
    scene_ = testing::make_scene("dog", "dog");
    synthetic_->add_scene(scene_);
    server_ = std::make_unique<testing::ModelServer>(synthetic_);
  }
  std::shared_ptr<testing::SyntheticBackend> synthetic_;
  testing::Scene scene_;
  std::unique_ptr<testing::ModelServer> server_;
};

TEST_F(HttpTest, MatchesTheInProcessBackend) {
  HttpBackend http(server_->url() + "/", 10);
  FeatureRequest req;
  req.resolutions = {16, 32};
  req.include_attention = true;
  const auto remote = extract_features(&http, scene_.image, req);
  const auto local = extract_features(synthetic_.get(), scene_.image, req);
  EXPECT_EQ(remote.concat, local.concat);
  EXPECT_EQ(http.caption(scene_.image), synthetic_->caption(scene_.image));
  EXPECT_EQ(http.embed_text("a photo of a dog"), synthetic_->embed_text("a photo of a dog"));
  EXPECT_EQ(http.embed_image(scene_.image), synthetic_->embed_image(scene_.image));
  EXPECT_EQ(server_->requests(), 4);
}

TEST_F(HttpTest, FailuresAreBackendUnavailable) {
  HttpBackend http(server_->url(), 10);
  server_->fail_path("/v1/caption");
  EXPECT_THROW(http.caption(scene_.image), BackendUnavailable);
  server_->fail_path("");
  server_->send_garbage(true);
  EXPECT_THROW(http.embed_text("dog"), BackendUnavailable);
  EXPECT_THROW(http.extract(scene_.image, FeatureRequest{}), BackendUnavailable);
}

TEST(HttpUnreachable, ConnectionRefused) {
  // Grab a port that nothing listens on by starting and stopping a server.
  std::string url;
  {
    testing::ModelServer s(std::make_shared<testing::SyntheticBackend>());
    url = s.url();
  }
  HttpBackend http(url, 2);
  EXPECT_THROW(http.embed_text("dog"), BackendUnavailable);
}

}  // namespace
}  // namespace freeseg
