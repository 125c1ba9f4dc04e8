// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "motionlab/errors.hpp"
#include "motionlab/metrics.hpp"

using namespace motionlab;
namespace fs = std::filesystem;

namespace {

VideoTensor static_clip(int F, int H, int W, float value) {
  VideoTensor v({F, 3, H, W});
  v.fill(value);
  return v;
}

SceneSpec centered_spec(Shape shape, int color, int bg, Motion motion, double speed, int H,
                        int W) {
  SceneSpec s;
  s.shape = shape;
  s.fill_color = color;
  s.background_color = bg;
  s.size = 0.3;
  s.motion = motion;
  s.speed = speed;
  s.start_x = W / 2.0;
  s.start_y = H / 2.0;
  return s;
}

}  // namespace

TEST_CASE("embedder determinism and sanity") {
  RandomProjectionEmbedder a(3, 0), b(3, 0), c(3, 1);
  Rng rng(1);
  const Tensor frame = rng.randn({3, 16, 16});
  const auto ea = a.embed(frame);
  CHECK(ea.size() == 16u * 16u);  // 4x4 patches of a 16x16 frame, 16 dims each
  CHECK(ea == b.embed(frame));
  CHECK(ea != c.embed(frame));
  CHECK(squared_distance(ea, ea) == 0.0);
  const auto eb = a.embed(rng.randn({3, 16, 16}));
  CHECK(squared_distance(ea, eb) == doctest::Approx(squared_distance(eb, ea)));
  CHECK(squared_distance(ea, eb) > 0.0);
}

TEST_CASE("temporal consistency is zero for a static clip") {
  RandomProjectionEmbedder emb;
  const VideoTensor v = static_clip(5, 16, 16, 0.25f);
  CHECK(temporal_consistency(v, emb) == doctest::Approx(0.0));

  Rng rng(2);
  CHECK(temporal_consistency(rng.randn({5, 3, 16, 16}), emb) > 0.0);
}

TEST_CASE("diversity is invariant to duplicating the sample set") {
  RandomProjectionEmbedder emb;
  Rng rng(3);
  std::vector<VideoTensor> set = {rng.randn({3, 3, 16, 16}), rng.randn({3, 3, 16, 16}),
                                  rng.randn({3, 3, 16, 16})};
  const double d1 = diversity(set, emb);
  CHECK(d1 > 0.0);
  std::vector<VideoTensor> doubled = set;
  doubled.insert(doubled.end(), set.begin(), set.end());
  CHECK(diversity(doubled, emb) == doctest::Approx(d1));
  CHECK(diversity({set[0], set[0]}, emb) == doctest::Approx(0.0));
}

TEST_CASE("centroid tracker stays within half a pixel of the oracle") {
  const int F = 8, H = 32, W = 32;
  for (int m = 0; m < kNumMotions; ++m) {
    const Motion motion = static_cast<Motion>(m);
    double speed = 1.0;
    if (motion == Motion::Grow) speed = 1.05;
    if (motion == Motion::Shrink) speed = 0.95;
    SceneSpec s = centered_spec(Shape::Square, 0, 2, motion, speed, H, W);
    const VideoTensor v = render_scene(s, F, H, W);
    const ScenePath path = scene_path(s, F, H, W);
    const Trajectory t = track_centroid(v, s.background_color);
    REQUIRE(t.frames() == F);
    for (int f = 0; f < F; ++f) {
      INFO("motion ", m, " frame ", f);
      CHECK(std::abs(t.cx[static_cast<size_t>(f)] - path.cx[static_cast<size_t>(f)]) <= 0.5);
      CHECK(std::abs(t.cy[static_cast<size_t>(f)] - path.cy[static_cast<size_t>(f)]) <= 0.5);
      CHECK(t.area[static_cast<size_t>(f)] > 0.0);
    }
  }
}

TEST_CASE("tracker rejects an empty first frame and carries later gaps") {
  const VideoTensor blank = static_clip(3, 16, 16, -1.0f);
  CHECK_THROWS_AS(track_centroid(blank, std::array<float, 3>{-1.0f, -1.0f, -1.0f}), OracleError);

  // shape present in frame 0 only
  SceneSpec s = centered_spec(Shape::Square, 0, 2, Motion::Right, 0.0, 16, 16);
  VideoTensor v = render_scene(s, 3, 16, 16);
  float bg[3];
  palette_rgb(2, bg);
  for (int f = 1; f < 3; ++f)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) v.at4(f, c, y, x) = bg[c];
  const Trajectory t = track_centroid(v, 2);
  CHECK(t.area[1] == 0.0);
  CHECK(t.cx[1] == doctest::Approx(t.cx[0]));
  CHECK(t.cy[2] == doctest::Approx(t.cy[0]));
}

TEST_CASE("estimate_background recovers the border color") {
  SceneSpec s = centered_spec(Shape::Circle, 4, 1, Motion::Right, 0.0, 32, 32);
  const VideoTensor v = render_scene(s, 2, 32, 32);
  const auto bg = estimate_background(v);
  float expect[3];
  palette_rgb(1, expect);
  for (int c = 0; c < 3; ++c) CHECK(bg[static_cast<size_t>(c)] == doctest::Approx(expect[c]));
}

TEST_CASE("log-area slope sign matches growth direction") {
  const int F = 8, H = 32, W = 32;
  SceneSpec g = centered_spec(Shape::Square, 0, 2, Motion::Grow, 1.05, H, W);
  SceneSpec k = centered_spec(Shape::Square, 0, 2, Motion::Shrink, 0.95, H, W);
  SceneSpec r = centered_spec(Shape::Square, 0, 2, Motion::Right, 1.0, H, W);
  CHECK(log_area_slope(track_centroid(render_scene(g, F, H, W), 2)) > 0.0);
  CHECK(log_area_slope(track_centroid(render_scene(k, F, H, W), 2)) < 0.0);
  CHECK(std::abs(log_area_slope(track_centroid(render_scene(r, F, H, W), 2))) < 0.02);
}

TEST_CASE("motion fidelity: self is perfect, opposite is negated") {
  const int F = 8, H = 32, W = 32;
  SceneSpec ref = centered_spec(Shape::Square, 0, 2, Motion::Right, 1.0, H, W);
  const VideoTensor same = render_scene(ref, F, H, W);
  const MotionFidelity self = motion_fidelity(same, ref, F, H, W);
  CHECK(self.direction_cosine == doctest::Approx(1.0).epsilon(0.02));
  CHECK(self.speed_ratio == doctest::Approx(1.0).epsilon(0.1));

  SceneSpec left = centered_spec(Shape::Square, 0, 2, Motion::Left, 1.0, H, W);
  const MotionFidelity opp = motion_fidelity(render_scene(left, F, H, W), ref, F, H, W);
  CHECK(opp.direction_cosine == doctest::Approx(-1.0).epsilon(0.02));

  SceneSpec up = centered_spec(Shape::Square, 0, 2, Motion::Up, 1.0, H, W);
  const MotionFidelity orth = motion_fidelity(render_scene(up, F, H, W), ref, F, H, W);
  CHECK(std::abs(orth.direction_cosine) <= 0.1);

  // growth compares log-area slopes by sign
  SceneSpec grow = centered_spec(Shape::Square, 0, 2, Motion::Grow, 1.05, H, W);
  const MotionFidelity gg = motion_fidelity(render_scene(grow, F, H, W), grow, F, H, W);
  CHECK(gg.direction_cosine == doctest::Approx(1.0));
  SceneSpec shrink = centered_spec(Shape::Square, 0, 2, Motion::Shrink, 0.95, H, W);
  const MotionFidelity gs = motion_fidelity(render_scene(shrink, F, H, W), grow, F, H, W);
  CHECK(gs.direction_cosine == doctest::Approx(-1.0));
}

TEST_CASE("appearance classification across shapes, colors and sizes") {
  const int F = 4, H = 32, W = 32;
  for (int shape = 0; shape < kNumShapes; ++shape)
    for (int color = 0; color < kNumColors; ++color)
      for (double size : {0.2, 0.3, 0.4}) {
        const int bg = (color + 1) % kNumColors;
        SceneSpec s = centered_spec(static_cast<Shape>(shape), color, bg, Motion::Right, 0.0, H, W);
        s.size = size;
        const VideoTensor v = render_scene(s, F, H, W);
        INFO("shape ", shape, " color ", color, " size ", size);
        const AppearanceResult r = appearance_accuracy(v, static_cast<Shape>(shape), color);
        CHECK(r.color_match);
        CHECK(r.shape_match);
        const auto cls = classify_shape(v);
        REQUIRE(cls.has_value());
        CHECK(*cls == static_cast<Shape>(shape));
        const auto col = classify_color(v);
        REQUIRE(col.has_value());
        CHECK(*col == color);
      }
  // wrong expectations fail
  SceneSpec s = centered_spec(Shape::Circle, 2, 0, Motion::Right, 0.0, H, W);
  const VideoTensor v = render_scene(s, F, H, W);
  const AppearanceResult r = appearance_accuracy(v, Shape::Square, 1);
  CHECK_FALSE(r.color_match);
  CHECK_FALSE(r.shape_match);
}

TEST_CASE("metrics CSV layout") {
  MetricsRow row;
  row.run = "demo";
  row.prompt = "a red square, moving right";
  row.seed = 7;
  row.temporal_consistency = 0.5;
  row.diversity = 0.25;
  row.direction_cosine = 0.9;
  row.speed_ratio = 1.1;
  row.color_match = 1;
  row.shape_match = 0;
  const std::string path = (fs::temp_directory_path() / "motionlab_metrics.csv").string();
  write_metrics_csv(path, {row});

  std::ifstream f(path);
  std::string header, line;
  std::getline(f, header);
  CHECK(header == std::string(kMetricsCsvHeader));
  REQUIRE(std::getline(f, line));
  CHECK(line.rfind("demo,", 0) == 0);
  CHECK(line.find("a red square; moving right") != std::string::npos);  // comma sanitized
  CHECK(line.find(",7,") != std::string::npos);
  CHECK(std::count(line.begin(), line.end(), ',') ==
        std::count(header.begin(), header.end(), ','));
  fs::remove(path);
}
