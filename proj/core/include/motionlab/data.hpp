// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "motionlab/tensor.hpp"

namespace motionlab {

/// A clip of F frames, each C x H x W, values in [-1, 1]; stored (F, C, H, W).
using VideoTensor = Tensor;

enum class Shape { Square, Circle, Triangle };
enum class Motion { Right, Left, Up, Down, DiagUR, DiagDL, Grow, Shrink, BounceH };

constexpr int kNumShapes = 3;
constexpr int kNumMotions = 9;
constexpr int kNumColors = 6;

const char* shape_name(Shape s);
const char* color_name(int c);
const char* motion_phrase(Motion m);
/// Palette color c as RGB in [-1, 1].
void palette_rgb(int c, float rgb[3]);

/// Synthetic-world scene description: ground truth for appearance and motion.
struct SceneSpec {
  Shape shape = Shape::Square;
  int fill_color = 0;        // palette index
  int background_color = 1;  // palette index, != fill
  double size = 0.3;         // fraction of min(H, W), in [0.2, 0.4]
  Motion motion = Motion::Right;
  double speed = 1.0;        // px/frame, or scale-factor/frame for grow/shrink
  double start_x = 0.0;      // centroid, pixels
  double start_y = 0.0;
};

/// Per-frame analytic centroid and size (px) for a spec.
struct ScenePath {
  std::vector<double> cx, cy, size;
};
ScenePath scene_path(const SceneSpec& spec, int F, int H, int W);

/// Hard-edged rasterization; frame f places the shape on the analytic path.
/// Throws ConfigError if a non-bounce motion would exit the frame.
VideoTensor render_scene(const SceneSpec& spec, int F, int H, int W);

/// Full caption (motion verbs + appearance nouns) and its appearance-only cut.
struct PromptPair {
  std::string full;     // y
  std::string spatial;  // y_S
};
PromptPair caption(const SceneSpec& spec);

struct HoldoutRule {
  std::vector<Motion> excluded_motions;
  /// Excluded (appearance, motion) pairings: {fill color, shape, motion}.
  struct Pair {
    int color;
    Shape shape;
    Motion motion;
  };
  std::vector<Pair> excluded_pairs;

  bool motion_allowed(Motion m) const;
  bool allowed(const SceneSpec& s) const;
};

struct CorpusItem {
  SceneSpec spec;
  VideoTensor video;
  PromptPair prompts;
};

struct Corpus {
  std::vector<CorpusItem> items;
  HoldoutRule holdout;
};

/// i.i.d. scene sampling with rejection of held-out combinations;
/// deterministic from seed.
Corpus make_corpus(int n, std::uint64_t seed, const HoldoutRule& holdout, int F, int H, int W);
/// Samples a single valid scene (ignoring holdout rules if null).
SceneSpec sample_scene(Rng& rng, const HoldoutRule* holdout, int F, int H, int W);

// --- video I/O ---

/// Native container: magic "VTEN", u32 LE F,C,H,W, then float32 frames.
void save_vten(const VideoTensor& video, const std::string& path);
VideoTensor load_vten(const std::string& path);

/// Loads either a .vten file or a directory of zero-padded numbered image
/// frames (PPM P6 or PNG), mapped linearly to [-1, 1].
VideoTensor load_video_frames(const std::string& path);
/// Writes 8-bit frames (one image per frame) into a directory.
void save_frames_png(const VideoTensor& video, const std::string& dir);
void save_frames_ppm(const VideoTensor& video, const std::string& dir);

}  // namespace motionlab
