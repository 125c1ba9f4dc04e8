// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "motionlab/data.hpp"

namespace motionlab {

/// Pluggable frame -> feature-vector interface. Implementations must be
/// deterministic, with distance(a, a) = 0 and symmetric distances.
class FrameEmbedder {
 public:
  virtual ~FrameEmbedder() = default;
  /// frame: (C, H, W)
  virtual std::vector<float> embed(const Tensor& frame) const = 0;
};

/// Default embedder: 4x4 patches, Gaussian projection to 16 dims per patch
/// (one shared projection, drawn from the seed), per-patch L2 normalization,
/// concatenation.
class RandomProjectionEmbedder : public FrameEmbedder {
 public:
  explicit RandomProjectionEmbedder(int channels = 3, std::uint64_t seed = 0);
  std::vector<float> embed(const Tensor& frame) const override;

  static constexpr int kPatch = 4;
  static constexpr int kDims = 16;

 private:
  int channels_;
  Tensor proj_;  // (kDims, channels * kPatch * kPatch)
};

double squared_distance(const std::vector<float>& a, const std::vector<float>& b);

/// Mean embedded distance between consecutive frames; lower is better.
double temporal_consistency(const VideoTensor& video, const FrameEmbedder& embedder);

/// Mean over timestamps of the mean pairwise embedding distance across
/// samples (all ordered pairs, so duplicating the sample set is a no-op).
/// Higher is more diverse.
double diversity(const std::vector<VideoTensor>& videos, const FrameEmbedder& embedder);

/// Per-frame centroid and foreground mask area from the synthetic-world
/// oracle.
struct Trajectory {
  std::vector<double> cx, cy;
  std::vector<double> area;
  int frames() const { return static_cast<int>(cx.size()); }
};

/// Foreground = pixels whose max-channel deviation from the background color
/// exceeds 0.2. An empty mask carries the previous centroid with area 0; an
/// empty first frame raises OracleError.
Trajectory track_centroid(const VideoTensor& video, const std::array<float, 3>& background);
Trajectory track_centroid(const VideoTensor& video, int background_palette_index);

/// Median border color of frame 0; background estimate for generated clips.
std::array<float, 3> estimate_background(const VideoTensor& video);

/// Least-squares slope of log(area) over frames (growth/shrink rate).
double log_area_slope(const Trajectory& t);
/// Mean per-frame displacement vector.
std::array<double, 2> mean_displacement(const Trajectory& t);

struct MotionFidelity {
  double direction_cosine = 0.0;
  double speed_ratio = 0.0;
};

/// Compares a generated clip's tracked trajectory against a reference spec's
/// analytic path. Translational motions compare mean displacement vectors;
/// grow/shrink compare log-area slopes (sign -> direction_cosine of +-1,
/// magnitude -> speed_ratio). Zero displacement on both sides gives cosine 1.
MotionFidelity motion_fidelity(const VideoTensor& gen, const SceneSpec& ref_spec, int ref_frames,
                               int ref_height, int ref_width);
MotionFidelity motion_fidelity(const Trajectory& gen, const Trajectory& ref, Motion motion);

struct AppearanceResult {
  bool color_match = false;
  bool shape_match = false;
};

/// Nearest-palette classification of the mean foreground color, and
/// normalized cross-correlation of the foreground mask against the three
/// shape templates at the tracked size/position (threshold 0.6).
AppearanceResult appearance_accuracy(const VideoTensor& video, Shape expected_shape,
                                     int expected_color);
/// The shape whose template best matches the clip, or nullopt if no
/// candidate clears the correlation threshold.
std::optional<Shape> classify_shape(const VideoTensor& video);
std::optional<int> classify_color(const VideoTensor& video);

/// One row of the metric report CSV (column order is stable).
struct MetricsRow {
  std::string run;
  std::string prompt;
  std::uint64_t seed = 0;
  double temporal_consistency = 0.0;
  double diversity = 0.0;
  double direction_cosine = 0.0;
  double speed_ratio = 0.0;
  int color_match = 0;
  int shape_match = 0;
};

extern const char* kMetricsCsvHeader;
void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);

}  // namespace motionlab
