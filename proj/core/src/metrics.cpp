// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "motionlab/errors.hpp"

namespace motionlab {

namespace {
// Max-channel deviation from the background color (in [-1, 1] space) above
// which a pixel counts as foreground. Any two palette colors differ by 2.0 in
// at least one channel, so anything below 1.0 separates them exactly on clean
// renders; 0.9 additionally tolerates heavy sampler ripple.
constexpr float kForegroundThreshold = 0.9f;
constexpr double kShapeNccThreshold = 0.6;
}  // namespace

RandomProjectionEmbedder::RandomProjectionEmbedder(int channels, std::uint64_t seed)
    : channels_(channels) {
  Rng rng(seed);
  proj_ = rng.randn({kDims, channels * kPatch * kPatch},
                    1.0f / std::sqrt(static_cast<float>(channels * kPatch * kPatch)));
}

std::vector<float> RandomProjectionEmbedder::embed(const Tensor& frame) const {
  if (frame.ndim() != 3 || frame.dim(0) != channels_)
    throw MetricError("embed: frame must be (C, H, W) with C=" + std::to_string(channels_));
  const int H = frame.dim(1), W = frame.dim(2);
  const int py = H / kPatch, px = W / kPatch;
  if (py < 1 || px < 1) throw MetricError("embed: frame smaller than patch size");

  const int in_dim = channels_ * kPatch * kPatch;
  std::vector<float> patch(static_cast<size_t>(in_dim));
  std::vector<float> out;
  out.reserve(static_cast<size_t>(py) * px * kDims);
  for (int by = 0; by < py; ++by)
    for (int bx = 0; bx < px; ++bx) {
      int i = 0;
      for (int c = 0; c < channels_; ++c)
        for (int y = 0; y < kPatch; ++y)
          for (int x = 0; x < kPatch; ++x)
            patch[static_cast<size_t>(i++)] = frame.at3(c, by * kPatch + y, bx * kPatch + x);
      float feat[kDims];
      double norm = 0;
      for (int d = 0; d < kDims; ++d) {
        double acc = 0;
        for (int j = 0; j < in_dim; ++j) acc += proj_.at2(d, j) * patch[static_cast<size_t>(j)];
        feat[d] = static_cast<float>(acc);
        norm += acc * acc;
      }
      const float inv = norm > 0 ? static_cast<float>(1.0 / std::sqrt(norm)) : 0.0f;
      for (int d = 0; d < kDims; ++d) out.push_back(feat[d] * inv);
    }
  return out;
}

double squared_distance(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw MetricError("distance: embedding size mismatch");
  double acc = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    acc += d * d;
  }
  return acc;
}

namespace {
Tensor frame_view(const VideoTensor& video, int f) {
  const int C = video.dim(1), H = video.dim(2), W = video.dim(3);
  Tensor out({C, H, W});
  std::copy_n(&video.v[static_cast<size_t>(f) * C * H * W], static_cast<size_t>(C) * H * W,
              out.v.begin());
  return out;
}
}  // namespace

double temporal_consistency(const VideoTensor& video, const FrameEmbedder& embedder) {
  const int F = video.dim(0);
  if (F < 2) throw MetricError("temporal_consistency: need at least 2 frames");
  double acc = 0;
  std::vector<float> prev = embedder.embed(frame_view(video, 0));
  for (int f = 1; f < F; ++f) {
    std::vector<float> cur = embedder.embed(frame_view(video, f));
    acc += squared_distance(prev, cur);
    prev = std::move(cur);
  }
  return acc / (F - 1);
}

double diversity(const std::vector<VideoTensor>& videos, const FrameEmbedder& embedder) {
  const int n = static_cast<int>(videos.size());
  if (n < 2) throw MetricError("diversity: need at least 2 samples");
  const int F = videos[0].dim(0);
  for (const auto& v : videos)
    if (v.dim(0) != F) throw MetricError("diversity: samples must share frame count");

  double acc = 0;
  for (int f = 0; f < F; ++f) {
    std::vector<std::vector<float>> embs;
    embs.reserve(static_cast<size_t>(n));
    for (const auto& v : videos) embs.push_back(embedder.embed(frame_view(v, f)));
    double pair_acc = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) pair_acc += squared_distance(embs[static_cast<size_t>(i)],
                                                               embs[static_cast<size_t>(j)]);
    acc += pair_acc / (static_cast<double>(n) * n);
  }
  return acc / F;
}

// ---------------------------------------------------------------------------
// oracle tracking
// ---------------------------------------------------------------------------

Trajectory track_centroid(const VideoTensor& video, const std::array<float, 3>& background) {
  const int F = video.dim(0), C = video.dim(1), H = video.dim(2), W = video.dim(3);
  if (C != 3) throw OracleError("track_centroid: expected 3-channel video");
  Trajectory t;
  t.cx.resize(static_cast<size_t>(F));
  t.cy.resize(static_cast<size_t>(F));
  t.area.resize(static_cast<size_t>(F));
  for (int f = 0; f < F; ++f) {
    double sx = 0, sy = 0;
    std::int64_t count = 0;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        float dev = 0;
        for (int c = 0; c < 3; ++c)
          dev = std::max(dev, std::abs(video.at4(f, c, y, x) - background[static_cast<size_t>(c)]));
        if (dev > kForegroundThreshold) {
          sx += x + 0.5;
          sy += y + 0.5;
          ++count;
        }
      }
    if (count == 0) {
      if (f == 0) throw OracleError("track_centroid: empty foreground in first frame");
      t.cx[static_cast<size_t>(f)] = t.cx[static_cast<size_t>(f - 1)];
      t.cy[static_cast<size_t>(f)] = t.cy[static_cast<size_t>(f - 1)];
      t.area[static_cast<size_t>(f)] = 0;
    } else {
      t.cx[static_cast<size_t>(f)] = sx / static_cast<double>(count);
      t.cy[static_cast<size_t>(f)] = sy / static_cast<double>(count);
      t.area[static_cast<size_t>(f)] = static_cast<double>(count);
    }
  }
  return t;
}

Trajectory track_centroid(const VideoTensor& video, int background_palette_index) {
  std::array<float, 3> bg{};
  palette_rgb(background_palette_index, bg.data());
  return track_centroid(video, bg);
}

std::array<float, 3> estimate_background(const VideoTensor& video) {
  const int H = video.dim(2), W = video.dim(3);
  std::array<float, 3> bg{};
  std::vector<float> vals;
  for (int c = 0; c < 3; ++c) {
    vals.clear();
    for (int x = 0; x < W; ++x) {
      vals.push_back(video.at4(0, c, 0, x));
      vals.push_back(video.at4(0, c, H - 1, x));
    }
    for (int y = 0; y < H; ++y) {
      vals.push_back(video.at4(0, c, y, 0));
      vals.push_back(video.at4(0, c, y, W - 1));
    }
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(vals.size() / 2),
                     vals.end());
    bg[static_cast<size_t>(c)] = vals[vals.size() / 2];
  }
  return bg;
}

double log_area_slope(const Trajectory& t) {
  // least-squares slope of log(area) vs frame index, over non-empty frames
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int f = 0; f < t.frames(); ++f) {
    if (t.area[static_cast<size_t>(f)] <= 0) continue;
    const double x = f, y = std::log(t.area[static_cast<size_t>(f)]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double denom = n * sxx - sx * sx;
  return denom == 0 ? 0.0 : (n * sxy - sx * sy) / denom;
}

std::array<double, 2> mean_displacement(const Trajectory& t) {
  const int F = t.frames();
  if (F < 2) return {0.0, 0.0};
  return {(t.cx[static_cast<size_t>(F - 1)] - t.cx[0]) / (F - 1),
          (t.cy[static_cast<size_t>(F - 1)] - t.cy[0]) / (F - 1)};
}

MotionFidelity motion_fidelity(const Trajectory& gen, const Trajectory& ref, Motion motion) {
  MotionFidelity out;
  if (motion == Motion::Grow || motion == Motion::Shrink) {
    const double sg = log_area_slope(gen), sr = log_area_slope(ref);
    if (sg == 0 && sr == 0)
      out.direction_cosine = 1.0;
    else if (sg == 0 || sr == 0)
      out.direction_cosine = 0.0;
    else
      out.direction_cosine = (sg > 0) == (sr > 0) ? 1.0 : -1.0;
    out.speed_ratio = sr == 0 ? 0.0 : std::abs(sg) / std::abs(sr);
    return out;
  }
  const auto dg = mean_displacement(gen);
  const auto dr = mean_displacement(ref);
  const double ng = std::hypot(dg[0], dg[1]);
  const double nr = std::hypot(dr[0], dr[1]);
  if (ng == 0 && nr == 0) {
    out.direction_cosine = 1.0;
    out.speed_ratio = 1.0;
    return out;
  }
  if (ng == 0 || nr == 0) {
    out.direction_cosine = 0.0;
    out.speed_ratio = nr == 0 ? 0.0 : ng / nr;
    return out;
  }
  out.direction_cosine = (dg[0] * dr[0] + dg[1] * dr[1]) / (ng * nr);
  out.speed_ratio = ng / nr;
  return out;
}

MotionFidelity motion_fidelity(const VideoTensor& gen, const SceneSpec& ref_spec, int ref_frames,
                               int ref_height, int ref_width) {
  const ScenePath path = scene_path(ref_spec, ref_frames, ref_height, ref_width);
  Trajectory ref;
  ref.cx = path.cx;
  ref.cy = path.cy;
  ref.area.resize(path.size.size());
  for (size_t i = 0; i < path.size.size(); ++i)
    ref.area[i] = path.size[i] * path.size[i];  // proportional is enough for slopes
  const Trajectory g = track_centroid(gen, estimate_background(gen));
  return motion_fidelity(g, ref, ref_spec.motion);
}

// ---------------------------------------------------------------------------
// appearance
// ---------------------------------------------------------------------------

namespace {

/// Binary foreground mask of one frame.
std::vector<float> frame_mask(const VideoTensor& video, int f, const std::array<float, 3>& bg) {
  const int H = video.dim(2), W = video.dim(3);
  std::vector<float> m(static_cast<size_t>(H) * W, 0.0f);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      float dev = 0;
      for (int c = 0; c < 3; ++c)
        dev = std::max(dev, std::abs(video.at4(f, c, y, x) - bg[static_cast<size_t>(c)]));
      if (dev > kForegroundThreshold) m[static_cast<size_t>(y) * W + x] = 1.0f;
    }
  return m;
}

double ncc(const std::vector<float>& a, const std::vector<float>& b) {
  const size_t n = a.size();
  double ma = 0, mb = 0;
  for (size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0 || vb == 0) return 0.0;
  return cov / std::sqrt(va * vb);
}

double shape_size_from_area(Shape s, double area) {
  switch (s) {
    case Shape::Square:
      return std::sqrt(area);
    case Shape::Circle:
      return 2.0 * std::sqrt(area / 3.14159265358979323846);
    case Shape::Triangle:
      // equilateral with circumradius size/2: area = (3*sqrt(3)/4) * (size/2)^2
      return 2.0 * std::sqrt(area / (3.0 * std::sqrt(3.0) / 4.0));
  }
  return std::sqrt(area);
}

std::vector<float> template_mask(Shape s, double cx, double cy, double size, int H, int W) {
  SceneSpec spec;
  spec.shape = s;
  spec.fill_color = 0;
  spec.background_color = 1;
  spec.size = size / std::min(H, W);
  spec.motion = Motion::Grow;  // static single-frame render (speed 1)
  spec.speed = 1.0;
  spec.start_x = cx;
  spec.start_y = cy;
  std::vector<float> m(static_cast<size_t>(H) * W, 0.0f);
  const double half = size / 2.0;
  // rasterize directly with the renderer's inside tests via render_scene on
  // one frame would enforce bounds; replicate the raster rule instead.
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      bool in = false;
      const double dx = px - cx, dy = py - cy;
      switch (s) {
        case Shape::Square:
          in = std::abs(dx) <= half && std::abs(dy) <= half;
          break;
        case Shape::Circle:
          in = dx * dx + dy * dy <= half * half;
          break;
        case Shape::Triangle: {
          const double x1 = cx, y1 = cy - half;
          const double r3 = 0.8660254037844386;
          const double x2 = cx - half * r3, y2 = cy + half / 2.0;
          const double x3 = cx + half * r3, y3 = cy + half / 2.0;
          auto side = [&](double ax, double ay, double bx, double by) {
            return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
          };
          const double s1 = side(x1, y1, x2, y2);
          const double s2 = side(x2, y2, x3, y3);
          const double s3 = side(x3, y3, x1, y1);
          in = (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
          break;
        }
      }
      if (in) m[static_cast<size_t>(y) * W + x] = 1.0f;
    }
  return m;
}

struct ShapeVote {
  Shape shape;
  double score;
};

std::optional<ShapeVote> classify_frame_shape(const VideoTensor& video, int f,
                                              const std::array<float, 3>& bg, double cx, double cy,
                                              double area) {
  if (area <= 0) return std::nullopt;
  const int H = video.dim(2), W = video.dim(3);
  const std::vector<float> mask = frame_mask(video, f, bg);
  double best = -2.0;
  Shape best_shape = Shape::Square;
  for (Shape s : {Shape::Square, Shape::Circle, Shape::Triangle}) {
    const double size0 = shape_size_from_area(s, area);
    // small size sweep around the area-implied estimate
    for (double scale : {0.85, 1.0, 1.15}) {
      const auto tmpl = template_mask(s, cx, cy, size0 * scale, H, W);
      const double c = ncc(mask, tmpl);
      if (c > best) {
        best = c;
        best_shape = s;
      }
    }
  }
  return ShapeVote{best_shape, best};
}

}  // namespace

std::optional<int> classify_color(const VideoTensor& video) {
  try {
    const auto bg = estimate_background(video);
    const int F = video.dim(0), H = video.dim(2), W = video.dim(3);
    double mean[3] = {0, 0, 0};
    std::int64_t count = 0;
    for (int f = 0; f < F; ++f) {
      const auto mask = frame_mask(video, f, bg);
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          if (mask[static_cast<size_t>(y) * W + x] > 0) {
            for (int c = 0; c < 3; ++c) mean[c] += video.at4(f, c, y, x);
            ++count;
          }
    }
    if (count == 0) return std::nullopt;
    for (double& m : mean) m /= static_cast<double>(count);
    int best = 0;
    double best_d = 1e30;
    for (int c = 0; c < kNumColors; ++c) {
      float rgb[3];
      palette_rgb(c, rgb);
      double d = 0;
      for (int i = 0; i < 3; ++i) d += (mean[i] - rgb[i]) * (mean[i] - rgb[i]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    return best;
  } catch (const Error&) {
    return std::nullopt;
  }
}

std::optional<Shape> classify_shape(const VideoTensor& video) {
  try {
    const auto bg = estimate_background(video);
    const Trajectory t = track_centroid(video, bg);
    int votes[kNumShapes] = {0, 0, 0};
    double scores[kNumShapes] = {0, 0, 0};
    int n = 0;
    for (int f = 0; f < video.dim(0); ++f) {
      const auto vote = classify_frame_shape(video, f, bg, t.cx[static_cast<size_t>(f)],
                                             t.cy[static_cast<size_t>(f)],
                                             t.area[static_cast<size_t>(f)]);
      if (!vote) continue;
      ++votes[static_cast<int>(vote->shape)];
      scores[static_cast<int>(vote->shape)] += vote->score;
      ++n;
    }
    if (n == 0) return std::nullopt;
    int best = 0;
    for (int s = 1; s < kNumShapes; ++s)
      if (votes[s] > votes[best]) best = s;
    const double mean_score = scores[best] / std::max(votes[best], 1);
    if (votes[best] * 2 <= n || mean_score < kShapeNccThreshold) return std::nullopt;
    return static_cast<Shape>(best);
  } catch (const Error&) {
    return std::nullopt;
  }
}

AppearanceResult appearance_accuracy(const VideoTensor& video, Shape expected_shape,
                                     int expected_color) {
  AppearanceResult r;
  const auto color = classify_color(video);
  const auto shape = classify_shape(video);
  r.color_match = color.has_value() && *color == expected_color;
  r.shape_match = shape.has_value() && *shape == expected_shape;
  return r;
}

// ---------------------------------------------------------------------------
// reporting
// ---------------------------------------------------------------------------

const char* kMetricsCsvHeader =
    "run,prompt,seed,temporal_consistency,diversity,direction_cosine,speed_ratio,"
    "color_match,shape_match";

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("write_metrics_csv: cannot open '" + path + "'");
  f << kMetricsCsvHeader << "\n";
  for (const auto& r : rows) {
    std::string prompt = r.prompt;
    std::replace(prompt.begin(), prompt.end(), ',', ';');
    f << r.run << "," << prompt << "," << r.seed << "," << r.temporal_consistency << ","
      << r.diversity << "," << r.direction_cosine << "," << r.speed_ratio << "," << r.color_match
      << "," << r.shape_match << "\n";
  }
}

}  // namespace motionlab
