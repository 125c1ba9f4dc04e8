// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>

#include <png.h>

#include "motionlab/errors.hpp"

namespace fs = std::filesystem;

namespace motionlab {

namespace {
constexpr float kPalette[kNumColors][3] = {
    {1, -1, -1},   // red
    {-1, 1, -1},   // green
    {-1, -1, 1},   // blue
    {1, 1, -1},    // yellow
    {1, -1, 1},    // magenta
    {-1, 1, 1},    // cyan
};
constexpr const char* kColorNames[kNumColors] = {"red",    "green",   "blue",
                                                 "yellow", "magenta", "cyan"};
constexpr const char* kMotionPhrases[kNumMotions] = {
    "moving right",          "moving left",          "moving up",
    "moving down",           "moving diagonally up", "moving diagonally down",
    "growing larger",        "shrinking smaller",    "bouncing sideways"};
}  // namespace

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::Square: return "square";
    case Shape::Circle: return "circle";
    case Shape::Triangle: return "triangle";
  }
  return "?";
}

const char* color_name(int c) {
  if (c < 0 || c >= kNumColors) throw ConfigError("fill_color: palette index out of range");
  return kColorNames[c];
}

const char* motion_phrase(Motion m) { return kMotionPhrases[static_cast<int>(m)]; }

void palette_rgb(int c, float rgb[3]) {
  if (c < 0 || c >= kNumColors) throw ConfigError("color: palette index out of range");
  for (int i = 0; i < 3; ++i) rgb[i] = kPalette[c][i];
}

// ---------------------------------------------------------------------------
// scene path & rasterizer
// ---------------------------------------------------------------------------

ScenePath scene_path(const SceneSpec& spec, int F, int H, int W) {
  ScenePath p;
  p.cx.resize(static_cast<size_t>(F));
  p.cy.resize(static_cast<size_t>(F));
  p.size.resize(static_cast<size_t>(F));
  const double base_size = spec.size * std::min(H, W);
  double vx = 0, vy = 0;
  switch (spec.motion) {
    case Motion::Right: vx = spec.speed; break;
    case Motion::Left: vx = -spec.speed; break;
    case Motion::Up: vy = -spec.speed; break;
    case Motion::Down: vy = spec.speed; break;
    case Motion::DiagUR: vx = spec.speed; vy = -spec.speed; break;
    case Motion::DiagDL: vx = -spec.speed; vy = spec.speed; break;
    case Motion::BounceH: vx = spec.speed; break;
    case Motion::Grow:
    case Motion::Shrink: break;
  }
  double cx = spec.start_x, cy = spec.start_y, size = base_size;
  for (int f = 0; f < F; ++f) {
    p.cx[static_cast<size_t>(f)] = cx;
    p.cy[static_cast<size_t>(f)] = cy;
    p.size[static_cast<size_t>(f)] = size;
    if (spec.motion == Motion::Grow || spec.motion == Motion::Shrink) {
      size *= spec.speed;
    } else if (spec.motion == Motion::BounceH) {
      const double half = size / 2.0;
      cx += vx;
      if (cx > W - half) {
        cx = 2.0 * (W - half) - cx;
        vx = -vx;
      } else if (cx < half) {
        cx = 2.0 * half - cx;
        vx = -vx;
      }
    } else {
      cx += vx;
      cy += vy;
    }
  }
  return p;
}

namespace {

bool inside_shape(Shape shape, double px, double py, double cx, double cy, double half) {
  const double dx = px - cx, dy = py - cy;
  switch (shape) {
    case Shape::Square:
      return std::abs(dx) <= half && std::abs(dy) <= half;
    case Shape::Circle:
      return dx * dx + dy * dy <= half * half;
    case Shape::Triangle: {
      // equilateral, apex up, circumradius = half, centroid at (cx, cy)
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
      return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
    }
  }
  return false;
}

}  // namespace

VideoTensor render_scene(const SceneSpec& spec, int F, int H, int W) {
  if (spec.fill_color == spec.background_color)
    throw ConfigError("background_color: must differ from fill_color");
  if (spec.size <= 0 || spec.size > 1.0) throw ConfigError("size: out of range");
  const ScenePath path = scene_path(spec, F, H, W);

  if (spec.motion != Motion::BounceH) {
    for (int f = 0; f < F; ++f) {
      const double half = path.size[static_cast<size_t>(f)] / 2.0;
      if (path.cx[static_cast<size_t>(f)] - half < 0 ||
          path.cx[static_cast<size_t>(f)] + half > W ||
          path.cy[static_cast<size_t>(f)] - half < 0 ||
          path.cy[static_cast<size_t>(f)] + half > H)
        throw ConfigError("motion: shape exits frame at frame " + std::to_string(f));
    }
  }

  float fill[3], bg[3];
  palette_rgb(spec.fill_color, fill);
  palette_rgb(spec.background_color, bg);

  VideoTensor video({F, 3, H, W});
  for (int f = 0; f < F; ++f) {
    const double cx = path.cx[static_cast<size_t>(f)];
    const double cy = path.cy[static_cast<size_t>(f)];
    const double half = path.size[static_cast<size_t>(f)] / 2.0;
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const bool in = inside_shape(spec.shape, x + 0.5, y + 0.5, cx, cy, half);
        for (int c = 0; c < 3; ++c) video.at4(f, c, y, x) = in ? fill[c] : bg[c];
      }
  }
  return video;
}

PromptPair caption(const SceneSpec& spec) {
  PromptPair p;
  p.spatial = std::string("a ") + color_name(spec.fill_color) + " " + shape_name(spec.shape);
  p.full = p.spatial + " " + motion_phrase(spec.motion);
  return p;
}

// ---------------------------------------------------------------------------
// corpus
// ---------------------------------------------------------------------------

bool HoldoutRule::motion_allowed(Motion m) const {
  return std::find(excluded_motions.begin(), excluded_motions.end(), m) ==
         excluded_motions.end();
}

bool HoldoutRule::allowed(const SceneSpec& s) const {
  if (!motion_allowed(s.motion)) return false;
  for (const auto& p : excluded_pairs)
    if (p.color == s.fill_color && p.shape == s.shape && p.motion == s.motion) return false;
  return true;
}

SceneSpec sample_scene(Rng& rng, const HoldoutRule* holdout, int F, int H, int W) {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    SceneSpec s;
    s.shape = static_cast<Shape>(rng.uniform_int(kNumShapes));
    s.fill_color = static_cast<int>(rng.uniform_int(kNumColors));
    s.background_color = static_cast<int>(rng.uniform_int(kNumColors));
    if (s.background_color == s.fill_color) continue;
    s.motion = static_cast<Motion>(rng.uniform_int(kNumMotions));
    s.size = rng.uniform(0.2, 0.4);
    const double base = s.size * std::min(H, W);
    const double half = base / 2.0;
    switch (s.motion) {
      case Motion::Grow:
        s.speed = rng.uniform(1.03, 1.08);
        break;
      case Motion::Shrink:
        s.speed = rng.uniform(0.92, 0.97);
        break;
      default:
        s.speed = 1.0 + rng.uniform_int(2);  // 1 or 2 px/frame
        break;
    }
    s.start_x = rng.uniform(half, W - half);
    s.start_y = rng.uniform(half, H - half);
    if (holdout && !holdout->allowed(s)) continue;
    try {
      const ScenePath p = scene_path(s, F, H, W);
      bool ok = true;
      if (s.motion != Motion::BounceH) {
        for (int f = 0; f < F && ok; ++f) {
          const double hh = p.size[static_cast<size_t>(f)] / 2.0;
          ok = p.cx[static_cast<size_t>(f)] - hh >= 0 && p.cx[static_cast<size_t>(f)] + hh <= W &&
               p.cy[static_cast<size_t>(f)] - hh >= 0 && p.cy[static_cast<size_t>(f)] + hh <= H;
        }
      }
      if (ok) return s;
    } catch (const Error&) {
      continue;
    }
  }
  throw ConfigError("sample_scene: could not find a valid scene (holdout too restrictive?)");
}

Corpus make_corpus(int n, std::uint64_t seed, const HoldoutRule& holdout, int F, int H, int W) {
  int allowed_motions = 0;
  for (int m = 0; m < kNumMotions; ++m)
    if (holdout.motion_allowed(static_cast<Motion>(m))) ++allowed_motions;
  if (allowed_motions == 0) throw ConfigError("holdout: no motion class remains available");

  Corpus corpus;
  corpus.holdout = holdout;
  Rng rng(seed);
  corpus.items.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    CorpusItem item;
    item.spec = sample_scene(rng, &holdout, F, H, W);
    item.video = render_scene(item.spec, F, H, W);
    item.prompts = caption(item.spec);
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// video I/O
// ---------------------------------------------------------------------------

void save_vten(const VideoTensor& video, const std::string& path) {
  if (video.ndim() != 4) throw DataError("save_vten: video must be 4-d");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("save_vten: cannot open '" + path + "'");
  f.write("VTEN", 4);
  for (int d : video.shape) {
    const std::uint32_t u = static_cast<std::uint32_t>(d);
    f.write(reinterpret_cast<const char*>(&u), 4);
  }
  f.write(reinterpret_cast<const char*>(video.v.data()),
          static_cast<std::streamsize>(video.v.size() * sizeof(float)));
  if (!f) throw DataError("save_vten: short write");
}

VideoTensor load_vten(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_vten: cannot open '" + path + "'");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "VTEN", 4) != 0)
    throw DataError("load_vten: bad magic in '" + path + "'");
  std::uint32_t dims[4];
  f.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!f) throw DataError("load_vten: truncated header");
  VideoTensor v({static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                 static_cast<int>(dims[2]), static_cast<int>(dims[3])});
  f.read(reinterpret_cast<char*>(v.v.data()),
         static_cast<std::streamsize>(v.v.size() * sizeof(float)));
  if (!f) throw DataError("load_vten: truncated payload");
  return v;
}

namespace {

struct Image8 {
  int w = 0, h = 0, channels = 0;
  std::vector<unsigned char> px;  // row-major, interleaved
};

Image8 read_ppm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("read_ppm: cannot open '" + path + "'");
  std::string magic;
  f >> magic;
  if (magic != "P6") throw DataError("read_ppm: unsupported format '" + magic + "'");
  int w, h, maxv;
  f >> w >> h >> maxv;
  f.get();  // single whitespace after header
  if (!f || w <= 0 || h <= 0 || maxv != 255) throw DataError("read_ppm: bad header");
  Image8 img;
  img.w = w;
  img.h = h;
  img.channels = 3;
  img.px.resize(static_cast<size_t>(w) * h * 3);
  f.read(reinterpret_cast<char*>(img.px.data()), static_cast<std::streamsize>(img.px.size()));
  if (!f) throw DataError("read_ppm: truncated pixel data");
  return img;
}

Image8 read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw DataError("read_png: cannot open '" + path + "'");
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_stdio(&pi, fp)) {
    std::fclose(fp);
    throw DataError("read_png: not a PNG file: '" + path + "'");
  }
  pi.format = PNG_FORMAT_RGB;
  Image8 img;
  img.w = static_cast<int>(pi.width);
  img.h = static_cast<int>(pi.height);
  img.channels = 3;
  img.px.resize(PNG_IMAGE_SIZE(pi));
  if (!png_image_finish_read(&pi, nullptr, img.px.data(), 0, nullptr)) {
    std::fclose(fp);
    throw DataError("read_png: decode failed for '" + path + "'");
  }
  std::fclose(fp);
  return img;
}

void write_png(const std::string& path, const Image8& img) {
  png_image pi;
  std::memset(&pi, 0, sizeof(pi));
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.w);
  pi.height = static_cast<png_uint_32>(img.h);
  pi.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&pi, path.c_str(), 0, img.px.data(), 0, nullptr))
    throw DataError("write_png: failed for '" + path + "'");
}

Image8 frame_to_image(const VideoTensor& video, int f) {
  const int H = video.dim(2), W = video.dim(3);
  Image8 img;
  img.w = W;
  img.h = H;
  img.channels = 3;
  img.px.resize(static_cast<size_t>(W) * H * 3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = std::clamp((video.at4(f, c, y, x) + 1.0f) * 127.5f, 0.0f, 255.0f);
        img.px[(static_cast<size_t>(y) * W + x) * 3 + c] =
            static_cast<unsigned char>(std::lround(v));
      }
  return img;
}

std::optional<int> trailing_index(const std::string& stem) {
  size_t end = stem.size();
  size_t begin = end;
  while (begin > 0 && std::isdigit(static_cast<unsigned char>(stem[begin - 1]))) --begin;
  if (begin == end) return std::nullopt;
  return std::stoi(stem.substr(begin));
}

}  // namespace

VideoTensor load_video_frames(const std::string& path) {
  if (!fs::exists(path)) throw DataError("load_video_frames: no such path '" + path + "'");
  if (fs::is_regular_file(path)) return load_vten(path);

  std::map<int, std::string> frames;
  for (const auto& e : fs::directory_iterator(path)) {
    if (!e.is_regular_file()) continue;
    const std::string ext = e.path().extension().string();
    if (ext != ".ppm" && ext != ".png") continue;
    const auto idx = trailing_index(e.path().stem().string());
    if (!idx) continue;
    frames[*idx] = e.path().string();
  }
  if (frames.empty()) throw DataError("load_video_frames: no frame images in '" + path + "'");
  const int F = frames.rbegin()->first + 1;
  for (int i = 0; i < F; ++i)
    if (!frames.count(i))
      throw DataError("load_video_frames: frame index " + std::to_string(i) + " missing");

  VideoTensor video;
  for (int i = 0; i < F; ++i) {
    const std::string& p = frames[i];
    Image8 img = p.size() >= 4 && p.substr(p.size() - 4) == ".ppm" ? read_ppm(p) : read_png(p);
    if (i == 0) {
      video = VideoTensor({F, 3, img.h, img.w});
    } else if (img.h != video.dim(2) || img.w != video.dim(3)) {
      throw DataError("load_video_frames: frame index " + std::to_string(i) +
                      " has mismatched dimensions");
    }
    for (int y = 0; y < img.h; ++y)
      for (int x = 0; x < img.w; ++x)
        for (int c = 0; c < 3; ++c)
          video.at4(i, c, y, x) =
              static_cast<float>(img.px[(static_cast<size_t>(y) * img.w + x) * 3 + c]) / 127.5f -
              1.0f;
  }
  return video;
}

void save_frames_png(const VideoTensor& video, const std::string& dir) {
  fs::create_directories(dir);
  for (int f = 0; f < video.dim(0); ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.png", f);
    write_png((fs::path(dir) / name).string(), frame_to_image(video, f));
  }
}

void save_frames_ppm(const VideoTensor& video, const std::string& dir) {
  fs::create_directories(dir);
  for (int f = 0; f < video.dim(0); ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%03d.ppm", f);
    const Image8 img = frame_to_image(video, f);
    std::ofstream out((fs::path(dir) / name).string(), std::ios::binary | std::ios::trunc);
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.px.data()),
              static_cast<std::streamsize>(img.px.size()));
  }
}

}  // namespace motionlab
