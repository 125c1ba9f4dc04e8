// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "motionlab/checkpoint.hpp"
#include "motionlab/errors.hpp"

namespace motionlab {

using ag::Var;

namespace {

int norm_groups(int channels) {
  int g = 8;
  while (g > 1 && channels % g != 0) g /= 2;
  return g;
}

}  // namespace

void DenoiserConfig::validate() const {
  if (frames < 1) throw ConfigError("frames: must be >= 1");
  if (channels < 1) throw ConfigError("channels: must be >= 1");
  if (base_width < 4) throw ConfigError("base_width: must be >= 4");
  if (width_multipliers.empty()) throw ConfigError("width_multipliers: must be non-empty");
  for (int m : width_multipliers)
    if (m < 1) throw ConfigError("width_multipliers: entries must be >= 1");
  const int div = 1 << (levels() - 1);
  if (height < div || height % div != 0)
    throw ConfigError("height: must be divisible by 2^(levels-1)");
  if (width < div || width % div != 0)
    throw ConfigError("width: must be divisible by 2^(levels-1)");
  if (heads < 1) throw ConfigError("heads: must be >= 1");
  for (int l = 0; l < levels(); ++l)
    if (level_width(l) % heads != 0)
      throw ConfigError("heads: must divide every attention width");
  if (text_dim < heads || text_dim % heads != 0)
    throw ConfigError("text_dim: must be divisible by heads");
  if (max_text_len < 1) throw ConfigError("max_text_len: must be >= 1");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
    throw ConfigError("time_embed_dim: must be even and >= 2");
}

std::string DenoiserConfig::canonical() const {
  std::ostringstream os;
  os << "v1;F=" << frames << ";H=" << height << ";W=" << width << ";C=" << channels
     << ";bw=" << base_width << ";mult=";
  for (size_t i = 0; i < width_multipliers.size(); ++i)
    os << (i ? "," : "") << width_multipliers[i];
  os << ";heads=" << heads << ";D=" << text_dim << ";L=" << max_text_len
     << ";TE=" << time_embed_dim;
  return os.str();
}

DenoiserConfig DenoiserConfig::from_canonical(const std::string& s) {
  DenoiserConfig c;
  c.width_multipliers.clear();
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ';')) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq);
    const std::string val = tok.substr(eq + 1);
    if (key == "F") c.frames = std::stoi(val);
    else if (key == "H") c.height = std::stoi(val);
    else if (key == "W") c.width = std::stoi(val);
    else if (key == "C") c.channels = std::stoi(val);
    else if (key == "bw") c.base_width = std::stoi(val);
    else if (key == "heads") c.heads = std::stoi(val);
    else if (key == "D") c.text_dim = std::stoi(val);
    else if (key == "L") c.max_text_len = std::stoi(val);
    else if (key == "TE") c.time_embed_dim = std::stoi(val);
    else if (key == "mult") {
      std::istringstream ms(val);
      std::string m;
      while (std::getline(ms, m, ',')) c.width_multipliers.push_back(std::stoi(m));
    }
  }
  c.validate();
  return c;
}

const char* family_name(AttnFamily f) {
  switch (f) {
    case AttnFamily::SSA: return "SSA";
    case AttnFamily::SCA: return "SCA";
    case AttnFamily::TCFA: return "TCFA";
  }
  return "?";
}

Tensor timestep_embedding(int t, int dim) {
  Tensor e({dim});
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double f = std::exp(-std::log(10000.0) * static_cast<double>(i) / half);
    e[i] = static_cast<float>(std::sin(t * f));
    e[half + i] = static_cast<float>(std::cos(t * f));
  }
  return e;
}

// ---------------------------------------------------------------------------
// construction
// ---------------------------------------------------------------------------

Denoiser::Denoiser(const DenoiserConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);

  auto add = [&](const std::string& name, Tensor t) { params_[name] = ag::leaf(std::move(t)); };
  auto conv_init = [&](int co, int ci, int kh, int kw) {
    const float s = std::sqrt(2.0f / static_cast<float>(ci * kh * kw));
    return rng.randn({co, ci, kh, kw}, s);
  };
  auto lin_init = [&](int out, int in) {
    return rng.randn({out, in}, 1.0f / std::sqrt(static_cast<float>(in)));
  };
  auto add_norm = [&](const std::string& p, int c) {
    add(p + ".g", Tensor::full({c}, 1.0f));
    add(p + ".b", Tensor::zeros({c}));
  };
  auto add_attn = [&](const std::string& p, AttnFamily fam, int c) {
    add_norm(p + ".ln", c);
    const int kv_in = (fam == AttnFamily::SCA) ? cfg_.text_dim : c;
    add(p + ".wq", lin_init(c, c));
    add(p + ".wk", lin_init(c, kv_in));
    add(p + ".wv", lin_init(c, kv_in));
    // TCFA output projection starts at zero so a fresh model is an exact
    // per-frame image model.
    add(p + ".wo", fam == AttnFamily::TCFA ? Tensor::zeros({c, c}) : lin_init(c, c));
    census_.push_back({p + ".wq", fam, "wq", c, c});
    census_.push_back({p + ".wk", fam, "wk", c, kv_in});
    census_.push_back({p + ".wv", fam, "wv", c, kv_in});
    census_.push_back({p + ".wo", fam, "wo", c, c});
  };
  auto add_res = [&](const std::string& p, int ci, int co) {
    add_norm(p + ".gn1", ci);
    add(p + ".conv1.w", conv_init(co, ci, 3, 3));
    add(p + ".conv1.b", Tensor::zeros({co}));
    add(p + ".temb.w", lin_init(co, cfg_.time_embed_dim));
    add(p + ".temb.b", Tensor::zeros({co}));
    add_norm(p + ".gn2", co);
    add(p + ".conv2.w", conv_init(co, co, 3, 3));
    add(p + ".conv2.b", Tensor::zeros({co}));
    if (ci != co) add(p + ".skip.w", conv_init(co, ci, 1, 1));
  };
  auto add_temporal = [&](const std::string& p, int c) {
    add_attn(p + ".tcfa", AttnFamily::TCFA, c);
    add(p + ".tconv.w", Tensor::zeros({c, c, 1, 3}));
    add(p + ".tconv.b", Tensor::zeros({c}));
  };

  const int te = cfg_.time_embed_dim;
  add("time.mlp1.w", lin_init(te, te));
  add("time.mlp1.b", Tensor::zeros({te}));
  add("time.mlp2.w", lin_init(te, te));
  add("time.mlp2.b", Tensor::zeros({te}));

  add("in.conv.w", conv_init(cfg_.level_width(0), cfg_.channels, 3, 3));
  add("in.conv.b", Tensor::zeros({cfg_.level_width(0)}));

  for (int l = 0; l < cfg_.levels(); ++l) {
    const std::string p = "down" + std::to_string(l);
    const int c = cfg_.level_width(l);
    add_res(p + ".res", c, c);
    add_attn(p + ".ssa", AttnFamily::SSA, c);
    add_attn(p + ".sca", AttnFamily::SCA, c);
    add_temporal(p, c);
    if (l + 1 < cfg_.levels()) {
      add(p + ".down.w", conv_init(cfg_.level_width(l + 1), c, 3, 3));
      add(p + ".down.b", Tensor::zeros({cfg_.level_width(l + 1)}));
    }
  }

  const int cm = cfg_.level_width(cfg_.levels() - 1);
  add_res("mid.res", cm, cm);
  add_attn("mid.ssa", AttnFamily::SSA, cm);
  add_attn("mid.sca", AttnFamily::SCA, cm);
  add_temporal("mid", cm);

  for (int l = cfg_.levels() - 1; l >= 0; --l) {
    const std::string p = "up" + std::to_string(l);
    const int c = cfg_.level_width(l);
    add_res(p + ".res", 2 * c, c);
    add_temporal(p, c);
    if (l > 0) {
      add(p + ".up.w", conv_init(cfg_.level_width(l - 1), c, 3, 3));
      add(p + ".up.b", Tensor::zeros({cfg_.level_width(l - 1)}));
    }
  }

  add_norm("out.gn", cfg_.level_width(0));
  add("out.conv.w", Tensor::zeros({cfg_.channels, cfg_.level_width(0), 3, 3}));
  add("out.conv.b", Tensor::zeros({cfg_.channels}));
}

Denoiser build_denoiser(const DenoiserConfig& cfg, std::uint64_t seed) {
  return Denoiser(cfg, seed);
}

std::vector<ProjInfo> Denoiser::census_family(AttnFamily f) const {
  std::vector<ProjInfo> out;
  for (const auto& p : census_)
    if (p.family == f) out.push_back(p);
  return out;
}

Denoiser Denoiser::clone() const {
  Denoiser d;
  d.cfg_ = cfg_;
  d.census_ = census_;
  d.bypass_ = bypass_;
  d.tgate_ = tgate_;
  for (const auto& [name, var] : params_) d.params_[name] = ag::leaf(var->val);
  return d;
}

void Denoiser::attach(const std::string& target, AttachedAdapter ad) {
  if (!params_.count(target)) throw SelectorError("attach: unknown target '" + target + "'");
  attached_[target].push_back(std::move(ad));
}

void Denoiser::detach_set(const std::string& set_id) {
  for (auto it = attached_.begin(); it != attached_.end();) {
    auto& v = it->second;
    v.erase(std::remove_if(v.begin(), v.end(),
                           [&](const AttachedAdapter& a) { return a.set_id == set_id; }),
            v.end());
    it = v.empty() ? attached_.erase(it) : std::next(it);
  }
}

bool Denoiser::set_attached(const std::string& set_id) const {
  for (const auto& [_, v] : attached_)
    for (const auto& a : v)
      if (a.set_id == set_id) return true;
  return false;
}

// ---------------------------------------------------------------------------
// forward
// ---------------------------------------------------------------------------

Var Denoiser::proj(const std::string& name, const Var& x) const {
  Var y = ag::linear(x, params_.at(name));
  auto it = attached_.find(name);
  if (it != attached_.end())
    for (const auto& ad : it->second)
      y = ag::add(y, ag::scale(ag::linear(ag::linear(x, ad.A), ad.B), ad.alpha));
  return y;
}

Var Denoiser::res_block(const std::string& p, const Var& h, const Var& temb) const {
  auto P = [&](const std::string& k) { return params_.at(p + "." + k); };
  const int ci = h->val.dim(1);
  Var a = ag::group_norm(h, norm_groups(ci), P("gn1.g"), P("gn1.b"));
  a = ag::silu(a);
  a = ag::conv2d(a, P("conv1.w"), P("conv1.b"), 1, 1);
  a = ag::add_channel_bias(a, ag::linear(temb, P("temb.w"), P("temb.b")));
  a = ag::group_norm(a, norm_groups(a->val.dim(1)), P("gn2.g"), P("gn2.b"));
  a = ag::silu(a);
  a = ag::conv2d(a, P("conv2.w"), P("conv2.b"), 1, 1);
  Var r = h;
  if (params_.count(p + ".skip.w")) r = ag::conv2d(h, P("skip.w"), nullptr, 1, 0);
  return ag::add(r, a);
}

Var Denoiser::spatial_self(const std::string& p, const Var& h) const {
  const int F = h->val.dim(0), C = h->val.dim(1), H = h->val.dim(2), W = h->val.dim(3);
  Var seq = ag::reshape(ag::permute4(h, {0, 2, 3, 1}), {F, H * W, C});
  Var n = ag::layer_norm(seq, params_.at(p + ".ln.g"), params_.at(p + ".ln.b"));
  Var att = ag::sdpa(proj(p + ".wq", n), proj(p + ".wk", n), proj(p + ".wv", n), cfg_.heads);
  Var o = proj(p + ".wo", att);
  o = ag::permute4(ag::reshape(o, {F, H, W, C}), {0, 3, 1, 2});
  return ag::add(h, o);
}

Var Denoiser::spatial_cross(const std::string& p, const Var& h, const Var& text) const {
  const int F = h->val.dim(0), C = h->val.dim(1), H = h->val.dim(2), W = h->val.dim(3);
  Var seq = ag::reshape(ag::permute4(h, {0, 2, 3, 1}), {F, H * W, C});
  Var n = ag::layer_norm(seq, params_.at(p + ".ln.g"), params_.at(p + ".ln.b"));
  Var k = ag::expand0(proj(p + ".wk", text), F);
  Var v = ag::expand0(proj(p + ".wv", text), F);
  Var att = ag::sdpa(proj(p + ".wq", n), k, v, cfg_.heads);
  Var o = proj(p + ".wo", att);
  o = ag::permute4(ag::reshape(o, {F, H, W, C}), {0, 3, 1, 2});
  return ag::add(h, o);
}

Var Denoiser::temporal_block(const std::string& p, const Var& h) const {
  if (bypass_) return h;
  const int F = h->val.dim(0), C = h->val.dim(1), H = h->val.dim(2), W = h->val.dim(3);
  // TCFA: one attention sequence per spatial location, sequence axis = frames
  const std::string pa = p + ".tcfa";
  Var seq = ag::reshape(ag::permute4(h, {2, 3, 0, 1}), {H * W, F, C});
  Var n = ag::layer_norm(seq, params_.at(pa + ".ln.g"), params_.at(pa + ".ln.b"));
  Var att = ag::sdpa(proj(pa + ".wq", n), proj(pa + ".wk", n), proj(pa + ".wv", n), cfg_.heads);
  Var o = proj(pa + ".wo", att);
  o = ag::permute4(ag::reshape(o, {H, W, F, C}), {2, 3, 0, 1});
  Var x = ag::add(h, tgate_ == 1.0f ? o : ag::scale(o, tgate_));

  // temporal 1D conv over the frame axis, residual
  Var u = ag::reshape(ag::permute4(x, {2, 3, 1, 0}), {H * W, C, 1, F});
  Var y = ag::conv2d(u, params_.at(p + ".tconv.w"), params_.at(p + ".tconv.b"), 1, 0, 1);
  y = ag::permute4(ag::reshape(y, {H, W, C, F}), {3, 2, 0, 1});
  return ag::add(x, tgate_ == 1.0f ? y : ag::scale(y, tgate_));
}

Var Denoiser::forward(const Var& x, int t, const Var& text) const {
  if (x->val.ndim() != 4 || x->val.dim(1) != cfg_.channels || x->val.dim(2) != cfg_.height ||
      x->val.dim(3) != cfg_.width)
    throw ShapeError("forward: input shape " + x->val.shape_str() + " does not match config");
  if (!x->val.all_finite()) throw ShapeError("forward: non-finite input");
  if (text->val.ndim() != 2 || text->val.dim(0) != cfg_.max_text_len ||
      text->val.dim(1) != cfg_.text_dim)
    throw ShapeError("forward: text embedding shape mismatch");

  auto P = [&](const std::string& k) { return params_.at(k); };
  Var temb = ag::linear(ag::constant(timestep_embedding(t, cfg_.time_embed_dim)),
                        P("time.mlp1.w"), P("time.mlp1.b"));
  temb = ag::linear(ag::silu(temb), P("time.mlp2.w"), P("time.mlp2.b"));

  Var h = ag::conv2d(x, P("in.conv.w"), P("in.conv.b"), 1, 1);
  std::vector<Var> skips;
  for (int l = 0; l < cfg_.levels(); ++l) {
    const std::string p = "down" + std::to_string(l);
    h = res_block(p + ".res", h, temb);
    h = spatial_self(p + ".ssa", h);
    h = spatial_cross(p + ".sca", h, text);
    h = temporal_block(p, h);
    skips.push_back(h);
    if (l + 1 < cfg_.levels())
      h = ag::conv2d(h, P(p + ".down.w"), P(p + ".down.b"), 2, 1);
  }

  h = res_block("mid.res", h, temb);
  h = spatial_self("mid.ssa", h);
  h = spatial_cross("mid.sca", h, text);
  h = temporal_block("mid", h);

  for (int l = cfg_.levels() - 1; l >= 0; --l) {
    const std::string p = "up" + std::to_string(l);
    h = ag::concat_ch(h, skips[static_cast<size_t>(l)]);
    h = res_block(p + ".res", h, temb);
    h = temporal_block(p, h);
    if (l > 0) {
      h = ag::upsample_nearest2x(h);
      h = ag::conv2d(h, P(p + ".up.w"), P(p + ".up.b"), 1, 1);
    }
  }

  h = ag::group_norm(h, norm_groups(h->val.dim(1)), P("out.gn.g"), P("out.gn.b"));
  h = ag::silu(h);
  return ag::conv2d(h, P("out.conv.w"), P("out.conv.b"), 1, 1);
}

Tensor Denoiser::predict(const Tensor& x, int t, const Tensor& text) const {
  return forward(ag::constant(x), t, ag::constant(text))->val;
}

// ---------------------------------------------------------------------------
// standalone attention kernels
// ---------------------------------------------------------------------------

ag::Var spatial_self_attention(const Var& x, const Var& wq, const Var& wk, const Var& wv,
                               const Var& wo, int heads) {
  Var q = ag::linear(x, wq), k = ag::linear(x, wk), v = ag::linear(x, wv);
  return ag::linear(ag::sdpa(q, k, v, heads), wo);
}

ag::Var spatial_cross_attention(const Var& x, const Var& text, const Var& wq, const Var& wk,
                                const Var& wv, const Var& wo, int heads) {
  const int B = x->val.dim(0);
  Var q = ag::linear(x, wq);
  Var k = ag::expand0(ag::linear(text, wk), B);
  Var v = ag::expand0(ag::linear(text, wv), B);
  return ag::linear(ag::sdpa(q, k, v, heads), wo);
}

ag::Var temporal_cross_frame_attention(const Var& x, const Var& wq, const Var& wk, const Var& wv,
                                       const Var& wo, int heads) {
  Var q = ag::linear(x, wq), k = ag::linear(x, wk), v = ag::linear(x, wv);
  return ag::linear(ag::sdpa(q, k, v, heads), wo);
}

// ---------------------------------------------------------------------------
// fingerprints & checkpoints
// ---------------------------------------------------------------------------

std::uint64_t model_fingerprint(const DenoiserConfig& cfg,
                                const std::vector<std::string>& param_names) {
  std::vector<std::string> names = param_names;
  std::sort(names.begin(), names.end());
  const std::string c = cfg.canonical();
  std::uint64_t h = fnv1a64(c.data(), c.size());
  for (const auto& n : names) {
    h = fnv1a64(n.data(), n.size(), h);
    h = fnv1a64("|", 1, h);
  }
  return h;
}

std::uint64_t model_fingerprint(const Denoiser& d) {
  std::vector<std::string> names;
  for (const auto& [n, _] : d.params()) names.push_back(n);
  return model_fingerprint(d.config(), names);
}

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

void save_model(const std::string& path, const Denoiser& d, const TextEncoder& te) {
  Checkpoint ck;
  for (const auto& [n, v] : d.params()) ck.put("unet." + n, v->val);
  for (const auto& [n, v] : te.params()) ck.put("text." + n, v->val);
  ck.metadata["kind"] = "base_model";
  ck.metadata["config"] = d.config().canonical();
  ck.metadata["fingerprint"] = fingerprint_hex(model_fingerprint(d));
  ck.save(path);
}

std::pair<Denoiser, TextEncoder> load_model(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  if (!ck.metadata.count("config")) throw ContainerError("model checkpoint: missing config");
  DenoiserConfig cfg = DenoiserConfig::from_canonical(ck.metadata.at("config"));
  Denoiser d(cfg, 0);
  TextEncoder te(cfg.text_dim, cfg.max_text_len, Vocabulary::standard(), 0);
  for (auto& [n, v] : d.params()) {
    const Tensor& t = ck.get("unet." + n);
    if (!t.same_shape(v->val))
      throw ContainerError("model checkpoint: shape mismatch for '" + n + "'");
    v->val = t;
  }
  for (auto& [n, v] : te.params()) {
    const Tensor& t = ck.get("text." + n);
    if (!t.same_shape(v->val))
      throw ContainerError("model checkpoint: shape mismatch for 'text." + n + "'");
    v->val = t;
  }
  return {std::move(d), std::move(te)};
}

}  // namespace motionlab
