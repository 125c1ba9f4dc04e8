// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "motionlab/errors.hpp"

namespace motionlab {

Vocabulary Vocabulary::standard() {
  Vocabulary v;
  v.words_ = {
      "<pad>", "<unk>",
      "a",
      // palette
      "red", "green", "blue", "yellow", "magenta", "cyan",
      // shapes
      "square", "circle", "triangle",
      // motion phrases
      "moving", "right", "left", "up", "down", "diagonally",
      "growing", "larger", "shrinking", "smaller", "bouncing", "sideways",
  };
  for (size_t i = 0; i < v.words_.size(); ++i) v.index_[v.words_[i]] = static_cast<int>(i);
  v.base_size_ = static_cast<int>(v.words_.size());
  return v;
}

int Vocabulary::id(const std::string& w) const {
  auto it = index_.find(w);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || id >= size()) throw VocabError("vocabulary: id out of range");
  return words_[static_cast<size_t>(id)];
}

int Vocabulary::add_placeholder(const std::string& w) {
  if (contains(w)) throw VocabError("vocabulary: token '" + w + "' already present");
  const int id = size();
  words_.push_back(w);
  index_[w] = id;
  return id;
}

std::vector<int> Vocabulary::tokenize(const std::string& text) const {
  std::vector<int> ids;
  std::istringstream is(text);
  std::string w;
  while (is >> w) {
    std::transform(w.begin(), w.end(), w.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    ids.push_back(id(w));
  }
  return ids;
}

TextEncoder::TextEncoder(int text_dim, int max_len, Vocabulary vocab, std::uint64_t seed)
    : D_(text_dim), L_(max_len), vocab_(std::move(vocab)) {
  if (D_ % heads_ != 0) throw ConfigError("text_dim: must be divisible by 4 attention heads");
  Rng rng(seed);
  const float es = 0.02f;
  const float ws = 1.0f / std::sqrt(static_cast<float>(D_));
  params_["emb"] = ag::leaf(rng.randn({vocab_.base_size(), D_}, es));
  params_["pos"] = ag::leaf(rng.randn({L_, D_}, es));
  for (const char* p : {"wq", "wk", "wv", "wo"})
    params_[std::string("attn.") + p] = ag::leaf(rng.randn({D_, D_}, ws));
  params_["ln1.g"] = ag::leaf(Tensor::full({D_}, 1.0f));
  params_["ln1.b"] = ag::leaf(Tensor::zeros({D_}));
  params_["ln2.g"] = ag::leaf(Tensor::full({D_}, 1.0f));
  params_["ln2.b"] = ag::leaf(Tensor::zeros({D_}));
}

ag::Var TextEncoder::encode_ids(const std::vector<int>& ids, const ag::Var& delta) const {
  const int table_size =
      vocab_.base_size() + (delta ? delta->val.dim(0) : 0);
  std::vector<int> padded(static_cast<size_t>(L_), Vocabulary::kPad);
  for (size_t i = 0; i < ids.size() && i < static_cast<size_t>(L_); ++i) {
    if (ids[i] < 0 || ids[i] >= table_size)
      throw VocabError("encode: token id " + std::to_string(ids[i]) + " out of range");
    padded[i] = ids[i];
  }

  auto p = [&](const std::string& k) { return params_.at(k); };
  ag::Var table = p("emb");
  if (delta) {
    // stack delta rows under the base table so placeholder ids address them
    auto a = ag::reshape(table, {1, vocab_.base_size(), 1, D_});
    auto b = ag::reshape(delta, {1, delta->val.dim(0), 1, D_});
    table = ag::reshape(ag::concat_ch(a, b), {table_size, D_});
  }
  auto x = ag::add(ag::embedding(table, padded), p("pos"));
  auto h = ag::layer_norm(x, p("ln1.g"), p("ln1.b"));
  auto q = ag::reshape(ag::linear(h, p("attn.wq")), {1, L_, D_});
  auto k = ag::reshape(ag::linear(h, p("attn.wk")), {1, L_, D_});
  auto v = ag::reshape(ag::linear(h, p("attn.wv")), {1, L_, D_});
  auto att = ag::reshape(ag::sdpa(q, k, v, heads_), {L_, D_});
  auto y = ag::add(x, ag::linear(att, p("attn.wo")));
  return ag::layer_norm(y, p("ln2.g"), p("ln2.b"));
}

ag::Var TextEncoder::encode(const std::string& text, const ag::Var& delta) const {
  return encode_ids(vocab_.tokenize(text), delta);
}

Tensor TextEncoder::encode_value(const std::string& text, const Tensor* delta) const {
  ag::Var d = delta ? ag::constant(*delta) : nullptr;
  return encode(text, d)->val;
}

Tensor TextEncoder::embedding_row(const std::string& word) const {
  if (!vocab_.contains(word)) throw VocabError("embedding_row: unknown word '" + word + "'");
  const int id = vocab_.id(word);
  if (id >= vocab_.base_size()) throw VocabError("embedding_row: '" + word + "' is a placeholder");
  const Tensor& emb = params_.at("emb")->val;
  Tensor row({D_});
  std::copy_n(&emb.v[static_cast<size_t>(id) * D_], D_, row.v.begin());
  return row;
}

}  // namespace motionlab
