// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "motionlab/autograd.hpp"
#include "motionlab/tensor.hpp"

namespace motionlab {

/// Closed word-level vocabulary. The base word list is frozen; placeholder
/// tokens for textual inversion are appended past base_size().
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  /// The fixed synthetic-world vocabulary (articles, palette, shapes,
  /// motion-phrase words).
  static Vocabulary standard();

  int size() const { return static_cast<int>(words_.size()); }
  int base_size() const { return base_size_; }
  bool contains(const std::string& w) const { return index_.count(w) > 0; }
  /// Returns kUnk for unknown words.
  int id(const std::string& w) const;
  const std::string& word(int id) const;

  /// Appends a placeholder token; throws VocabError if already present.
  int add_placeholder(const std::string& w);
  int placeholder_count() const { return size() - base_size_; }

  /// Lowercase whitespace tokenization over the closed vocabulary;
  /// unknown words map to <unk>.
  std::vector<int> tokenize(const std::string& text) const;

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
  int base_size_ = 0;
};

/// Toy learned-embedding text encoder: token + positional embeddings and a
/// single pre-LN self-attention mixing layer. Frozen after base pretraining.
class TextEncoder {
 public:
  TextEncoder() = default;
  TextEncoder(int text_dim, int max_len, Vocabulary vocab, std::uint64_t seed);

  int dim() const { return D_; }
  int max_len() const { return L_; }
  const Vocabulary& vocab() const { return vocab_; }
  Vocabulary& vocab() { return vocab_; }

  /// Pads/truncates to max_len. `delta` optionally supplies embedding rows
  /// for ids >= vocab().base_size() (a (n_placeholder, D) leaf); those rows
  /// receive gradients during textual inversion. Throws VocabError on
  /// out-of-range ids.
  ag::Var encode_ids(const std::vector<int>& ids, const ag::Var& delta = nullptr) const;
  ag::Var encode(const std::string& text, const ag::Var& delta = nullptr) const;
  Tensor encode_value(const std::string& text, const Tensor* delta = nullptr) const;

  /// Embedding row of a base-vocabulary word (copied), for textual-inversion
  /// initialization.
  Tensor embedding_row(const std::string& word) const;

  std::map<std::string, ag::Var>& params() { return params_; }
  const std::map<std::string, ag::Var>& params() const { return params_; }

 private:
  int D_ = 0;
  int L_ = 0;
  int heads_ = 4;
  Vocabulary vocab_;
  std::map<std::string, ag::Var> params_;
};

}  // namespace motionlab
