// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "motionlab/errors.hpp"
#include "motionlab/text.hpp"

using namespace motionlab;

TEST_CASE("standard vocabulary basics") {
  const Vocabulary v = Vocabulary::standard();
  CHECK(v.id("<pad>") == Vocabulary::kPad);
  CHECK(v.id("<unk>") == Vocabulary::kUnk);
  CHECK(v.contains("red"));
  CHECK(v.contains("circle"));
  CHECK(v.contains("bouncing"));
  CHECK(v.base_size() == v.size());
  CHECK(v.placeholder_count() == 0);
  CHECK(v.id("zebra") == Vocabulary::kUnk);
  CHECK(v.word(v.id("square")) == "square");
}

TEST_CASE("tokenize lowercases and maps unknown words") {
  const Vocabulary v = Vocabulary::standard();
  const auto ids = v.tokenize("A Red SQUARE moving right");
  REQUIRE(ids.size() == 5);
  CHECK(ids[0] == v.id("a"));
  CHECK(ids[1] == v.id("red"));
  CHECK(ids[2] == v.id("square"));
  CHECK(ids[3] == v.id("moving"));
  CHECK(ids[4] == v.id("right"));
  const auto unk = v.tokenize("zebra stripes");
  CHECK(unk == std::vector<int>{Vocabulary::kUnk, Vocabulary::kUnk});
  CHECK(v.tokenize("").empty());
}

TEST_CASE("placeholders extend the vocabulary past base_size") {
  Vocabulary v = Vocabulary::standard();
  const int base = v.base_size();
  const int id = v.add_placeholder("<s0>");
  CHECK(id == base);
  CHECK(v.placeholder_count() == 1);
  CHECK(v.base_size() == base);
  CHECK(v.id("<s0>") == id);
  CHECK_THROWS_AS(v.add_placeholder("<s0>"), VocabError);
  CHECK_THROWS_AS(v.add_placeholder("red"), VocabError);
}

TEST_CASE("text encoder output shape and determinism") {
  const int D = 16, L = 8;
  TextEncoder a(D, L, Vocabulary::standard(), 7);
  TextEncoder b(D, L, Vocabulary::standard(), 7);
  TextEncoder c(D, L, Vocabulary::standard(), 8);

  const Tensor ea = a.encode_value("a red square moving right");
  CHECK(ea.shape == std::vector<int>{L, D});
  const Tensor eb = b.encode_value("a red square moving right");
  CHECK(hash_tensor(ea) == hash_tensor(eb));
  const Tensor ec = c.encode_value("a red square moving right");
  CHECK(hash_tensor(ea) != hash_tensor(ec));
  // padding: short and empty prompts still produce (L, D)
  CHECK(a.encode_value("").shape == std::vector<int>{L, D});
  CHECK(a.encode_value("red").shape == std::vector<int>{L, D});
  // truncation beyond L
  CHECK(a.encode_value("a a a a a a a a a a a a").shape == std::vector<int>{L, D});
}

TEST_CASE("different prompts encode differently") {
  TextEncoder enc(16, 8, Vocabulary::standard(), 7);
  CHECK(hash_tensor(enc.encode_value("a red square")) !=
        hash_tensor(enc.encode_value("a blue circle")));
}

TEST_CASE("encode graph value equals encode_value") {
  TextEncoder enc(16, 8, Vocabulary::standard(), 3);
  const Tensor direct = enc.encode_value("a green triangle moving up");
  const Tensor graph = enc.encode("a green triangle moving up")->val;
  CHECK(hash_tensor(direct) == hash_tensor(graph));
}

TEST_CASE("placeholder ids need delta rows") {
  TextEncoder enc(16, 8, Vocabulary::standard(), 3);
  const int pid = enc.vocab().add_placeholder("<s0>");
  CHECK_THROWS_AS(enc.encode_ids({pid}), VocabError);
  Rng rng(1);
  ag::Var delta = ag::leaf(rng.randn({1, 16}));
  CHECK(enc.encode_ids({pid}, delta)->val.shape == std::vector<int>{8, 16});
  CHECK_THROWS_AS(enc.encode_ids({enc.vocab().size() + 1}, delta), VocabError);
}

TEST_CASE("embedding_row returns the table row for known words only") {
  TextEncoder enc(16, 8, Vocabulary::standard(), 3);
  const Tensor row = enc.embedding_row("red");
  CHECK(row.shape == std::vector<int>{16});
  CHECK_THROWS_AS(enc.embedding_row("zebra"), VocabError);
}
