// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "motionlab/checkpoint.hpp"
#include "motionlab/errors.hpp"

using namespace motionlab;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
  return (fs::temp_directory_path() / ("motionlab_ckpt_" + name)).string();
}

}  // namespace

TEST_CASE("checkpoint round-trip is bit-exact") {
  Rng rng(1);
  Checkpoint ck;
  ck.put("alpha", rng.randn({3, 4}));
  ck.put("beta.weight", rng.randn({2, 5, 1}));
  ck.put("empty", Tensor({0}));
  ck.metadata["kind"] = "test";
  ck.metadata["note"] = "unicode \xc3\xa9 and spaces";

  const std::string path = temp_path("roundtrip.ckpt");
  ck.save(path);
  const Checkpoint back = Checkpoint::load(path);

  CHECK(back.tensors.size() == 3);
  CHECK(back.metadata == ck.metadata);
  for (const auto& [name, t] : ck.tensors) {
    REQUIRE(back.has(name));
    CHECK(back.get(name).shape == t.shape);
    CHECK(std::memcmp(back.get(name).v.data(), t.v.data(), t.v.size() * sizeof(float)) == 0);
  }
  fs::remove(path);
}

TEST_CASE("checkpoint on-disk layout matches the documented format") {
  Checkpoint ck;
  ck.put("w", Tensor({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f}));
  const std::string path = temp_path("layout.ckpt");
  ck.save(path);

  std::ifstream f(path, std::ios::binary);
  std::uint64_t header_len = 0;
  f.read(reinterpret_cast<char*>(&header_len), 8);
  REQUIRE(header_len > 0);
  std::string header(header_len, '\0');
  f.read(header.data(), static_cast<std::streamsize>(header_len));
  const auto j = nlohmann::json::parse(header);
  REQUIRE(j.contains("entries"));
  REQUIRE(j["entries"].size() == 1);
  const auto& e = j["entries"][0];
  CHECK(e["name"] == "w");
  CHECK(e["dtype"] == "f32");
  CHECK(e["shape"] == nlohmann::json({2, 2}));
  CHECK(e["byte_offset"] == 0);

  float payload[4];
  f.read(reinterpret_cast<char*>(payload), sizeof(payload));
  CHECK(payload[0] == 1.0f);
  CHECK(payload[3] == 4.0f);
  fs::remove(path);
}

TEST_CASE("checkpoint rejects corrupt containers") {
  const std::string path = temp_path("corrupt.ckpt");

  SUBCASE("missing file") { CHECK_THROWS_AS(Checkpoint::load(path + ".nope"), ContainerError); }

  SUBCASE("truncated payload") {
    Checkpoint ck;
    ck.put("w", Tensor::full({64}, 1.0f));
    ck.save(path);
    fs::resize_file(path, fs::file_size(path) - 32);
    CHECK_THROWS_AS(Checkpoint::load(path), ContainerError);
  }

  SUBCASE("garbage header") {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    const std::uint64_t len = 10;
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write("not json!!", 10);
    f.close();
    CHECK_THROWS_AS(Checkpoint::load(path), ContainerError);
  }

  SUBCASE("header length beyond file") {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    const std::uint64_t len = 1 << 20;
    f.write(reinterpret_cast<const char*>(&len), 8);
    f.write("{}", 2);
    f.close();
    CHECK_THROWS_AS(Checkpoint::load(path), ContainerError);
  }

  fs::remove(path);
}

TEST_CASE("checkpoint get on a missing entry throws") {
  Checkpoint ck;
  CHECK_THROWS_AS(ck.get("absent"), ContainerError);
}
