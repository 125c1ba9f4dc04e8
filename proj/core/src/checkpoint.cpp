// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#include "motionlab/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "motionlab/errors.hpp"

namespace motionlab {

namespace {

// Files are little-endian on disk. On a big-endian host the payload would
// need byte swapping; this project only targets little-endian machines.
static_assert(std::endian::native == std::endian::little, "little-endian host required");

}  // namespace

const Tensor& Checkpoint::get(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ContainerError("checkpoint: no entry named '" + name + "'");
  return it->second;
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json header;
  header["entries"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : tensors) {
    nlohmann::json e;
    e["name"] = name;
    e["dtype"] = "f32";
    e["shape"] = t.shape;
    e["byte_offset"] = offset;
    header["entries"].push_back(std::move(e));
    offset += static_cast<std::uint64_t>(t.numel()) * sizeof(float);
  }
  header["metadata"] = metadata;

  const std::string hs = header.dump();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ContainerError("checkpoint: cannot open '" + path + "' for writing");
  const std::uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, t] : tensors)
    f.write(reinterpret_cast<const char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(float)));
  f.flush();
  if (!f) throw ContainerError("checkpoint: short write to '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ContainerError("checkpoint: cannot open '" + path + "'");
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!f || hlen == 0 || hlen > (1ull << 30)) throw ContainerError("checkpoint: bad header length");
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw ContainerError("checkpoint: truncated header");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hs);
  } catch (const nlohmann::json::exception& e) {
    throw ContainerError(std::string("checkpoint: corrupt header JSON: ") + e.what());
  }

  Checkpoint ck;
  if (header.contains("metadata"))
    ck.metadata = header["metadata"].get<std::map<std::string, std::string>>();
  if (!header.contains("entries") || !header["entries"].is_array())
    throw ContainerError("checkpoint: header missing entries array");

  const std::streampos payload_start = f.tellg();
  for (const auto& e : header["entries"]) {
    const auto name = e.at("name").get<std::string>();
    const auto dtype = e.at("dtype").get<std::string>();
    if (dtype != "f32") throw ContainerError("checkpoint: unsupported dtype '" + dtype + "'");
    const auto shape = e.at("shape").get<std::vector<int>>();
    const auto off = e.at("byte_offset").get<std::uint64_t>();
    Tensor t(shape);
    f.seekg(payload_start + static_cast<std::streamoff>(off));
    f.read(reinterpret_cast<char*>(t.v.data()),
           static_cast<std::streamsize>(t.v.size() * sizeof(float)));
    if (!f) throw ContainerError("checkpoint: truncated payload for entry '" + name + "'");
    ck.tensors[name] = std::move(t);
  }
  return ck;
}

}  // namespace motionlab
