// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "motionlab/tensor.hpp"

namespace motionlab {

/// Named-tensor container shared by model checkpoints, adapter files and
/// token-delta files.
///
/// On disk: an 8-byte little-endian header length, a UTF-8 JSON header
/// listing {name, dtype:"f32", shape, byte_offset} entries plus free-form
/// metadata, then the raw row-major little-endian float32 payloads.
/// Round-trips are bit-exact.
class Checkpoint {
 public:
  std::map<std::string, Tensor> tensors;
  std::map<std::string, std::string> metadata;

  void put(const std::string& name, Tensor t) { tensors[name] = std::move(t); }
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return tensors.count(name) > 0; }

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace motionlab
