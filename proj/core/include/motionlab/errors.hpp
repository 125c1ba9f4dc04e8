// Copyright 2026 The motionlab Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace motionlab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid configuration value; message names the offending field.
struct ConfigError : Error {
  using Error::Error;
};
/// Tensor shape or dimension mismatch.
struct ShapeError : Error {
  using Error::Error;
};
/// Token id / vocabulary word out of range.
struct VocabError : Error {
  using Error::Error;
};
/// LoRA rank outside [1, min(d, k)].
struct RankError : Error {
  using Error::Error;
};
/// Unknown or duplicate adapter target.
struct SelectorError : Error {
  using Error::Error;
};
/// Malformed or truncated checkpoint container.
struct ContainerError : Error {
  using Error::Error;
};
/// Artifact fingerprint does not match the host model.
struct CompatError : Error {
  using Error::Error;
};
/// A training-stage contract was violated (e.g. temporal bypass not engaged).
struct ContractError : Error {
  using Error::Error;
};
/// Bad or missing input data.
struct DataError : Error {
  using Error::Error;
};
/// Diffusion step index ordering or range violation.
struct StepError : Error {
  using Error::Error;
};
/// Metric preconditions violated (too few frames/samples).
struct MetricError : Error {
  using Error::Error;
};
/// Synthetic-world oracle cannot produce ground truth.
struct OracleError : Error {
  using Error::Error;
};

}  // namespace motionlab
