// Copyright 2026 The cgnerf Authors
// SPDX-License-Identifier: Apache-2.0

// Versioned binary checkpoints.
//
//   "CGNF" | u32 version | u64 payload bytes | payload | u32 CRC-32(payload)
//
// The payload holds the config echo, the step, the RNG state and a list of
// named tensors (name, dtype, rank, extents, little-endian float64 values).
// All integers are little-endian; strings are u64 length + bytes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgnerf/nn.hpp"
#include "cgnerf/tensor.hpp"

namespace cgnerf {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class CheckpointVersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointTruncatedError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointChecksumError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};
class CheckpointMismatchError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::string config;
  std::int64_t step = 0;
  std::string rng_state;
  std::vector<NamedTensor> tensors;

  const NamedTensor& find(const std::string& name) const;
  /// Appends every parameter of `set` with `prefix` prepended to its name.
  void add_all(const std::string& prefix, const ParameterSet& set);
  void add(std::string name, const Tensor& t);
  /// Copies values into `t`, throwing CheckpointMismatchError on shape conflicts.
  void restore(const std::string& name, Tensor& t) const;
  void restore_all(const std::string& prefix, ParameterSet& set) const;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);
/// Atomic write (temporary file + rename).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cgnerf
