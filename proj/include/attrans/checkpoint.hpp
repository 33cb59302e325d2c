// attrans/checkpoint.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Versioned checkpoint container: a config record followed by named
// tensors. Dense tensors are stored as 32-bit IEEE-754 little-endian;
// quantized tensors as signed 8-bit data with a per-tensor scale. Float
// and quantized checkpoints share the container and load into the same
// model topology.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "attrans/model.hpp"

namespace attrans {

struct QuantizedTensor {
  std::vector<std::int8_t> data;
  double scale = 1.0;
  std::vector<std::size_t> shape;

  std::size_t size() const { return data.size(); }
};

struct CheckpointEntry {
  std::string name;
  bool quantized = false;
  Tensor dense;        // valid when !quantized
  QuantizedTensor q8;  // valid when quantized
};

struct Checkpoint {
  ModelConfig config;
  std::vector<CheckpointEntry> entries;

  bool any_quantized() const;
};

Checkpoint checkpoint_from_params(ModelParams& params);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::string& path);

// Rebuilds parameters, dequantizing as needed. Missing tensors, extra
// tensors or shape mismatches are topology errors.
ModelParams params_from_checkpoint(const Checkpoint& ckpt);

// Convenience round trips.
void save_params(const std::string& path, ModelParams& params);
ModelParams load_params(const std::string& path, bool* was_quantized = nullptr);

}  // namespace attrans
