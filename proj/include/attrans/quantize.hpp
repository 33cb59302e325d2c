// attrans/quantize.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Post-training 8-bit weight quantization. Symmetric per-tensor scheme:
// scale = max|w| / 127 (1 when the tensor is all zero), data =
// round-half-away-from-zero(w / scale) clamped to [-127, 127]. Weight
// matrices (rank >= 2) are quantized; biases and normalization vectors
// stay at full precision.

#pragma once

#include <cstdint>

#include "attrans/checkpoint.hpp"

namespace attrans {

// Per-entry round-trip bound: |w - scale * q| <= scale / 2.
QuantizedTensor quantize_tensor(const Tensor& t);
Tensor dequantize(const QuantizedTensor& q);

// Quantizes every rank >= 2 entry of a float checkpoint. Quantizing an
// already quantized checkpoint is an error.
Checkpoint quantize_weights(const Checkpoint& ckpt);

}  // namespace attrans
