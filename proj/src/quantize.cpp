// attrans/quantize.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/quantize.hpp"

#include <cmath>

namespace attrans {

QuantizedTensor quantize_tensor(const Tensor& t) {
  double max_abs = 0.0;
  for (double x : t.data()) {
    require(!std::isnan(x), "quantize: NaN weight");
    max_abs = std::max(max_abs, std::abs(x));
  }
  QuantizedTensor q;
  q.shape = t.shape();
  q.scale = max_abs == 0.0 ? 1.0 : max_abs / 127.0;
  q.data.reserve(t.size());
  for (double x : t.data()) {
    long v = std::lround(x / q.scale);  // rounds halves away from zero
    if (v > 127) v = 127;
    if (v < -127) v = -127;
    q.data.push_back(static_cast<std::int8_t>(v));
  }
  return q;
}

Tensor dequantize(const QuantizedTensor& q) {
  Tensor out(q.shape);
  require(out.size() == q.data.size(), "dequantize: shape/data mismatch");
  for (std::size_t i = 0; i < q.data.size(); ++i) {
    out[i] = q.scale * static_cast<double>(q.data[i]);
  }
  return out;
}

Checkpoint quantize_weights(const Checkpoint& ckpt) {
  require(!ckpt.any_quantized(), "quantize_weights: checkpoint already quantized");
  Checkpoint out;
  out.config = ckpt.config;
  for (const CheckpointEntry& e : ckpt.entries) {
    CheckpointEntry ne;
    ne.name = e.name;
    if (e.dense.rank() >= 2) {
      ne.quantized = true;
      ne.q8 = quantize_tensor(e.dense);
    } else {
      ne.dense = e.dense;
    }
    out.entries.push_back(std::move(ne));
  }
  return out;
}

}  // namespace attrans
