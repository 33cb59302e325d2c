// attrans/logmath.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/logmath.hpp"

#include <algorithm>
#include <cmath>

#include "attrans/common.hpp"

namespace attrans {

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double logsumexp(std::span<const double> values) {
  require(!values.empty(), "logsumexp: empty input");
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) {
    if (v != kNegInf) acc += std::exp(v - hi);
  }
  return hi + std::log(acc);
}

std::vector<double> softmax(std::span<const double> logits) {
  require(!logits.empty(), "softmax: empty input");
  double hi = kNegInf;
  for (double v : logits) {
    require(!std::isnan(v), "softmax: NaN logit");
    hi = std::max(hi, v);
  }
  require(hi != kNegInf, "softmax: all logits are -inf");
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - hi);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

void log_softmax_inplace(std::span<double> logits) {
  double z = logsumexp(logits);
  for (double& v : logits) v -= z;
}

}  // namespace attrans
