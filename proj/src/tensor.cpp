// attrans/tensor.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/tensor.hpp"

#include <cmath>

namespace attrans {

void contract_fail(const std::string& msg) {
  throw std::invalid_argument(msg);
}

std::size_t shape_size(std::span<const std::size_t> shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_size(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  require(shape_size(shape_) == data_.size(),
          "Tensor: product(shape) must equal data length");
}

Tensor Tensor::scalar(double v) {
  return Tensor({1}, {v});
}

std::size_t Tensor::dim(std::size_t i) const {
  require(i < shape_.size(), "Tensor::dim: axis out of range");
  return shape_[i];
}

void Tensor::fill(double v) {
  for (double& x : data_) x = v;
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Parameter::Parameter(std::string name, std::vector<std::size_t> shape)
    : name(std::move(name)), value(shape), grad(std::move(shape)) {
  value.requires_grad = true;
}

}  // namespace attrans
