// attrans/tensor.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "attrans/common.hpp"

namespace attrans {

std::size_t shape_size(std::span<const std::size_t> shape);

// Dense n-dimensional array of doubles, row-major. Everything numeric in
// this project runs at 64-bit; checkpoints narrow to 32-bit on disk
// (see checkpoint.hpp).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor scalar(double v);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t rows() const { return dim(0); }
  std::size_t cols() const { return dim(1); }
  bool empty() const { return data_.empty() && shape_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 2-D access.
  double& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  void fill(double v);
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  bool all_finite() const;

  bool requires_grad = false;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

// Named tensor plus its gradient buffer. Names are unique within a
// parameter bundle; gradients accumulate across backward passes until
// zero_grad().
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string name, std::vector<std::size_t> shape);

  void zero_grad() { grad.fill(0.0); }
};

}  // namespace attrans
