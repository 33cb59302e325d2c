// attrans/tape.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Reverse-mode automatic differentiation over a single recorded forward
// pass. A tape is single-threaded; distinct tapes may run on distinct
// threads. backward() takes a scalar root, runs nodes in reverse
// creation order, and accumulates into Parameter::grad. A tape built
// with grad_enabled = false records values only, which is the inference
// path (same ops, no closures).

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "attrans/tensor.hpp"

namespace attrans {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
struct Value {
  Tape* tape = nullptr;
  std::uint32_t index = 0;
  bool valid() const { return tape != nullptr; }
};

class Tape {
 public:
  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t node_count() const { return nodes_.size(); }

  Value constant(Tensor v);
  Value constant_scalar(double v);
  // Registers a parameter leaf; repeated calls for the same parameter
  // return the same node. Parameters with requires_grad = false behave
  // as constants.
  Value param(Parameter& p);

  const Tensor& value(Value v) const;
  // Gradient of the most recent backward() at this node (zeros if the
  // node did not influence the root).
  Tensor grad(Value v) const;

  // Elementwise and linear-algebra ops. All check shape compatibility
  // and that operands live on this tape.
  Value add(Value a, Value b);
  Value mul(Value a, Value b);
  Value scale(Value a, double k);
  Value matvec(Value w, Value x);                 // (m x n) * (n) -> (m)
  Value row(Value table, std::size_t r);          // (m x n) -> (n)
  Value concat(std::span<const Value> parts);     // vectors -> vector
  Value sigmoid(Value x);
  Value tanh(Value x);
  Value softmax(Value x);
  Value dot(Value a, Value b);                    // -> scalar
  Value weighted_sum(Value w, std::span<const Value> xs);  // sum_i w_i xs_i
  Value layer_norm(Value x, Value gain, Value bias, double epsilon);
  Value sum(Value x);                             // -> scalar

  // Node with an externally computed value and custom backward. The
  // callback receives the upstream gradient and one writable gradient
  // buffer per parent, already shaped and zero-initialized.
  Value custom(Tensor value, std::vector<Value> parents,
               std::function<void(const Tensor& upstream,
                                  std::span<Tensor* const> parent_grads)>
                   backward);

  // Seeds the root with gradient 1 and sweeps the tape once. The root
  // must be a finite scalar; a second backward on the same tape is an
  // error.
  void backward(Value root);

 private:
  struct Node {
    Tensor value;
    Tensor grad;                 // lazily allocated on first contribution
    std::function<void()> back;  // empty for leaves and constants
  };

  Value push(Tensor value);
  Tensor& grad_buf(std::uint32_t idx);
  bool has_grad(std::uint32_t idx) const { return !nodes_[idx].grad.empty(); }
  const Tensor& val(std::uint32_t idx) const { return nodes_[idx].value; }
  std::uint32_t idx_of(Value v, const char* op) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, std::uint32_t> param_nodes_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

}  // namespace attrans
