// attrans/loss.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Transducer negative log-likelihood over the C x (U+1) chunk/label
// grid. forward_backward runs the log-space DP and produces analytic
// gradients with respect to the pre-softmax logits via edge
// occupancies; enumerate_paths is the exponential-time oracle that sums
// every alignment explicitly.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attrans/tape.hpp"

namespace attrans {

// Log-probability lattice. Entry (c, u, k) is log p_{c,u}(k), the
// log-probability of emitting symbol k (0 = blank) from chunk c after u
// labels. Every (c, u) slice is a log-distribution.
struct AlignmentGrid {
  std::size_t num_chunks = 0;   // C >= 1
  std::size_t num_labels = 0;   // U >= 0
  std::size_t vocab = 0;        // |Y|; slices have vocab + 1 entries
  std::vector<double> log_probs;  // C * (U+1) * (vocab+1)
  std::vector<int> targets;       // U entries in 1..vocab (never blank)

  AlignmentGrid() = default;
  AlignmentGrid(std::size_t C, std::size_t U, std::size_t vocab,
                std::vector<int> targets);

  std::size_t slice_len() const { return vocab + 1; }
  std::size_t index(std::size_t c, std::size_t u, std::size_t k) const {
    return (c * (num_labels + 1) + u) * slice_len() + k;
  }
  double& at(std::size_t c, std::size_t u, std::size_t k) {
    return log_probs[index(c, u, k)];
  }
  double at(std::size_t c, std::size_t u, std::size_t k) const {
    return log_probs[index(c, u, k)];
  }
  // Shapes, target range, and per-slice normalization within 1e-6.
  void validate() const;
};

struct LossResult {
  double nll = 0.0;           // from the alpha recursion
  double nll_backward = 0.0;  // from the beta recursion; equal up to roundoff
  // d nll / d logit, same layout as AlignmentGrid::log_probs. Each
  // (c, u) slice sums to zero (softmax gradient identity).
  std::vector<double> grad_logits;
};

// alpha(0,0) = 0; alpha(c,u) = logadd of the blank edge from (c-1,u)
// and the label edge from (c,u-1); nll = -(alpha(C-1,U) + final blank).
// beta runs symmetrically and the two totals must agree within 1e-6.
LossResult forward_backward(const AlignmentGrid& grid);

// Sums every interleaving of C blanks and U labels ending in blank;
// there are binom(C+U-1, U) of them. Guarded to C + U <= 14.
double enumerate_paths(const AlignmentGrid& grid,
                       std::uint64_t* path_count = nullptr);

// Number of blanks per alignment for an utterance of T frames after
// subsampling by mu (a power of two, floor-halving per stage) and
// chunking by w: C = ceil(floor_halved(T) / w).
std::size_t blank_count_per_alignment(std::size_t T, std::size_t mu,
                                      std::size_t w);

// Tape node for the loss: takes the (C x (U+1)) grid of logit vectors,
// log-softmaxes each slice, runs forward_backward, and routes the
// analytic gradient back to the logits. If `result` is non-null the
// forward-backward output is copied there.
Value transducer_nll(Tape& tape,
                     const std::vector<std::vector<Value>>& logits,
                     std::span<const int> targets, LossResult* result = nullptr);

}  // namespace attrans
