// attrans/layers.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Neural building blocks: LSTM cell, pyramidal pairwise subsampling,
// layer normalization, and windowed multi-head self-attention.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "attrans/tape.hpp"

namespace attrans {

// One LSTM cell. Gate matrices act on the concatenation [x; h].
struct LstmCellParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Parameter wi, wf, wg, wo;  // each (hidden_dim, input_dim + hidden_dim)
  Parameter bi, bf, bg, bo;  // each (hidden_dim)

  LstmCellParams(const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden_dim);
  void init(std::mt19937_64& rng);  // uniform +-1/sqrt(fan_in); forget bias 1
  void collect(std::vector<Parameter*>& out);
};

struct LstmState {
  Value h, c;
};

LstmState zero_lstm_state(Tape& tape, std::size_t hidden_dim);

// Standard LSTM recurrence. Returns the new (h, c); h is the output.
LstmState lstm_step(Tape& tape, LstmCellParams& params, Value x,
                    const LstmState& state);

// Concatenates adjacent output pairs, halving sequence length. An odd
// trailing frame is dropped (floor rule).
std::vector<Value> pyramid_subsample(std::span<const Value> seq);

struct LayerNormParams {
  double epsilon = 1e-5;
  Parameter gain, bias;  // each (d)

  LayerNormParams(const std::string& prefix, std::size_t d, double epsilon);
  void init();  // gain 1, bias 0
  void collect(std::vector<Parameter*>& out);
};

Value layer_norm(Tape& tape, LayerNormParams& params, Value x);

// Collects attention weight vectors as they are computed; one entry per
// (position, head) in evaluation order. Each entry sums to 1.
struct AttentionProbe {
  std::vector<std::vector<double>> weights;
};

// Windowed multi-head self-attention with a residual connection and
// layer normalization on the output. context_len is the number of
// visible frames on each side at the encoder frame rate; windows are
// truncated at sequence boundaries (softmax runs over the valid scores
// only, no padding).
struct SelfAttentionParams {
  std::size_t d = 0;
  std::size_t n_att = 0;
  std::size_t context_len = 0;        // tau
  std::vector<Parameter> q, k, v;     // per head, each (d / n_att, d)
  LayerNormParams ln;

  SelfAttentionParams(const std::string& prefix, std::size_t d,
                      std::size_t n_att, std::size_t context_len,
                      double ln_epsilon);
  std::size_t head_dim() const { return d / n_att; }
  void init(std::mt19937_64& rng);
  void collect(std::vector<Parameter*>& out);
};

// Incremental application of windowed self-attention. Frames are pushed
// as they are produced; an output at position t is emitted once frame
// t + context_len exists (take_ready) or at end of stream with a
// truncated window (flush). Offline and streaming use runs the same
// arithmetic, so outputs are identical bit for bit.
class LocalAttentionStream {
 public:
  LocalAttentionStream(Tape& tape, SelfAttentionParams& params,
                       AttentionProbe* probe = nullptr);

  void push(Value frame);
  std::vector<Value> take_ready();
  std::vector<Value> flush();
  std::size_t frames_seen() const { return frames_.size(); }

 private:
  Value attend(std::size_t t);

  Tape& tape_;
  SelfAttentionParams& params_;
  AttentionProbe* probe_;
  std::vector<Value> frames_;
  std::vector<std::vector<Value>> kproj_, vproj_;  // [head][t]
  std::size_t emitted_ = 0;
};

// Whole-sequence application (push all, then drain).
std::vector<Value> local_self_attention(Tape& tape, SelfAttentionParams& params,
                                        std::span<const Value> seq,
                                        AttentionProbe* probe = nullptr);

}  // namespace attrans
