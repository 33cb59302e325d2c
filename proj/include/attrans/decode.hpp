// attrans/decode.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Chunk-synchronous decoding. Beam search advances one encoder chunk at
// a time: within a chunk a hypothesis either emits tokens (advancing
// the prediction network, at most u_max emissions per chunk) or emits
// blank, which finalizes it for this chunk. Survivors are the top-B
// finalized hypotheses; duplicate prefixes merge by log-add. Per-step
// summation over prefixes is intentionally skipped.

#pragma once

#include "attrans/model.hpp"

namespace attrans {

struct Hypothesis {
  std::vector<int> prefix;  // blank-free token ids
  double log_prob = 0.0;
  PredState state;          // prediction-network state after `prefix`
  Value s;                  // cached prediction output for `prefix`
};

// Sorted by log_prob descending; prefixes unique; size <= B.
using Beam = std::vector<Hypothesis>;

// One hypothesis: empty prefix, log-probability 0, <sos> state.
Beam initial_beam(Tape& tape, ModelParams& params);

Beam beam_search_chunk(Tape& tape, ModelParams& params, const Beam& beam,
                       const ChunkContext& chunk, std::size_t B,
                       std::size_t u_max, AttentionProbe* probe = nullptr);

struct GreedyResult {
  std::vector<int> tokens;
  double log_prob = 0.0;
};

// Per chunk, repeatedly takes the argmax of the joint distribution:
// emits and advances the prediction network while the argmax is a
// token, moves to the next chunk on blank, and force-closes after
// u_max emissions. Equals beam search with B = 1.
GreedyResult greedy_decode_scored(ModelParams& params, const Tensor& features,
                                  std::size_t u_max = 8);
std::vector<int> greedy_decode(ModelParams& params, const Tensor& features,
                               std::size_t u_max = 8);

// log softmax of a logits node, as plain doubles.
std::vector<double> log_probs_of(Tape& tape, Value logits);

inline constexpr std::size_t kDefaultUMax = 8;

}  // namespace attrans
