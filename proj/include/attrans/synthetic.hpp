// attrans/synthetic.hpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0
//
// Synthetic transduction task: each token is rendered as a distinctive
// multi-frame feature trajectory plus noise, separated by short silence
// margins. Alignments are monotonic by construction, tokens never
// include blank, and a dataset is a pure function of config and seed.

#pragma once

#include <cstdint>
#include <utility>

#include "attrans/configfile.hpp"
#include "attrans/tensor.hpp"

namespace attrans {

struct SyntheticTaskConfig {
  std::size_t vocab = 16;
  std::size_t feature_dim = 16;
  std::size_t min_frames = 96;   // utterance length range, frames
  std::size_t max_frames = 160;
  std::size_t min_tokens = 2;    // tokens per utterance
  std::size_t max_tokens = 4;
  double noise = 0.05;
  std::uint64_t seed = 7;

  void validate() const;
  static SyntheticTaskConfig from_map(const KeyValues& kv);
};

struct Utterance {
  Tensor features;          // (T x feature_dim)
  std::vector<int> tokens;  // ids in 1..vocab
  // Frame range [begin, end) rendered for each token, in order.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
};

// Deterministic trajectory for one token at a given block length.
Tensor token_pattern(const SyntheticTaskConfig& cfg, int token, std::size_t len);

// `salt` distinguishes disjoint splits (train/test) under one seed.
std::vector<Utterance> generate_synthetic_dataset(const SyntheticTaskConfig& cfg,
                                                  std::size_t count,
                                                  std::uint64_t salt = 0);

}  // namespace attrans
