// attrans/synthetic.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/synthetic.hpp"

#include <cmath>
#include <random>

namespace attrans {

namespace {

constexpr std::size_t kMinBlock = 16;    // frames per token, lower bound
constexpr std::size_t kMaxMargin = 10;   // silence lead/tail upper bound

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a + 0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

}  // namespace

void SyntheticTaskConfig::validate() const {
  require(vocab >= 2, "synthetic task: vocab must be at least 2");
  require(feature_dim >= 1, "synthetic task: feature_dim must be positive");
  require(min_frames <= max_frames, "synthetic task: invalid frame range");
  require(min_tokens >= 1 && min_tokens <= max_tokens,
          "synthetic task: invalid token range");
  require(noise >= 0.0, "synthetic task: noise must be non-negative");
  require(min_frames >= max_tokens * kMinBlock + 2 * kMaxMargin,
          "synthetic task: frame range too small for the token range");
}

SyntheticTaskConfig SyntheticTaskConfig::from_map(const KeyValues& kv) {
  SyntheticTaskConfig cfg;
  cfg.vocab = get_size(kv, "task.vocab", cfg.vocab);
  cfg.feature_dim = get_size(kv, "task.feature_dim", cfg.feature_dim);
  cfg.min_frames = get_size(kv, "task.min_frames", cfg.min_frames);
  cfg.max_frames = get_size(kv, "task.max_frames", cfg.max_frames);
  cfg.min_tokens = get_size(kv, "task.min_tokens", cfg.min_tokens);
  cfg.max_tokens = get_size(kv, "task.max_tokens", cfg.max_tokens);
  cfg.noise = get_double(kv, "task.noise", cfg.noise);
  cfg.seed = get_u64(kv, "task.seed", cfg.seed);
  cfg.validate();
  return cfg;
}

Tensor token_pattern(const SyntheticTaskConfig& cfg, int token, std::size_t len) {
  require(token >= 1 && token <= static_cast<int>(cfg.vocab),
          "token_pattern: token out of range");
  require(len >= 1, "token_pattern: empty block");
  std::mt19937_64 rng(mix(cfg.seed, static_cast<std::uint64_t>(token)));
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> a(cfg.feature_dim), b(cfg.feature_dim);
  for (double& x : a) x = dist(rng);
  for (double& x : b) x = dist(rng);
  Tensor out({len, cfg.feature_dim});
  for (std::size_t j = 0; j < len; ++j) {
    double theta = M_PI * static_cast<double>(j) / static_cast<double>(len);
    double ca = std::cos(theta), sb = std::sin(theta);
    for (std::size_t f = 0; f < cfg.feature_dim; ++f) {
      out.at(j, f) = ca * a[f] + sb * b[f];
    }
  }
  return out;
}

std::vector<Utterance> generate_synthetic_dataset(const SyntheticTaskConfig& cfg,
                                                  std::size_t count,
                                                  std::uint64_t salt) {
  cfg.validate();
  std::vector<Utterance> data;
  data.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(mix(mix(cfg.seed, salt), i));
    std::size_t frames =
        std::uniform_int_distribution<std::size_t>(cfg.min_frames, cfg.max_frames)(rng);
    std::size_t n_tokens =
        std::uniform_int_distribution<std::size_t>(cfg.min_tokens, cfg.max_tokens)(rng);
    std::size_t lead = std::uniform_int_distribution<std::size_t>(4, kMaxMargin)(rng);
    std::size_t tail = std::uniform_int_distribution<std::size_t>(4, kMaxMargin)(rng);

    std::size_t content = frames - lead - tail;
    std::size_t base = content / n_tokens;
    std::size_t rem = content % n_tokens;

    Utterance utt;
    utt.features = Tensor({frames, cfg.feature_dim});
    std::size_t pos = lead;
    for (std::size_t t = 0; t < n_tokens; ++t) {
      int token = std::uniform_int_distribution<int>(1, static_cast<int>(cfg.vocab))(rng);
      std::size_t block = base + (t < rem ? 1 : 0);
      Tensor pattern = token_pattern(cfg, token, block);
      for (std::size_t j = 0; j < block; ++j) {
        for (std::size_t f = 0; f < cfg.feature_dim; ++f) {
          utt.features.at(pos + j, f) = pattern.at(j, f);
        }
      }
      utt.tokens.push_back(token);
      utt.segments.emplace_back(pos, pos + block);
      pos += block;
    }
    if (cfg.noise > 0.0) {
      std::normal_distribution<double> n(0.0, cfg.noise);
      for (double& x : utt.features.data()) x += n(rng);
    }
    data.push_back(std::move(utt));
  }
  return data;
}

}  // namespace attrans
