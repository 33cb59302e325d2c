// tests/decode_test.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "attrans/stream.hpp"
#include "testutil.hpp"

using namespace attrans;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.feature_dim = 4;
  cfg.n_p = 2;
  cfg.n_lstm = 1;
  cfg.d = 8;
  cfg.d_dec = 6;
  cfg.n_att = 2;
  cfg.tau = 1;
  cfg.chunk_width = 3;
  cfg.vocab = 5;
  return cfg;
}

Tensor random_features(std::mt19937_64& rng, std::size_t T, std::size_t F) {
  Tensor t({T, F});
  testing::fill_uniform(t, rng, -1.5, 1.5);
  return t;
}

}  // namespace

TEST_CASE("beam of one equals greedy, tokens and score") {
  ModelConfig cfg = small_config();
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    ModelParams params(cfg);
    params.init(seed);
    std::mt19937_64 rng(seed * 100 + 9);
    for (int utt = 0; utt < 4; ++utt) {
      Tensor features = random_features(rng, 20 + 7 * utt, cfg.feature_dim);
      GreedyResult greedy = greedy_decode_scored(params, features);
      StreamResult beam1 = decode_utterance(params, features, 1);
      CHECK(beam1.tokens == greedy.tokens);
      CHECK(beam1.log_prob == greedy.log_prob);
    }
  }
}

TEST_CASE("greedy decoding is deterministic and bounded by u_max per chunk") {
  ModelConfig cfg = small_config();
  ModelParams params(cfg);
  params.init(9);
  std::mt19937_64 rng(10);
  Tensor features = random_features(rng, 32, cfg.feature_dim);

  auto a = greedy_decode(params, features);
  auto b = greedy_decode(params, features);
  CHECK(a == b);

  // T_enc = 8, w = 3 -> C = 3 chunks; at most u_max emissions per chunk.
  std::size_t u_max = 2;
  auto capped = greedy_decode(params, features, u_max);
  CHECK(capped.size() <= 3 * u_max);
}

TEST_CASE("blank-dominant model yields an empty transcript with blank mass") {
  ModelConfig cfg = small_config();
  ModelParams params(cfg);
  params.init(11);
  params.joint.out_b.value[kBlankId] = 25.0;  // blank wins everywhere

  std::mt19937_64 rng(12);
  Tensor features = random_features(rng, 24, cfg.feature_dim);
  StreamResult r = decode_utterance(params, features, 4);
  CHECK(r.tokens.empty());
  CHECK(r.log_prob < 0.0);
  CHECK(r.log_prob > -1e-3);  // almost all mass on blank at every chunk
}

TEST_CASE("never-blank model hits the emission cap and still terminates") {
  ModelConfig cfg = small_config();
  ModelParams params(cfg);
  params.init(13);
  params.joint.out_b.value[kBlankId] = -50.0;  // tokens always beat blank

  std::mt19937_64 rng(14);
  Tensor features = random_features(rng, 24, cfg.feature_dim);  // C = 2
  std::size_t u_max = 8;
  auto tokens = greedy_decode(params, features, u_max);
  CHECK(tokens.size() == 2 * u_max);  // exactly u_max per chunk, forced close
}

TEST_CASE("beam invariants: sorted, unique prefixes, bounded size") {
  ModelConfig cfg = small_config();
  ModelParams params(cfg);
  params.init(15);
  std::mt19937_64 rng(16);

  Tape tape(false);
  auto enc = encode(tape, params, random_features(rng, 40, cfg.feature_dim));
  auto chunks = chunk_encoder_outputs(enc, cfg.chunk_width);
  Beam beam = initial_beam(tape, params);
  for (const auto& chunk : chunks.chunks) {
    ChunkContext ctx = make_chunk_context(tape, params, chunk);
    beam = beam_search_chunk(tape, params, beam, ctx, 4, 8);
    CHECK(!beam.empty());
    CHECK(beam.size() <= 4);
    for (std::size_t i = 0; i < beam.size(); ++i) {
      CHECK(beam[i].log_prob <= 0.0);
      for (std::size_t j = i + 1; j < beam.size(); ++j) {
        CHECK(beam[i].prefix != beam[j].prefix);
        CHECK(beam[i].log_prob >= beam[j].log_prob);
      }
    }
  }
}

TEST_CASE("merging duplicate prefixes never lowers the merged score") {
  // log-add lower bound, exercised through the search: run with B = 8 and
  // check the best score is at least the B = 1 (greedy path) score.
  ModelConfig cfg = small_config();
  for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
    ModelParams params(cfg);
    params.init(seed);
    std::mt19937_64 rng(seed + 1000);
    Tensor features = random_features(rng, 28, cfg.feature_dim);
    double b1 = decode_utterance(params, features, 1).log_prob;
    double b8 = decode_utterance(params, features, 8).log_prob;
    CHECK(b8 >= b1 - 1e-12);
  }
}

TEST_CASE("chunk width covering the whole encoder output still decodes") {
  // w = len(encoder output) turns the chunk attention into whole-sequence
  // attention, one grid column per utterance.
  ModelConfig cfg = small_config();
  cfg.chunk_width = 64;  // T_enc <= 10 for these inputs
  ModelParams params(cfg);
  params.init(29);
  std::mt19937_64 rng(30);
  Tensor features = random_features(rng, 36, cfg.feature_dim);
  StreamResult wide = decode_utterance(params, features, 4);
  CHECK(wide.log_prob <= 0.0);

  ModelConfig narrow_cfg = small_config();
  ModelParams narrow(narrow_cfg);
  narrow.init(29);
  StreamResult chunked = decode_utterance(narrow, features, 4);
  CHECK(chunked.log_prob <= 0.0);  // both modes run on the same weights
}

TEST_CASE("empty beam is rejected") {
  ModelConfig cfg = small_config();
  ModelParams params(cfg);
  params.init(1);
  Tape tape(false);
  std::vector<Value> frames = {tape.constant(Tensor({cfg.d}))};
  ChunkContext ctx = make_chunk_context(tape, params, frames);
  Beam empty;
  CHECK_THROWS_AS(beam_search_chunk(tape, params, empty, ctx, 4, 8),
                  std::invalid_argument);
}
