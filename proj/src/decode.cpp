// attrans/decode.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/decode.hpp"

#include <algorithm>
#include <map>

#include "attrans/logmath.hpp"

namespace attrans {

std::vector<double> log_probs_of(Tape& tape, Value logits) {
  const Tensor& z = tape.value(logits);
  std::vector<double> lp(z.data().begin(), z.data().end());
  log_softmax_inplace(lp);
  return lp;
}

Beam initial_beam(Tape& tape, ModelParams& params) {
  auto [s0, st] = predict_start(tape, params);
  Hypothesis h;
  h.log_prob = 0.0;
  h.state = std::move(st);
  h.s = s0;
  return Beam{std::move(h)};
}

namespace {

struct LevelItem {
  Hypothesis hyp;
  bool closed = false;
};

enum class CandKind { kCarried, kClose, kExtend };

struct Cand {
  double log_prob = 0.0;
  std::size_t parent = 0;
  int token = 0;  // extension token for kExtend
  CandKind kind = CandKind::kCarried;
};

// Selection order: score, then closed before open, then lexicographically
// smaller prefix. With B = 1 this reproduces greedy's argmax (blank is
// token 0, so ties prefer closing).
using CandMap = std::map<std::pair<bool, std::vector<int>>, Cand>;

void merge_cand(CandMap& cands, bool closed, std::vector<int> prefix, Cand cand) {
  auto key = std::make_pair(closed, std::move(prefix));
  auto it = cands.find(key);
  if (it == cands.end()) {
    cands.emplace(std::move(key), cand);
  } else {
    it->second.log_prob = log_add(it->second.log_prob, cand.log_prob);
  }
}

}  // namespace

Beam beam_search_chunk(Tape& tape, ModelParams& params, const Beam& beam,
                       const ChunkContext& chunk, std::size_t B,
                       std::size_t u_max, AttentionProbe* probe) {
  require(!beam.empty(), "beam_search_chunk: empty beam");
  require(B >= 1, "beam_search_chunk: beam size must be positive");

  std::vector<LevelItem> level;
  level.reserve(beam.size());
  for (const Hypothesis& h : beam) level.push_back(LevelItem{h, false});

  for (std::size_t depth = 0;; ++depth) {
    bool any_open = false;
    for (const LevelItem& item : level) {
      if (!item.closed) {
        any_open = true;
        break;
      }
    }
    if (!any_open) break;

    CandMap cands;
    for (std::size_t i = 0; i < level.size(); ++i) {
      const LevelItem& item = level[i];
      if (item.closed) {
        merge_cand(cands, true, item.hyp.prefix,
                   Cand{item.hyp.log_prob, i, 0, CandKind::kCarried});
        continue;
      }
      std::vector<double> lp =
          log_probs_of(tape, joint_logits(tape, params, chunk, item.hyp.s, probe));
      merge_cand(cands, true, item.hyp.prefix,
                 Cand{item.hyp.log_prob + lp[0], i, 0, CandKind::kClose});
      if (depth < u_max) {
        for (int k = 1; k < static_cast<int>(lp.size()); ++k) {
          std::vector<int> ext = item.hyp.prefix;
          ext.push_back(k);
          merge_cand(cands, false, std::move(ext),
                     Cand{item.hyp.log_prob + lp[static_cast<std::size_t>(k)], i, k,
                          CandKind::kExtend});
        }
      }
    }

    std::vector<std::pair<const std::pair<bool, std::vector<int>>*, const Cand*>> order;
    order.reserve(cands.size());
    for (const auto& [key, cand] : cands) order.emplace_back(&key, &cand);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
      if (a.second->log_prob != b.second->log_prob)
        return a.second->log_prob > b.second->log_prob;
      if (a.first->first != b.first->first) return a.first->first;  // closed first
      return a.first->second < b.first->second;
    });
    if (order.size() > B) order.resize(B);

    std::vector<LevelItem> next;
    next.reserve(order.size());
    for (const auto& [key, cand] : order) {
      const LevelItem& parent = level[cand->parent];
      LevelItem item;
      item.closed = key->first;
      if (cand->kind == CandKind::kExtend) {
        item.hyp.prefix = key->second;
        auto [s, st] = predict_step(tape, params, cand->token, parent.hyp.state);
        item.hyp.s = s;
        item.hyp.state = std::move(st);
      } else {
        item.hyp.prefix = parent.hyp.prefix;
        item.hyp.s = parent.hyp.s;
        item.hyp.state = parent.hyp.state;
      }
      item.hyp.log_prob = cand->log_prob;
      next.push_back(std::move(item));
    }
    level = std::move(next);
  }

  Beam out;
  out.reserve(level.size());
  for (LevelItem& item : level) out.push_back(std::move(item.hyp));
  std::sort(out.begin(), out.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.prefix < b.prefix;
  });
  return out;
}

GreedyResult greedy_decode_scored(ModelParams& params, const Tensor& features,
                                  std::size_t u_max) {
  Tape tape(false);
  std::vector<Value> enc = encode(tape, params, features);
  ChunkedEncoderOutput chunks =
      chunk_encoder_outputs(enc, params.config.chunk_width);

  auto [s0, st] = predict_start(tape, params);
  Hypothesis hyp;
  hyp.s = s0;
  hyp.state = std::move(st);

  for (const auto& chunk : chunks.chunks) {
    ChunkContext ctx = make_chunk_context(tape, params, chunk);
    for (std::size_t emitted = 0;; ++emitted) {
      std::vector<double> lp =
          log_probs_of(tape, joint_logits(tape, params, ctx, hyp.s));
      if (emitted == u_max) {
        hyp.log_prob += lp[0];
        break;
      }
      std::size_t best =
          static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
      hyp.log_prob += lp[best];
      if (best == 0) break;
      hyp.prefix.push_back(static_cast<int>(best));
      auto [s, st2] = predict_step(tape, params, static_cast<int>(best), hyp.state);
      hyp.s = s;
      hyp.state = std::move(st2);
    }
  }
  return GreedyResult{std::move(hyp.prefix), hyp.log_prob};
}

std::vector<int> greedy_decode(ModelParams& params, const Tensor& features,
                               std::size_t u_max) {
  return greedy_decode_scored(params, features, u_max).tokens;
}

}  // namespace attrans
