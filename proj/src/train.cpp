// attrans/train.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>

#include "attrans/checkpoint.hpp"
#include "attrans/stream.hpp"

namespace attrans {

TrainConfig TrainConfig::from_map(const KeyValues& kv) {
  TrainConfig cfg;
  cfg.steps = get_size(kv, "train.steps", cfg.steps);
  cfg.batch_frames = get_size(kv, "train.batch_frames", cfg.batch_frames);
  cfg.lr = get_double(kv, "train.lr", cfg.lr);
  cfg.clip_norm = get_double(kv, "train.clip_norm", cfg.clip_norm);
  cfg.p_ss = get_double(kv, "train.p_ss", cfg.p_ss);
  cfg.checkpoint_every = get_size(kv, "train.checkpoint_every", cfg.checkpoint_every);
  cfg.seed = get_u64(kv, "train.seed", cfg.seed);
  cfg.deterministic = get_size(kv, "train.deterministic", 1) != 0;
  return cfg;
}

Adam::Adam(std::vector<Parameter*> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step(double lr) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto g = params_[i]->grad.data();
    auto w = params_[i]->value.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t j = 0; j < g.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      double mh = m[j] / bc1;
      double vh = v[j] / bc2;
      w[j] -= lr * mh / (std::sqrt(vh) + eps_);
    }
  }
}

double clip_gradients(std::span<Parameter* const> params, double max_norm) {
  require(max_norm > 0.0, "clip_gradients: max_norm must be positive");
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.data()) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (norm > max_norm) {
    double s = max_norm / norm;
    for (Parameter* p : params) {
      for (double& g : p->grad.data()) g *= s;
    }
  }
  return norm;
}

Value utterance_loss(Tape& tape, ModelParams& params, const Utterance& utt,
                     double p_ss, std::mt19937_64* ss_rng, LossResult* result) {
  require(p_ss == 0.0 || ss_rng != nullptr,
          "utterance_loss: scheduled sampling needs an RNG");
  std::vector<Value> enc = encode(tape, params, utt.features);
  ChunkedEncoderOutput chunked =
      chunk_encoder_outputs(enc, params.config.chunk_width);

  const std::size_t U = utt.tokens.size();
  std::vector<Value> s(U + 1);
  auto [s0, state] = predict_start(tape, params);
  s[0] = s0;
  for (std::size_t u = 1; u <= U; ++u) {
    int fed = utt.tokens[u - 1];
    if (p_ss > 0.0) fed = scheduled_sample(fed, params.config.vocab, p_ss, *ss_rng);
    auto [su, next] = predict_step(tape, params, fed, state);
    s[u] = su;
    state = std::move(next);
  }

  std::vector<std::vector<Value>> logits(chunked.chunks.size());
  for (std::size_t c = 0; c < chunked.chunks.size(); ++c) {
    ChunkContext ctx = make_chunk_context(tape, params, chunked.chunks[c]);
    logits[c].reserve(U + 1);
    for (std::size_t u = 0; u <= U; ++u) {
      logits[c].push_back(joint_logits(tape, params, ctx, s[u]));
    }
  }
  return transducer_nll(tape, logits, utt.tokens, result);
}

TrainResult train(ModelParams& params, const std::vector<Utterance>& dataset,
                  const TrainConfig& cfg, const std::string& checkpoint_path,
                  std::ostream* progress) {
  require(!dataset.empty(), "train: empty dataset");
  require(cfg.batch_frames >= 1, "train: batch_frames must be positive");
  Adam opt(params.all());
  std::mt19937_64 order_rng(cfg.seed);
  std::mt19937_64 ss_rng(cfg.seed ^ 0x5deece66dull);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();  // forces a shuffle on first use

  TrainResult result;
  std::vector<Parameter*> all = params.all();
  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    params.zero_grad();
    std::size_t frames = 0, count = 0;
    double loss_sum = 0.0;
    while (frames < cfg.batch_frames) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      const Utterance& utt = dataset[order[cursor++]];
      Tape tape;
      Value loss = utterance_loss(tape, params, utt, cfg.p_ss, &ss_rng);
      double nll = tape.value(loss)[0];
      if (!std::isfinite(nll)) {
        throw std::runtime_error("train: loss diverged (non-finite nll) at step " +
                                 std::to_string(step));
      }
      tape.backward(loss);
      loss_sum += nll;
      frames += utt.features.rows();
      ++count;
    }
    double inv = 1.0 / static_cast<double>(count);
    for (Parameter* p : all) {
      for (double& g : p->grad.data()) g *= inv;
    }
    clip_gradients(all, cfg.clip_norm);
    opt.step(cfg.lr);

    double mean_loss = loss_sum * inv;
    result.log.push_back(StepLog{step, mean_loss});
    if (progress) {
      (*progress) << "step " << step << " loss " << mean_loss << "\n";
    }
    if (!checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        step % cfg.checkpoint_every == 0) {
      save_params(checkpoint_path, params);
    }
  }
  if (!checkpoint_path.empty()) save_params(checkpoint_path, params);
  return result;
}

TerResult token_error_rate(std::span<const int> hyp, std::span<const int> ref) {
  const std::size_t n = ref.size(), m = hyp.size();
  // dist[i][j]: edit distance ref[0..i) -> hyp[0..j).
  std::vector<std::size_t> dist((n + 1) * (m + 1));
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 0; i <= n; ++i) dist[at(i, 0)] = i;
  for (std::size_t j = 0; j <= m; ++j) dist[at(0, j)] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = dist[at(i - 1, j - 1)] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      std::size_t del = dist[at(i - 1, j)] + 1;
      std::size_t ins = dist[at(i, j - 1)] + 1;
      dist[at(i, j)] = std::min({sub, del, ins});
    }
  }
  // Backtrace, preferring match/substitution, then deletion, then insertion.
  TerResult r;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        dist[at(i, j)] == dist[at(i - 1, j - 1)] + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1]) ++r.sub;
      --i;
      --j;
    } else if (i > 0 && dist[at(i, j)] == dist[at(i - 1, j)] + 1) {
      ++r.del;
      --i;
    } else {
      ++r.ins;
      --j;
    }
  }
  std::size_t errors = r.ins + r.del + r.sub;
  r.rate = n == 0 ? static_cast<double>(r.ins)
                  : static_cast<double>(errors) / static_cast<double>(n);
  return r;
}

namespace {

EvalResult aggregate(ModelParams& params, std::span<const Utterance> testset,
                     std::optional<std::size_t> beam_size, std::size_t u_max) {
  EvalResult out;
  std::size_t ref_len = 0;
  for (const Utterance& utt : testset) {
    std::vector<int> hyp;
    if (beam_size) {
      hyp = decode_utterance(params, utt.features, *beam_size).tokens;
    } else {
      hyp = greedy_decode(params, utt.features, u_max);
    }
    TerResult ter = token_error_rate(hyp, utt.tokens);
    out.totals.ins += ter.ins;
    out.totals.del += ter.del;
    out.totals.sub += ter.sub;
    ref_len += utt.tokens.size();
  }
  std::size_t errors = out.totals.ins + out.totals.del + out.totals.sub;
  require(ref_len > 0, "evaluate: empty references");
  out.totals.rate = static_cast<double>(errors) / static_cast<double>(ref_len);
  out.token_accuracy = 1.0 - out.totals.rate;
  return out;
}

}  // namespace

EvalResult evaluate_greedy(ModelParams& params, std::span<const Utterance> testset,
                           std::size_t u_max) {
  return aggregate(params, testset, std::nullopt, u_max);
}

EvalResult evaluate_beam(ModelParams& params, std::span<const Utterance> testset,
                         std::size_t beam_size, std::size_t u_max) {
  return aggregate(params, testset, beam_size, u_max);
}

std::vector<ErrorBreakdownRow> error_breakdown_report(
    ModelParams& model_a, ModelParams& model_b,
    std::span<const Utterance> testset, std::size_t beam_size, std::size_t u_max) {
  std::vector<ErrorBreakdownRow> rows;
  ModelParams* models[2] = {&model_a, &model_b};
  const char* labels[2] = {"model_a", "model_b"};
  for (int i = 0; i < 2; ++i) {
    EvalResult r = evaluate_beam(*models[i], testset, beam_size, u_max);
    rows.push_back(ErrorBreakdownRow{labels[i], r.totals.ins, r.totals.del,
                                     r.totals.sub, r.totals.rate});
  }
  return rows;
}

}  // namespace attrans
