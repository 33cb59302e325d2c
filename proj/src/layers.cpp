// attrans/layers.cpp
//
// Copyright 2026 The attrans Authors
// Licensed under the Apache License, Version 2.0

#include "attrans/layers.hpp"

#include <cmath>

namespace attrans {

namespace {

void init_uniform(Parameter& p, std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& x : p.value.data()) x = dist(rng);
}

}  // namespace

LstmCellParams::LstmCellParams(const std::string& prefix, std::size_t input_dim,
                               std::size_t hidden_dim)
    : input_dim(input_dim),
      hidden_dim(hidden_dim),
      wi(prefix + ".wi", {hidden_dim, input_dim + hidden_dim}),
      wf(prefix + ".wf", {hidden_dim, input_dim + hidden_dim}),
      wg(prefix + ".wg", {hidden_dim, input_dim + hidden_dim}),
      wo(prefix + ".wo", {hidden_dim, input_dim + hidden_dim}),
      bi(prefix + ".bi", {hidden_dim}),
      bf(prefix + ".bf", {hidden_dim}),
      bg(prefix + ".bg", {hidden_dim}),
      bo(prefix + ".bo", {hidden_dim}) {
  require(input_dim >= 1, "LstmCellParams: input_dim must be positive");
  require(hidden_dim >= 1, "LstmCellParams: hidden_dim must be positive");
}

void LstmCellParams::init(std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(input_dim + hidden_dim));
  for (Parameter* w : {&wi, &wf, &wg, &wo}) init_uniform(*w, rng, bound);
  bi.value.fill(0.0);
  bf.value.fill(1.0);  // open forget gate at start of training
  bg.value.fill(0.0);
  bo.value.fill(0.0);
}

void LstmCellParams::collect(std::vector<Parameter*>& out) {
  for (Parameter* p : {&wi, &wf, &wg, &wo, &bi, &bf, &bg, &bo}) out.push_back(p);
}

LstmState zero_lstm_state(Tape& tape, std::size_t hidden_dim) {
  return LstmState{tape.constant(Tensor({hidden_dim})),
                   tape.constant(Tensor({hidden_dim}))};
}

LstmState lstm_step(Tape& tape, LstmCellParams& params, Value x,
                    const LstmState& state) {
  require(tape.value(x).size() == params.input_dim,
          "lstm_step: input dimension mismatch");
  require(tape.value(state.h).size() == params.hidden_dim,
          "lstm_step: state dimension mismatch");
  Value xs[] = {x, state.h};
  Value xh = tape.concat(xs);
  Value i = tape.sigmoid(tape.add(tape.matvec(tape.param(params.wi), xh),
                                  tape.param(params.bi)));
  Value f = tape.sigmoid(tape.add(tape.matvec(tape.param(params.wf), xh),
                                  tape.param(params.bf)));
  Value g = tape.tanh(tape.add(tape.matvec(tape.param(params.wg), xh),
                               tape.param(params.bg)));
  Value o = tape.sigmoid(tape.add(tape.matvec(tape.param(params.wo), xh),
                                  tape.param(params.bo)));
  Value c = tape.add(tape.mul(f, state.c), tape.mul(i, g));
  Value h = tape.mul(o, tape.tanh(c));
  return LstmState{h, c};
}

std::vector<Value> pyramid_subsample(std::span<const Value> seq) {
  require(seq.size() >= 2, "utterance too short");
  std::vector<Value> out;
  out.reserve(seq.size() / 2);
  for (std::size_t i = 0; i + 1 < seq.size(); i += 2) {
    Tape* tape = seq[i].tape;
    Value pair[] = {seq[i], seq[i + 1]};
    out.push_back(tape->concat(pair));
  }
  return out;
}

LayerNormParams::LayerNormParams(const std::string& prefix, std::size_t d,
                                 double epsilon)
    : epsilon(epsilon),
      gain(prefix + ".gain", {d}),
      bias(prefix + ".bias", {d}) {
  require(d >= 2, "LayerNormParams: dimension must be at least 2");
  require(epsilon > 0.0, "LayerNormParams: epsilon must be positive");
}

void LayerNormParams::init() {
  gain.value.fill(1.0);
  bias.value.fill(0.0);
}

void LayerNormParams::collect(std::vector<Parameter*>& out) {
  out.push_back(&gain);
  out.push_back(&bias);
}

Value layer_norm(Tape& tape, LayerNormParams& params, Value x) {
  return tape.layer_norm(x, tape.param(params.gain), tape.param(params.bias),
                         params.epsilon);
}

SelfAttentionParams::SelfAttentionParams(const std::string& prefix,
                                         std::size_t d, std::size_t n_att,
                                         std::size_t context_len,
                                         double ln_epsilon)
    : d(d), n_att(n_att), context_len(context_len), ln(prefix + ".ln", d, ln_epsilon) {
  require(n_att >= 1, "SelfAttentionParams: need at least one head");
  require(d % n_att == 0, "SelfAttentionParams: d must be divisible by n_att");
  std::size_t dh = d / n_att;
  for (std::size_t a = 0; a < n_att; ++a) {
    std::string idx = std::to_string(a);
    q.emplace_back(prefix + ".q" + idx, std::vector<std::size_t>{dh, d});
    k.emplace_back(prefix + ".k" + idx, std::vector<std::size_t>{dh, d});
    v.emplace_back(prefix + ".v" + idx, std::vector<std::size_t>{dh, d});
  }
}

void SelfAttentionParams::init(std::mt19937_64& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t a = 0; a < n_att; ++a) {
    init_uniform(q[a], rng, bound);
    init_uniform(k[a], rng, bound);
    init_uniform(v[a], rng, bound);
  }
  ln.init();
}

void SelfAttentionParams::collect(std::vector<Parameter*>& out) {
  for (std::size_t a = 0; a < n_att; ++a) {
    out.push_back(&q[a]);
    out.push_back(&k[a]);
    out.push_back(&v[a]);
  }
  ln.collect(out);
}

LocalAttentionStream::LocalAttentionStream(Tape& tape,
                                           SelfAttentionParams& params,
                                           AttentionProbe* probe)
    : tape_(tape),
      params_(params),
      probe_(probe),
      kproj_(params.n_att),
      vproj_(params.n_att) {}

void LocalAttentionStream::push(Value frame) {
  require(tape_.value(frame).size() == params_.d,
          "local self-attention: frame dimension mismatch");
  frames_.push_back(frame);
  for (std::size_t a = 0; a < params_.n_att; ++a) {
    kproj_[a].push_back(tape_.matvec(tape_.param(params_.k[a]), frame));
    vproj_[a].push_back(tape_.matvec(tape_.param(params_.v[a]), frame));
  }
}

Value LocalAttentionStream::attend(std::size_t t) {
  std::size_t tau = params_.context_len;
  std::size_t lo = t >= tau ? t - tau : 0;
  std::size_t hi = std::min(t + tau, frames_.size() - 1);
  double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(params_.head_dim()));

  std::vector<Value> head_outs;
  head_outs.reserve(params_.n_att);
  for (std::size_t a = 0; a < params_.n_att; ++a) {
    Value qt = tape_.matvec(tape_.param(params_.q[a]), frames_[t]);
    std::vector<Value> scores;
    scores.reserve(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i) {
      scores.push_back(tape_.dot(qt, kproj_[a][i]));
    }
    Value alpha = tape_.softmax(tape_.scale(tape_.concat(scores), inv_sqrt));
    if (probe_) {
      auto w = tape_.value(alpha).data();
      probe_->weights.emplace_back(w.begin(), w.end());
    }
    head_outs.push_back(tape_.weighted_sum(
        alpha, std::span<const Value>(vproj_[a].data() + lo, hi - lo + 1)));
  }
  Value context = tape_.concat(head_outs);
  return layer_norm(tape_, params_.ln, tape_.add(context, frames_[t]));
}

std::vector<Value> LocalAttentionStream::take_ready() {
  std::vector<Value> out;
  while (emitted_ + params_.context_len < frames_.size()) {
    out.push_back(attend(emitted_++));
  }
  return out;
}

std::vector<Value> LocalAttentionStream::flush() {
  std::vector<Value> out;
  while (emitted_ < frames_.size()) {
    out.push_back(attend(emitted_++));
  }
  return out;
}

std::vector<Value> local_self_attention(Tape& tape, SelfAttentionParams& params,
                                        std::span<const Value> seq,
                                        AttentionProbe* probe) {
  LocalAttentionStream stream(tape, params, probe);
  for (Value v : seq) stream.push(v);
  std::vector<Value> out = stream.take_ready();
  for (Value v : stream.flush()) out.push_back(v);
  return out;
}

}  // namespace attrans
